//! Desk-scale stand-in for a segmentation training stack: synthetic volumes
//! with known labels, and a bootstrap k-NN ensemble that learns from
//! annotated voxels only.

mod features;
mod kdtree;
mod learner;
mod synth;

pub use features::{voxel_features, FeatureFlags, FEATURE_COUNT};
pub use kdtree::KdTree;
pub use learner::{
    predict_labels, KnnEnsembleLearner, Learner, LearnerConfig, LearnerKind, SegmentationModel,
    TrainedModel, TrainingImage, DISTANCE_EPS,
};
pub use synth::{generate_dataset, rasterize, Blob, SyntheticDataset, SyntheticSpec};

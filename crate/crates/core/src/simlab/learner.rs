use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::{voxel_features, FeatureFlags, FEATURE_COUNT};
use super::kdtree::KdTree;
use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::volumes::{AnnotationMask, EnsembleProbabilityStack, LabelVolume, Volume, UNLABELED};

/// Added to neighbour distances before inverting them into vote weights.
pub const DISTANCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    KnnEnsemble,
}

fn default_kind() -> LearnerKind {
    LearnerKind::KnnEnsemble
}
fn default_members() -> usize {
    5
}
fn default_k() -> usize {
    7
}
fn default_coord_weight() -> f32 {
    1.0
}
fn default_fraction() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    #[serde(default = "default_kind")]
    pub kind: LearnerKind,
    #[serde(default = "default_members")]
    pub ensemble_size: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub features: FeatureFlags,
    /// Multiplier on the normalized coordinate features.
    #[serde(default = "default_coord_weight")]
    pub coord_weight: f32,
    /// Share of annotated voxels kept for training (the training-length knob).
    #[serde(default = "default_fraction")]
    pub training_fraction: f64,
    /// Upper bound on distinct training samples after subsampling.
    #[serde(default)]
    pub max_train_samples: Option<usize>,
    /// Resample each member's training set with replacement.
    #[serde(default = "yes")]
    pub bootstrap: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            ensemble_size: default_members(),
            k: default_k(),
            features: FeatureFlags::default(),
            coord_weight: default_coord_weight(),
            training_fraction: default_fraction(),
            max_train_samples: None,
            bootstrap: true,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 || self.k == 0 {
            return Err(Error::InvalidConfig("ensemble size and k must be >= 1".into()));
        }
        if !(self.training_fraction > 0.0 && self.training_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "training fraction {} outside (0,1]",
                self.training_fraction
            )));
        }
        if !self.features.mask().contains(&true) {
            return Err(Error::InvalidConfig("no features enabled".into()));
        }
        if self.max_train_samples == Some(0) {
            return Err(Error::InvalidConfig("max_train_samples must be >= 1".into()));
        }
        Ok(())
    }
}

/// One image as seen by a learner. `labels` may be a partial view; only
/// voxels inside `mask` that are not [`UNLABELED`] are ever read.
#[derive(Debug, Clone, Copy)]
pub struct TrainingImage<'a> {
    pub image: &'a Volume<f32>,
    pub mask: &'a AnnotationMask,
    pub labels: &'a LabelVolume,
}

pub trait SegmentationModel {
    fn num_classes(&self) -> usize;
    fn predict_ensemble(&self, image: &Volume<f32>) -> Result<EnsembleProbabilityStack>;
}

/// Produces a fresh model from the current annotation. `seed` and
/// `loop_index` key every random stream the learner uses.
pub trait Learner {
    type Model: SegmentationModel + Send + Sync;

    fn fit(&self, data: &[TrainingImage<'_>], seed: u64, loop_index: u64) -> Result<Self::Model>;
}

/// Argmax of the member-mean distribution; ties go to the lowest class id.
pub fn predict_labels(stack: &EnsembleProbabilityStack) -> Result<LabelVolume> {
    let n = stack.shape().voxel_count();
    let (e, c) = (stack.members(), stack.classes());
    if e == 0 {
        return Err(Error::DegenerateStack);
    }
    let mut data = Vec::with_capacity(n);
    for v in 0..n {
        let mut best = (0u8, f64::NEG_INFINITY);
        for class in 0..c {
            let mean = (0..e).map(|m| stack.prob(m, class, v) as f64).sum::<f64>() / e as f64;
            if mean > best.1 {
                best = (class as u8, mean);
            }
        }
        data.push(best.0);
    }
    let classes = u8::try_from(c.max(2)).map_err(|_| Error::InvalidVolume(format!("{c} classes")))?;
    LabelVolume::new(Volume::new(stack.shape(), data)?, classes)
}

/// Bootstrap ensemble of inverse-distance-weighted k-NN voxel classifiers.
#[derive(Debug, Clone, Default)]
pub struct KnnEnsembleLearner {
    pub config: LearnerConfig,
}

impl KnnEnsembleLearner {
    pub fn new(config: LearnerConfig) -> Self {
        Self { config }
    }
}

#[derive(Debug, Clone)]
struct Normalizer {
    active: Vec<usize>,
    mean: Vec<f32>,
    scale: Vec<f32>,
}

impl Normalizer {
    fn apply(&self, raw: &[f32], out: &mut [f32]) {
        for (j, &f) in self.active.iter().enumerate() {
            out[j] = (raw[f] - self.mean[j]) * self.scale[j];
        }
    }
}

/// Fitted k-NN ensemble. Distinct training samples are shared by all
/// members; each member holds its bootstrap multiplicity per sample.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    k: usize,
    num_classes: usize,
    labels: Vec<u8>,
    origins: Vec<(u32, u32)>,
    multiplicity: Vec<Vec<u32>>,
    normalizer: Normalizer,
    tree: KdTree,
}

impl TrainedModel {
    pub fn members(&self) -> usize {
        self.multiplicity.len()
    }

    pub fn distinct_samples(&self) -> usize {
        self.labels.len()
    }

    /// Size of member `m`'s (multi-)set of training samples.
    pub fn member_sample_count(&self, m: usize) -> usize {
        self.multiplicity[m].iter().map(|&c| c as usize).sum()
    }

    /// `(training image index, flat voxel index)` of every distinct sample.
    pub fn sample_origins(&self) -> &[(u32, u32)] {
        &self.origins
    }

    pub fn sample_labels(&self) -> &[u8] {
        &self.labels
    }

    fn member_votes(
        &self,
        neighbours: &[(f32, u32)],
        member: usize,
        votes: &mut [f64],
    ) -> bool {
        votes.iter_mut().for_each(|v| *v = 0.0);
        let counts = &self.multiplicity[member];
        let mut taken = 0usize;
        for &(d2, i) in neighbours {
            let c = counts[i as usize] as usize;
            if c == 0 {
                continue;
            }
            let use_n = c.min(self.k - taken);
            let w = 1.0 / ((d2 as f64).sqrt() + DISTANCE_EPS);
            votes[self.labels[i as usize] as usize] += w * use_n as f64;
            taken += use_n;
            if taken == self.k {
                return true;
            }
        }
        false
    }
}

impl SegmentationModel for TrainedModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict_ensemble(&self, image: &Volume<f32>) -> Result<EnsembleProbabilityStack> {
        let shape = image.shape();
        let n = shape.voxel_count();
        let (e, c) = (self.members(), self.num_classes);
        let raw = voxel_features(image);
        let dims = self.normalizer.active.len();
        let total = self.distinct_samples();

        // Per voxel: `[member][class]` probabilities, gathered in voxel order.
        let per_voxel: Vec<Vec<f32>> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![0f32; dims], Vec::new(), vec![0f64; c]),
                |(q, neigh, votes), v| {
                    self.normalizer.apply(&raw[v * FEATURE_COUNT..(v + 1) * FEATURE_COUNT], q);
                    let mut want = (2 * self.k + 8).min(total);
                    let mut out = vec![0f32; e * c];
                    'search: loop {
                        self.tree.nearest(q, want, neigh);
                        for m in 0..e {
                            let complete = self.member_votes(neigh, m, votes);
                            if !complete && want < total {
                                want = (want * 4).min(total);
                                continue 'search;
                            }
                            let sum: f64 = votes.iter().sum();
                            for (class, &vote) in votes.iter().enumerate() {
                                out[m * c + class] = (vote / sum) as f32;
                            }
                        }
                        break;
                    }
                    out
                },
            )
            .collect();

        let mut data = vec![0f32; e * c * n];
        for (v, probs) in per_voxel.into_iter().enumerate() {
            for m in 0..e {
                for class in 0..c {
                    data[(m * c + class) * n + v] = probs[m * c + class];
                }
            }
        }
        EnsembleProbabilityStack::new(e, c, shape, data)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Per-voxel priority, fixed for a seed. Selecting by priority keeps the
/// training set monotone in the annotation mask.
fn voxel_priority(seed: u64, image: u32, voxel: u32) -> u64 {
    splitmix64(splitmix64(seed ^ 0x5eed) ^ ((image as u64) << 32 | voxel as u64))
}

impl Learner for KnnEnsembleLearner {
    type Model = TrainedModel;

    fn fit(&self, data: &[TrainingImage<'_>], seed: u64, loop_index: u64) -> Result<TrainedModel> {
        let cfg = &self.config;
        cfg.validate()?;
        let num_classes = data
            .iter()
            .map(|d| d.labels.num_classes() as usize)
            .max()
            .ok_or(Error::NoAnnotation)?;

        // Distinct annotated voxels, in (image, voxel) order.
        let mut picked: Vec<(u64, u32, u32)> = Vec::new();
        let threshold = cfg.training_fraction;
        for (img, d) in data.iter().enumerate() {
            if d.image.shape() != d.mask.shape() || d.labels.shape() != d.mask.shape() {
                return Err(Error::ShapeMismatch(d.image.shape().dims(), d.mask.shape().dims()));
            }
            for (v, &annotated) in d.mask.voxels().iter().enumerate() {
                if !annotated || d.labels.data()[v] == UNLABELED {
                    continue;
                }
                let p = voxel_priority(seed, img as u32, v as u32);
                if threshold < 1.0 && (p as f64 / u64::MAX as f64) >= threshold {
                    continue;
                }
                picked.push((p, img as u32, v as u32));
            }
        }
        if picked.is_empty() {
            return Err(Error::NoAnnotation);
        }
        if let Some(cap) = cfg.max_train_samples {
            if picked.len() > cap {
                picked.select_nth_unstable_by_key(cap - 1, |e| e.0);
                picked.truncate(cap);
                picked.sort_unstable_by_key(|e| (e.1, e.2));
            }
        }

        let raw_by_image: Vec<Option<Vec<f32>>> = {
            let mut used = vec![false; data.len()];
            picked.iter().for_each(|e| used[e.1 as usize] = true);
            data.iter()
                .zip(used)
                .map(|(d, u)| u.then(|| voxel_features(d.image)))
                .collect()
        };
        let raw_sample = |img: u32, v: u32| {
            let f = raw_by_image[img as usize].as_ref().unwrap();
            &f[v as usize * FEATURE_COUNT..(v as usize + 1) * FEATURE_COUNT]
        };

        let mask = cfg.features.mask();
        let active: Vec<usize> = (0..FEATURE_COUNT).filter(|&f| mask[f]).collect();
        let n = picked.len();
        let mut mean = vec![0f64; active.len()];
        let mut sq = vec![0f64; active.len()];
        for &(_, img, v) in &picked {
            let raw = raw_sample(img, v);
            for (j, &f) in active.iter().enumerate() {
                mean[j] += raw[f] as f64;
                sq[j] += (raw[f] as f64).powi(2);
            }
        }
        let mut scale = Vec::with_capacity(active.len());
        for (j, &f) in active.iter().enumerate() {
            mean[j] /= n as f64;
            let var = (sq[j] / n as f64 - mean[j] * mean[j]).max(0.0);
            let sd = var.sqrt();
            let base = if sd > 1e-6 { 1.0 / sd } else { 1.0 };
            let weight = if f >= 2 { cfg.coord_weight as f64 } else { 1.0 };
            scale.push((base * weight) as f32);
        }
        let normalizer = Normalizer {
            active,
            mean: mean.iter().map(|&m| m as f32).collect(),
            scale,
        };

        let dims = normalizer.active.len();
        let mut points = vec![0f32; n * dims];
        let mut labels = Vec::with_capacity(n);
        let mut origins = Vec::with_capacity(n);
        for (s, &(_, img, v)) in picked.iter().enumerate() {
            normalizer.apply(raw_sample(img, v), &mut points[s * dims..(s + 1) * dims]);
            labels.push(data[img as usize].labels.data()[v as usize]);
            origins.push((img, v));
        }

        let multiplicity = (0..cfg.ensemble_size)
            .map(|m| {
                if cfg.bootstrap {
                    let mut rng = stream(seed, loop_index, Purpose::Bootstrap, m as u64);
                    let mut counts = vec![0u32; n];
                    for _ in 0..n {
                        counts[rng.random_range(0..n)] += 1;
                    }
                    counts
                } else {
                    vec![1u32; n]
                }
            })
            .collect();

        Ok(TrainedModel {
            k: cfg.k,
            num_classes,
            labels,
            origins,
            multiplicity,
            normalizer,
            tree: KdTree::build(points, dims),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dice_per_image;
    use crate::simlab::{generate_dataset, SyntheticSpec};
    use crate::uncertainty::bald;
    use crate::volumes::{PatchBox, Shape};

    fn tiny() -> (Volume<f32>, LabelVolume) {
        let s = Shape::new(4, 6, 6).unwrap();
        let mut lab = Volume::filled(s, 0u8);
        for z in 1..3 {
            for y in 1..4 {
                for x in 2..5 {
                    lab.set(z, y, x, 1);
                }
            }
        }
        let img = Volume::new(s, lab.data().iter().map(|&c| c as f32).collect()).unwrap();
        (img, LabelVolume::new(lab, 2).unwrap())
    }

    #[test]
    fn full_coverage_member_size() {
        let (img, lab) = tiny();
        let mask = AnnotationMask::full("a", img.shape());
        let model = KnnEnsembleLearner::default()
            .fit(&[TrainingImage { image: &img, mask: &mask, labels: &lab }], 1, 0)
            .unwrap();
        assert_eq!(model.member_sample_count(0), img.shape().voxel_count());
        assert_eq!(model.members(), 5);
    }

    #[test]
    fn one_nn_memorizes_training_voxels() {
        let (img, lab) = tiny();
        let mask = AnnotationMask::new("a", img.shape())
            .union(PatchBox::new([0, 0, 0], [4, 3, 6]))
            .unwrap();
        let cfg = LearnerConfig {
            ensemble_size: 1,
            k: 1,
            bootstrap: false,
            ..Default::default()
        };
        let model = KnnEnsembleLearner::new(cfg)
            .fit(&[TrainingImage { image: &img, mask: &mask, labels: &lab }], 3, 0)
            .unwrap();
        let stack = model.predict_ensemble(&img).unwrap();
        for p in stack.data() {
            assert!(*p == 0.0 || *p == 1.0);
        }
        let pred = predict_labels(&stack).unwrap();
        for (i, &m) in mask.voxels().iter().enumerate() {
            if m {
                assert_eq!(pred.data()[i], lab.data()[i]);
            }
        }
    }

    #[test]
    fn equidistant_pair_splits_votes() {
        let s = Shape::new(1, 1, 3).unwrap();
        let img = Volume::new(s, vec![0.0, 0.5, 1.0]).unwrap();
        let lab = LabelVolume::new(Volume::new(s, vec![0, 1, 1]).unwrap(), 2).unwrap();
        let mask = AnnotationMask::new("a", s)
            .union(PatchBox::new([0, 0, 0], [1, 1, 1]))
            .unwrap()
            .union(PatchBox::new([0, 0, 2], [1, 1, 1]))
            .unwrap();
        let cfg = LearnerConfig {
            ensemble_size: 1,
            k: 2,
            bootstrap: false,
            features: FeatureFlags {
                intensity: true,
                smoothed: false,
                coords: false,
            },
            ..Default::default()
        };
        let model = KnnEnsembleLearner::new(cfg)
            .fit(&[TrainingImage { image: &img, mask: &mask, labels: &lab }], 0, 0)
            .unwrap();
        let stack = model.predict_ensemble(&img).unwrap();
        assert!((stack.prob(0, 0, 1) - 0.5).abs() < 1e-6);
        assert!((stack.prob(0, 1, 1) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn no_annotation_errors() {
        let (img, lab) = tiny();
        let mask = AnnotationMask::new("a", img.shape());
        let err = KnnEnsembleLearner::default()
            .fit(&[TrainingImage { image: &img, mask: &mask, labels: &lab }], 0, 0)
            .unwrap_err();
        assert!(matches!(err, Error::NoAnnotation));
    }

    #[test]
    fn single_seen_class_predicts_it_everywhere() {
        let (img, lab) = tiny();
        let mask = AnnotationMask::new("a", img.shape())
            .union(PatchBox::new([3, 0, 0], [1, 6, 6]))
            .unwrap();
        let model = KnnEnsembleLearner::default()
            .fit(&[TrainingImage { image: &img, mask: &mask, labels: &lab }], 0, 0)
            .unwrap();
        let pred = predict_labels(&model.predict_ensemble(&img).unwrap()).unwrap();
        assert!(pred.data().iter().all(|&c| c == 0));
    }

    #[test]
    fn argmax_ties_and_scan_oracle() {
        let s = Shape::new(1, 1, 2).unwrap();
        let stack = EnsembleProbabilityStack::new(1, 2, s, vec![0.7, 0.5, 0.3, 0.5]).unwrap();
        assert_eq!(predict_labels(&stack).unwrap().data(), &[0, 0]);

        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let s = Shape::new(2, 3, 4).unwrap();
        let (e, c, n) = (3, 4, 24);
        let mut data = vec![0f32; e * c * n];
        for m in 0..e {
            for v in 0..n {
                let raw: Vec<f32> = (0..c).map(|_| rng.random::<f32>() + 0.01).collect();
                let t: f32 = raw.iter().sum();
                for k in 0..c {
                    data[(m * c + k) * n + v] = raw[k] / t;
                }
            }
        }
        let stack = EnsembleProbabilityStack::new(e, c, s, data.clone()).unwrap();
        let pred = predict_labels(&stack).unwrap();
        for v in 0..n {
            let sums: Vec<f64> = (0..c)
                .map(|k| (0..e).map(|m| data[(m * c + k) * n + v] as f64).sum())
                .collect();
            let mut best = 0;
            for k in 1..c {
                if sums[k] > sums[best] {
                    best = k;
                }
            }
            assert_eq!(pred.data()[v] as usize, best);
        }
    }

    fn dataset(noise: f32) -> crate::simlab::SyntheticDataset {
        generate_dataset(&SyntheticSpec {
            num_images: 2,
            shape: [16, 16, 16],
            num_classes: 2,
            shapes_per_class: [1, 2],
            noise_std: noise,
            fg_fraction_target: 0.08,
            class_contrast: 1.0,
            instance_jitter: 0.0,
            seed: 4,
        })
        .unwrap()
    }

    fn striped_mask(id: &str, s: Shape) -> AnnotationMask {
        // Four 1-voxel-thick z slabs of 16x16: 25% of the volume.
        let mut m = AnnotationMask::new(id, s);
        for z in [1, 5, 9, 13] {
            m = m.union(PatchBox::new([z, 0, 0], [1, 16, 16])).unwrap();
        }
        m
    }

    #[test]
    fn deterministic_predictions() {
        let d = dataset(0.3);
        let mask = striped_mask("a", d.images[0].shape());
        let data = [TrainingImage { image: &d.images[0], mask: &mask, labels: &d.labels[0] }];
        let a = KnnEnsembleLearner::default().fit(&data, 5, 2).unwrap();
        let b = KnnEnsembleLearner::default().fit(&data, 5, 2).unwrap();
        assert_eq!(
            a.predict_ensemble(&d.images[1]).unwrap(),
            b.predict_ensemble(&d.images[1]).unwrap()
        );
    }

    #[test]
    fn training_samples_come_from_annotation_only() {
        let d = dataset(0.3);
        let mask = striped_mask("a", d.images[0].shape());
        let view = d.labels[0].restricted_to(&mask).unwrap();
        let data = [TrainingImage { image: &d.images[0], mask: &mask, labels: &view }];
        let model = KnnEnsembleLearner::default().fit(&data, 1, 0).unwrap();
        for (&(img, v), &label) in model.sample_origins().iter().zip(model.sample_labels()) {
            assert_eq!(img, 0);
            assert!(mask.is_annotated(v as usize));
            assert_eq!(label, d.labels[0].data()[v as usize]);
        }
        // Same model whether the learner sees the full labels or the partial view.
        let full = [TrainingImage { image: &d.images[0], mask: &mask, labels: &d.labels[0] }];
        let model_full = KnnEnsembleLearner::default().fit(&full, 1, 0).unwrap();
        assert_eq!(
            model.predict_ensemble(&d.images[1]).unwrap(),
            model_full.predict_ensemble(&d.images[1]).unwrap()
        );
    }

    #[test]
    fn more_annotation_never_fewer_samples() {
        let d = dataset(0.3);
        let s = d.images[0].shape();
        let cfg = LearnerConfig {
            training_fraction: 0.4,
            max_train_samples: Some(300),
            ..Default::default()
        };
        let mut mask = AnnotationMask::new("a", s);
        let mut last = 0;
        for z in 0..8 {
            mask = mask.union(PatchBox::new([2 * z, 0, 0], [1, 16, 8])).unwrap();
            let data = [TrainingImage { image: &d.images[0], mask: &mask, labels: &d.labels[0] }];
            let n = KnnEnsembleLearner::new(cfg.clone()).fit(&data, 0, 0).unwrap().distinct_samples();
            assert!(n >= last);
            last = n;
        }
        assert_eq!(last, 300);
    }

    /// Three full z slabs plus a 4-row strip: 832 of 4096 voxels (20.3%).
    fn fifth_mask(id: &str, s: Shape) -> AnnotationMask {
        let mut m = AnnotationMask::new(id, s);
        for z in [2, 7, 12] {
            m = m.union(PatchBox::new([z, 0, 0], [1, 16, 16])).unwrap();
        }
        m.union(PatchBox::new([14, 6, 0], [1, 4, 16])).unwrap()
    }

    #[test]
    fn noise_free_pipeline_segments_well() {
        let d = dataset(0.0);
        let s = d.images[0].shape();
        let masks: Vec<_> = (0..2).map(|i| fifth_mask(&d.ids[i], s)).collect();
        assert_eq!(masks[0].annotated_count(), 832);
        let data: Vec<_> = (0..2)
            .map(|i| TrainingImage { image: &d.images[i], mask: &masks[i], labels: &d.labels[i] })
            .collect();
        let model = KnnEnsembleLearner::default().fit(&data, 0, 0).unwrap();
        for i in 0..2 {
            let pred = predict_labels(&model.predict_ensemble(&d.images[i]).unwrap()).unwrap();
            let dice = dice_per_image(&pred, &d.labels[i]).unwrap();
            println!("noise-free dice image {i}: {dice:.4}");
            assert!(dice >= 0.95, "image {i}: dice {dice}");
        }
    }

    #[test]
    fn bald_positive_with_subsampling_zero_without_bootstrap() {
        let d = dataset(0.4);
        let mask = striped_mask("a", d.images[0].shape());
        let data = [TrainingImage { image: &d.images[0], mask: &mask, labels: &d.labels[0] }];
        let heavy = LearnerConfig {
            training_fraction: 0.05,
            ..Default::default()
        };
        let model = KnnEnsembleLearner::new(heavy).fit(&data, 0, 0).unwrap();
        let b = bald(&model.predict_ensemble(&d.images[1]).unwrap()).unwrap();
        let mean: f64 = b.values.data().iter().map(|&v| v as f64).sum::<f64>() / b.values.data().len() as f64;
        assert!(mean > 0.0);

        let identical = LearnerConfig {
            bootstrap: false,
            ..Default::default()
        };
        let model = KnnEnsembleLearner::new(identical).fit(&data, 0, 0).unwrap();
        let b = bald(&model.predict_ensemble(&d.images[1]).unwrap()).unwrap();
        assert!(b.values.data().iter().all(|&v| v == 0.0));
    }
}

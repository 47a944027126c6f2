use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bad magic: expected NAVOL001")]
    BadMagic,
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("volume contains NaN or infinite values")]
    NonFiniteData,
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid volume: {0}")]
    InvalidVolume(String),
    #[error("box {origin:?}+{size:?} lies outside image of shape {shape:?}")]
    OutOfBounds {
        origin: [usize; 3],
        size: [usize; 3],
        shape: [usize; 3],
    },
    #[error("ensemble stack has no members")]
    DegenerateStack,
    #[error("patch {patch:?} is larger than image {shape:?}")]
    PatchLargerThanImage { patch: [usize; 3], shape: [usize; 3] },
    #[error("score field is empty")]
    EmptyField,
    #[error("cannot place {requested} patches, only {available} available")]
    InsufficientCandidates { requested: usize, available: usize },
    #[error("starting budget of {budget} patches cannot show each of {classes} foreground classes twice")]
    StartingBudgetTooSmall { budget: usize, classes: usize },
    #[error("foreground class {0} cannot be covered by two non-overlapping patches")]
    ClassUncoverable(u8),
    #[error("synthetic spec infeasible: {0}")]
    SpecInfeasible(String),
    #[error("no annotated voxels to train on")]
    NoAnnotation,
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch([usize; 3], [usize; 3]),
    #[error("budget curve needs at least two points with distinct budgets")]
    DegenerateCurve,
    #[error("exponential fit undefined when start and full performance coincide")]
    DegenerateFit,
    #[error("sample needs at least two values, got {0}")]
    TooFewSamples(usize),
    #[error("ragged results: {0}")]
    RaggedResults(String),
    #[error("rankings do not cover the same items")]
    MismatchedItems,
    #[error("need at least 4 images to split, got {0}")]
    TooFewImages(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("refusing to rewrite completed manifest {0}")]
    ManifestConflict(PathBuf),
}

//! Patch-based active learning for 3D volumetric segmentation.
//!
//! The crate is organised bottom-up:
//!
//! * [`volumes`]: shapes, dense volumes, patch boxes, annotation masks and the
//!   `NAVOL001` container format.
//! * [`uncertainty`]: voxelwise predictive entropy, expected entropy and BALD
//!   from an ensemble probability stack.
//! * [`aggregate`]: patch-level mean scores via a 3D summed-area table.
//! * [`query`]: greedy selection with an overlap constraint, Gumbel-perturbed
//!   variants, random and foreground-aware random baselines, and the starting
//!   budget.
//! * [`simlab`]: a synthetic dataset generator and a bootstrap k-NN ensemble
//!   that trains on annotated voxels only.
//! * [`metrics`]: Dice, AUBC, FG-Eff, Welch's t-test, the pairwise penalty
//!   matrix and Kendall's tau.
//! * [`orchestrator`]: the seeded active-learning loop, manifests and reports.

pub mod aggregate;
pub mod error;
pub mod metrics;
pub mod orchestrator;
pub mod query;
pub mod rng;
pub mod simlab;
pub mod uncertainty;
pub mod volumes;

pub use error::{Error, Result};

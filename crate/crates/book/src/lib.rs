//! Compiles the guide's listings as doc-tests, one module per chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/volumes.md")]
pub mod volumes {}
#[doc = include_str!("../../../book/src/uncertainty.md")]
pub mod uncertainty {}
#[doc = include_str!("../../../book/src/aggregation.md")]
pub mod aggregation {}
#[doc = include_str!("../../../book/src/queries.md")]
pub mod queries {}
#[doc = include_str!("../../../book/src/learner.md")]
pub mod learner {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

//! Seeded end-to-end active-learning runs.
//!
//! A run splits the dataset, allocates the starting budget, then repeats
//! train, predict, score, query and annotate for a fixed number of loops.
//! Every loop persists its query as `loop_XXX.json` and refreshes
//! `results.json`; [`evaluate`] turns a set of finished runs into a report.

mod config;
mod dataset;
mod report;
mod run;

pub use config::{DatasetSource, ExperimentConfig, LabelRegime, ResolvedBudget};
pub use dataset::{load_dataset, split_dataset, write_dataset, Dataset, DatasetManifest, Split, TEST_SHARE};
pub use report::{
    evaluate, load_results, loops_csv, render_markdown, EvalOptions, KendallEntry, MethodSummary,
    write_report, Report, Stat,
};
pub use run::{run_dir, run_experiment, run_experiment_on, ExperimentResult, LoopRecord, RESULTS_FILE};

//! Experiment grid, training loop, result storage and summary tables.

mod config;
mod model;
mod report;
mod run;
mod selftest;
mod train;

pub use config::{derive_seed, expand_grid, Family, GridSpec, ModelConfig};
pub use model::Model;
pub use report::{
    aggregate_tables, BoxplotRow, ComparisonRow, SummaryTables, Table1Row, ALPHA, GROUPS,
};
pub use run::{
    load_results, report, run_grid, DatasetSpec, RunConfig, RunSummary, GRID_FILE, RESULTS_FILE,
    TIMINGS_FILE,
};
pub use selftest::{run_selftest, Check};
pub use train::{
    evaluate, run_experiment, Aggregate, EpochRecord, ExperimentResult, FoldResult, TrainSettings,
};

//! Scenario files, the built-in catalog, parallel repetitions and result
//! files.

mod catalog;
mod config;
mod output;
mod reports;
mod run;
mod stats;

use std::path::PathBuf;

use thiserror::Error;

pub use catalog::{catalog, catalog_entry, CatalogEntry};
pub use config::{
    parse_config, parse_config_str, DefaultApplied, ExpectedBand, Experiment, ScenarioSpec, Sweep,
};
pub use output::{
    emit_results, read_csv, read_jsonl, write_records, OutputFormat, RunRecord, COLUMNS,
};
pub use reports::{bounds_report, oracle_report, OracleCheck};
pub use run::{run_scenario, summarize, ScenarioReport, Summary, TxGapRow, Verdict, METRICS};
pub use stats::{mean_ci, wilson, Interval};

use crate::mining::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    #[error("output error: {0}")]
    Output(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

//! Schedule snapshots, routing diagrams and experiment tables.

mod experiment;
mod svg;

use thiserror::Error;

pub use experiment::{
    parse_csv, run_experiment, to_csv, ExperimentSpec, ExperimentRow, GridBlock, InstanceType,
    RandomBlock, SolverKind, CSV_HEADER, EXPERIMENT_FORMAT,
};
pub use svg::{plan_file_name, render_routes, render_schedule, routes_file_name};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{what} {value} out of range (instance has {count})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        count: usize,
    },
    #[error("invalid experiment: {0}")]
    Spec(String),
    #[error("instance generation failed: {0}")]
    Instance(#[from] crate::instance::InstanceError),
    #[error("solver failed on {cell}: {message}")]
    Solve { cell: String, message: String },
    #[error("solver output for {cell} is infeasible: {message}")]
    Infeasible { cell: String, message: String },
    #[error("objective accounting broken for {cell}: objective {objective}, energy {real}, penalties {penalty}")]
    Accounting {
        cell: String,
        objective: f64,
        real: f64,
        penalty: f64,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

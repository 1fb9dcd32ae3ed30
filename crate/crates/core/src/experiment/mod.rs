//! Replication sweeps: parameter schedules, plan files, and the output directory.

mod output;
mod plan;
mod preset;

pub use output::{
    plot_queue_tsv, plot_regret_tsv, runs_jsonl, summary_csv, CellRecord, Manifest, ParamSourceRecord, RunFailure,
    RunRecord, MANIFEST_FILE, PLOT_QUEUE_FILE, PLOT_REGRET_FILE, RUNS_FILE, SUMMARY_FILE, SUMMARY_HEADER,
};
pub use plan::{
    oracle_warm_start, run_plan, Cell, ExperimentPlan, ParamSource, ParamsFile, PlanFile, PlanOutcome,
    WarmStartFile, WarmStartSource, FLUID_TOLERANCE,
};
pub use preset::{preset_parameters, Corollary, PresetError};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::ConfigError;
use crate::fluid::FluidError;
use crate::metrics::MetricsError;
use crate::pricing::PricingError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("cannot access {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
    #[error("invalid plan: {0}")]
    Invalid(String),
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
    #[error(transparent)]
    Fluid(#[from] FluidError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{failed} of {total} runs failed; see the manifest")]
    RunsFailed { failed: usize, total: usize },
}

impl PlanError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

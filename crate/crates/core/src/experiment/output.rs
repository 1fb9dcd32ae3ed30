//! Output directory of a plan:
//!
//! - `runs.jsonl`: one [`RunRecord`] per completed run, sorted by run id.
//! - `summary.csv`: one row per horizon (see [`SUMMARY_HEADER`]).
//! - `plot_regret.tsv` and `plot_queue.tsv`: regret and queue statistics against the horizon.
//! - `manifest.json`: the resolved plan, failures, the fitted slope, and timestamps.
//!
//! Everything except the manifest is byte-identical across reruns of the same plan.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::plan::{Cell, ExperimentPlan, ParamSource, WarmStartSource};
use super::PlanError;
use crate::fluid::FluidSolution;
use crate::metrics::{RunMetrics, Summary};
use crate::pricing::LearnerParams;
use crate::trace::{RegimeWarning, Variant};

pub const RUNS_FILE: &str = "runs.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_REGRET_FILE: &str = "plot_regret.tsv";
pub const PLOT_QUEUE_FILE: &str = "plot_queue.tsv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const SUMMARY_HEADER: &str = "horizon,replications,mean_regret,sd_regret,se_regret,\
mean_realized_regret,se_realized_regret,mean_time_avg_profit,se_time_avg_profit,f_star,\
mean_max_queue,max_max_queue,mean_time_avg_queue,se_time_avg_queue,bound_prediction";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    #[serde(flatten)]
    pub metrics: RunMetrics,
    pub params: LearnerParams<f64>,
    pub warnings: Vec<RegimeWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellRecord {
    pub horizon: u64,
    pub params: LearnerParams<f64>,
    pub bound_prediction: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start_x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamSourceRecord {
    Preset { corollary: u8, gamma: Option<f64> },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub scenario_path: String,
    /// Hex, so JSON readers without 64-bit integers keep every bit.
    pub scenario_fingerprint: String,
    pub variant: Variant,
    pub horizons: Vec<u64>,
    pub replications: usize,
    pub base_seed: u64,
    pub threads: usize,
    pub param_source: ParamSourceRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<&'static str>,
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub cells: Vec<CellRecord>,
    pub runs_expected: usize,
    pub runs_completed: usize,
    /// False when any run failed or no summary could be formed; outputs are then partial.
    pub complete: bool,
    pub failures: Vec<RunFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary_error: Option<String>,
    pub regret_slope: Option<f64>,
    pub files: Vec<String>,
    pub started_at: u64,
    pub finished_at: u64,
}

impl Manifest {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        plan: &ExperimentPlan,
        fluid: &FluidSolution<f64>,
        cells: &[Cell],
        records: &[RunRecord],
        failures: &[RunFailure],
        summary: Option<&Summary>,
        summary_error: Option<String>,
        started_at: u64,
    ) -> Self {
        let param_source = match &plan.params {
            ParamSource::Preset { corollary, gamma } => {
                ParamSourceRecord::Preset { corollary: corollary.number(), gamma: *gamma }
            }
            ParamSource::Explicit(_) => ParamSourceRecord::Explicit,
        };
        let runs_expected = plan.horizons.len() * plan.replications;
        Self {
            scenario: plan.scenario.name().to_string(),
            scenario_path: plan.scenario_path.display().to_string(),
            scenario_fingerprint: format!("{:016x}", plan.scenario.fingerprint()),
            variant: plan.variant,
            horizons: plan.horizons.clone(),
            replications: plan.replications,
            base_seed: plan.base_seed,
            threads: plan.threads,
            param_source,
            warm_start: plan.warm_start.as_ref().map(|w| match w {
                WarmStartSource::Oracle => "oracle",
                WarmStartSource::File(_) => "file",
            }),
            f_star: fluid.f_star,
            x_star: fluid.x_star.clone(),
            cells: cells
                .iter()
                .map(|c| CellRecord {
                    horizon: c.horizon,
                    params: c.params,
                    bound_prediction: crate::metrics::bound_prediction(&c.params, plan.variant),
                    warm_start_x: c.warm_start.as_ref().map(|w| w.x.clone()),
                })
                .collect(),
            runs_expected,
            runs_completed: records.len(),
            complete: failures.is_empty() && summary.is_some() && records.len() == runs_expected,
            failures: failures.to_vec(),
            summary_error,
            regret_slope: summary.and_then(|s| s.regret_slope),
            files: Vec::new(),
            started_at,
            finished_at: started_at,
        }
    }
}

pub fn runs_jsonl(records: &[RunRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("run records serialize"));
        out.push('\n');
    }
    out
}

pub fn summary_csv(summary: &Summary) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for c in &summary.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.horizon,
            c.replications,
            c.regret.mean,
            c.regret.sd,
            c.regret.se,
            c.realized_regret.mean,
            c.realized_regret.se,
            c.time_avg_profit.mean,
            c.time_avg_profit.se,
            c.f_star,
            c.max_queue.mean,
            c.max_queue_overall,
            c.time_avg_queue.mean,
            c.time_avg_queue.se,
            c.bound_prediction
        )
        .expect("writing to a string");
    }
    out
}

pub fn plot_regret_tsv(summary: &Summary) -> String {
    let mut out = String::from("horizon\tmean_regret\tse_regret\tmean_realized_regret\tse_realized_regret\n");
    for c in &summary.cells {
        writeln!(out, "{}\t{}\t{}\t{}\t{}", c.horizon, c.regret.mean, c.regret.se, c.realized_regret.mean, c.realized_regret.se)
            .expect("writing to a string");
    }
    out
}

pub fn plot_queue_tsv(summary: &Summary) -> String {
    let mut out = String::from("horizon\tmean_max_queue\tmax_max_queue\tmean_time_avg_queue\tse_time_avg_queue\tbound_prediction\n");
    for c in &summary.cells {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            c.horizon, c.max_queue.mean, c.max_queue_overall, c.time_avg_queue.mean, c.time_avg_queue.se, c.bound_prediction
        )
        .expect("writing to a string");
    }
    out
}

pub(crate) fn write_outputs(
    dir: &Path,
    manifest: &Manifest,
    records: &[RunRecord],
    summary: Option<&Summary>,
    finished_at: u64,
) -> Result<(), PlanError> {
    fs::create_dir_all(dir).map_err(|e| PlanError::io(dir, e))?;
    let mut files = vec![(RUNS_FILE, runs_jsonl(records))];
    if let Some(s) = summary {
        files.push((SUMMARY_FILE, summary_csv(s)));
        files.push((PLOT_REGRET_FILE, plot_regret_tsv(s)));
        files.push((PLOT_QUEUE_FILE, plot_queue_tsv(s)));
    }
    for (name, text) in &files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| PlanError::io(&path, e))?;
    }
    let mut manifest = manifest.clone();
    manifest.files = files.iter().map(|(n, _)| n.to_string()).collect();
    manifest.finished_at = finished_at;
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    fs::write(&path, text).map_err(|e| PlanError::io(&path, e))
}

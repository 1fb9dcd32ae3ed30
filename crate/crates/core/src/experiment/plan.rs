use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::output::{write_outputs, Manifest, RunFailure, RunRecord};
use super::{preset_parameters, Corollary, PlanError};
use crate::config::{load_scenario, load_warm_start};
use crate::fluid::{solve_fluid, FluidSolution};
use crate::market::Scenario;
use crate::metrics::{aggregate_replications, run_metrics, MetricsError, Summary};
use crate::pricing::{error_radii, Learner, LearnerParams, WarmStart};
use crate::rng::{derive_seed, RunStreams};
use crate::trace::Variant;

/// Accuracy the fluid baseline is solved to before runs are scored against it.
pub const FLUID_TOLERANCE: f64 = 1e-9;

/// Plan file as written on disk. Relative paths are resolved against the plan's directory.
///
/// ```toml
/// scenario = "ul.toml"
/// variant = "standard"          # or "balanced"
/// horizons = [16384, 65536]
/// replications = 10
/// base_seed = 7
/// out = "runs/ul"               # optional, the CLI's --out wins
/// threads = 0                   # optional, 0 uses every core
///
/// [params]
/// corollary = 1                 # with `gamma = ...` for corollaries 2, 3 and 5
/// # or explicit: delta, eta, epsilon, beta, q_threshold
///
/// [warm_start]                  # balanced variant only
/// oracle = true                 # or path = "warm.toml"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    pub scenario: PathBuf,
    #[serde(default)]
    pub variant: Option<Variant>,
    pub horizons: Vec<u64>,
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: ParamsFile,
    #[serde(default)]
    pub warm_start: Option<WarmStartFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    pub corollary: Option<Corollary>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub epsilon: Option<f64>,
    pub beta: Option<f64>,
    pub q_threshold: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct WarmStartFile {
    #[serde(default)]
    pub oracle: bool,
    pub path: Option<PathBuf>,
}

/// Where the learner's tuning comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Preset { corollary: Corollary, gamma: Option<f64> },
    Explicit(LearnerParams<f64>),
}

impl ParamSource {
    pub fn resolve(&self, horizon: u64) -> Result<LearnerParams<f64>, PlanError> {
        match self {
            Self::Preset { corollary, gamma } => Ok(preset_parameters(*corollary, *gamma, horizon)?),
            Self::Explicit(p) => Ok(*p),
        }
    }
}

/// Warm start for the balanced variant.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmStartSource {
    /// The fluid optimum pulled into the shrunk set, with intervals of width `2e` centered on
    /// the true prices. Uses the scenario as an oracle, so it is an experimental convenience.
    Oracle,
    File(WarmStart<f64>),
}

/// A validated experiment: one scenario, one variant, a horizon grid, and replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub scenario_path: PathBuf,
    pub scenario: Scenario<f64>,
    pub variant: Variant,
    pub horizons: Vec<u64>,
    pub replications: usize,
    pub base_seed: u64,
    pub params: ParamSource,
    pub warm_start: Option<WarmStartSource>,
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
}

impl PlanFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PlanError::io(path, e))?;
        toml::from_str(&text).map_err(|e| PlanError::Parse { context: path.display().to_string(), message: e.to_string() })
    }

    /// Loads the scenario and warm start, checks every field, and resolves the parameters at
    /// each horizon so that invalid presets fail before any run starts.
    pub fn resolve(&self, base_dir: &Path) -> Result<ExperimentPlan, PlanError> {
        let scenario_path = base_dir.join(&self.scenario);
        let scenario = load_scenario(&scenario_path)?;
        let params = self.params.source()?;
        let variant = self.variant.unwrap_or(Variant::Standard);
        let warm_start = match (variant, &self.warm_start) {
            (Variant::Standard, None) => None,
            (Variant::Standard, Some(_)) => {
                return Err(PlanError::Invalid("warm_start is only used by the balanced variant".into()))
            }
            (Variant::Balanced, None) => {
                return Err(PlanError::Invalid("the balanced variant needs a [warm_start] section".into()))
            }
            (Variant::Balanced, Some(w)) => Some(match (w.oracle, &w.path) {
                (true, None) => WarmStartSource::Oracle,
                (false, Some(p)) => WarmStartSource::File(load_warm_start(base_dir.join(p))?),
                _ => return Err(PlanError::Invalid("warm_start needs exactly one of oracle = true or path".into())),
            }),
        };
        let out = self.out.as_ref().map(|o| base_dir.join(o)).ok_or_else(|| PlanError::Invalid("no output directory given".into()))?;
        let plan = ExperimentPlan {
            scenario_path,
            scenario,
            variant,
            horizons: self.horizons.clone(),
            replications: self.replications,
            base_seed: self.base_seed,
            params,
            warm_start,
            out,
            threads: self.threads.unwrap_or(0),
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl ParamsFile {
    fn source(&self) -> Result<ParamSource, PlanError> {
        let explicit = [self.delta, self.eta, self.epsilon, self.beta];
        match self.corollary {
            Some(corollary) => {
                if explicit.iter().any(Option::is_some) || self.q_threshold.is_some() {
                    return Err(PlanError::Invalid("give either a corollary or explicit parameters, not both".into()));
                }
                Ok(ParamSource::Preset { corollary, gamma: self.gamma })
            }
            None => match (self.delta, self.eta, self.epsilon, self.beta, self.q_threshold) {
                (Some(delta), Some(eta), Some(epsilon), Some(beta), Some(q)) if self.gamma.is_none() => {
                    Ok(ParamSource::Explicit(LearnerParams::new(delta, eta, epsilon, beta, q)?))
                }
                _ => Err(PlanError::Invalid(
                    "params need a corollary, or all of delta, eta, epsilon, beta and q_threshold".into(),
                )),
            },
        }
    }
}

/// Parameters, baseline and warm start shared by every replication at one horizon.
#[derive(Debug, Clone)]
pub struct Cell {
    pub horizon: u64,
    pub params: LearnerParams<f64>,
    pub warm_start: Option<WarmStart<f64>>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.horizons.is_empty() {
            return Err(PlanError::Invalid("horizon grid is empty".into()));
        }
        if let Some(&h) = self.horizons.iter().find(|&&h| h == 0) {
            return Err(PlanError::Invalid(format!("horizon {h} must be positive")));
        }
        let mut sorted = self.horizons.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.horizons.len() {
            return Err(PlanError::Invalid("horizons must be distinct".into()));
        }
        if self.replications == 0 {
            return Err(PlanError::Invalid("replication count must be at least 1".into()));
        }
        if (self.variant == Variant::Balanced) != self.warm_start.is_some() {
            return Err(PlanError::Invalid("a warm start is required by, and only by, the balanced variant".into()));
        }
        for &h in &self.horizons {
            self.params.resolve(h)?;
        }
        Ok(())
    }

    /// Builds the per-horizon cells and checks each warm start and learner configuration.
    pub fn cells(&self, fluid: &FluidSolution<f64>) -> Result<Vec<Cell>, PlanError> {
        self.horizons
            .iter()
            .map(|&horizon| {
                let params = self.params.resolve(horizon)?;
                let warm_start = match &self.warm_start {
                    None => None,
                    Some(WarmStartSource::File(w)) => Some(w.clone()),
                    Some(WarmStartSource::Oracle) => Some(oracle_warm_start(&self.scenario, &params, fluid)?),
                };
                // Surfaces regime and warm-start errors before any thread starts.
                self.learner(&params, warm_start.clone())?;
                Ok(Cell { horizon, params, warm_start })
            })
            .collect()
    }

    fn learner(&self, params: &LearnerParams<f64>, warm: Option<WarmStart<f64>>) -> Result<Learner<'_, f64>, PlanError> {
        Ok(match warm {
            None => Learner::standard(&self.scenario, *params)?,
            Some(w) => Learner::balanced(&self.scenario, *params, w)?,
        })
    }

    pub fn run_id(horizon_index: usize, horizon: u64, rep: usize) -> String {
        format!("h{horizon_index:02}-T{horizon}-r{rep:04}")
    }

    /// Executes one replication of one cell.
    pub fn run_one(
        &self,
        horizon_index: usize,
        cell: &Cell,
        rep: usize,
        fluid: &FluidSolution<f64>,
    ) -> Result<RunRecord, PlanError> {
        let seed = derive_seed(self.base_seed, horizon_index, rep);
        let learner = self.learner(&cell.params, cell.warm_start.clone())?;
        let trace = learner.run(cell.horizon, RunStreams::new(seed))?;
        let id = Self::run_id(horizon_index, cell.horizon, rep);
        let metrics = run_metrics(id, rep, &trace, fluid, &self.scenario, &cell.params, self.variant)?;
        Ok(RunRecord { metrics, params: cell.params, warnings: trace.meta.warnings })
    }
}

/// Pulls the fluid optimum into the shrunk set and centers width-`2e` intervals on its true
/// prices.
pub fn oracle_warm_start(
    scenario: &Scenario<f64>,
    params: &LearnerParams<f64>,
    fluid: &FluidSolution<f64>,
) -> Result<WarmStart<f64>, PlanError> {
    let learner = Learner::standard(scenario, *params)?;
    let x = learner.geometry().project_dprime(&fluid.x_star).map_err(crate::pricing::PricingError::from)?;
    let radii = error_radii(scenario, params);
    Ok(WarmStart::centered_at_true_prices(scenario, &radii, x)?)
}

/// Result of [`run_plan`]: the records that completed, in run-id order.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Option<Summary>,
    pub failures: Vec<RunFailure>,
    pub manifest: Manifest,
}

/// Runs every (horizon, replication) pair on a worker pool and writes the output directory.
/// Runs that fail are listed in the manifest; the call then returns
/// [`PlanError::RunsFailed`] after the surviving outputs are on disk.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome, PlanError> {
    let started = unix_seconds();
    plan.validate()?;
    let fluid = solve_fluid(&plan.scenario, FLUID_TOLERANCE)?;
    let cells = plan.cells(&fluid)?;
    let jobs: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|h| (0..plan.replications).map(move |r| (h, r))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.threads)
        .build()
        .map_err(|e| PlanError::Invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<RunRecord, RunFailure>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(h, r)| {
                plan.run_one(h, &cells[h], r, &fluid).map_err(|e| RunFailure {
                    run_id: ExperimentPlan::run_id(h, cells[h].horizon, r),
                    error: e.to_string(),
                })
            })
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => failures.push(f),
        }
    }
    records.sort_by(|a, b| a.metrics.run_id.cmp(&b.metrics.run_id));
    failures.sort_by(|a, b| a.run_id.cmp(&b.run_id));

    let metrics: Vec<_> = records.iter().map(|r| r.metrics.clone()).collect();
    let (summary, summary_error) = match aggregate_replications(&metrics) {
        Ok(s) => (Some(s), None),
        Err(e @ MetricsError::InsufficientReplications { .. }) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let manifest = Manifest::new(plan, &fluid, &cells, &records, &failures, summary.as_ref(), summary_error, started);
    write_outputs(&plan.out, &manifest, &records, summary.as_ref(), unix_seconds())?;

    if !failures.is_empty() {
        return Err(PlanError::RunsFailed { failed: failures.len(), total: jobs.len() });
    }
    Ok(PlanOutcome { records, summary, failures, manifest })
}

pub(crate) fn unix_seconds() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

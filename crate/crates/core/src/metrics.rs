//! Regret and queue-length statistics of a run, and aggregation across replications.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluid::FluidSolution;
use crate::market::{MarketError, Scenario};
use crate::pricing::LearnerParams;
use crate::scalar::Scalar;
use crate::trace::{RunTrace, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("trace and scenario do not match: {0}")]
    ScenarioMismatch(String),
    #[error("max queue {observed} exceeds the deterministic bound {bound}")]
    BoundViolated { observed: u64, bound: u64 },
    #[error("horizon {horizon} has {count} replications, at least 2 are needed")]
    InsufficientReplications { horizon: u64, count: usize },
    #[error(transparent)]
    Market(#[from] MarketError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries<T> {
    /// `f* - (sum lambda(t) F(lambda(t)) - sum mu(t) G(mu(t)))` at the posted rates.
    pub per_slot: Vec<T>,
    pub cumulative: T,
    /// `f*` minus realized profit, for diagnostics.
    pub realized_per_slot: Vec<T>,
    pub realized_cumulative: T,
}

pub fn regret_series<T: Scalar>(
    trace: &RunTrace<T>,
    fluid: &FluidSolution<T>,
    scenario: &Scenario<T>,
) -> Result<RegretSeries<T>, MetricsError> {
    let t = scenario.topology();
    if trace.customers() != t.customers() || trace.servers() != t.servers() || trace.edges() != t.edge_count() {
        return Err(MetricsError::ScenarioMismatch("dimensions differ".into()));
    }
    if fluid.x_star.len() != t.edge_count() {
        return Err(MetricsError::ScenarioMismatch("fluid solution has the wrong dimension".into()));
    }
    let fp = trace.meta.scenario_fingerprint;
    if fp != 0 && fp != scenario.fingerprint() {
        return Err(MetricsError::ScenarioMismatch("fingerprints differ".into()));
    }
    let c = t.customers();
    let mut per_slot = Vec::with_capacity(trace.len());
    let mut realized_per_slot = Vec::with_capacity(trace.len());
    for slot in trace.slots() {
        let rate_profit = scenario.profit_at_rates(&slot.rates[..c], &slot.rates[c..])?;
        per_slot.push(fluid.f_star - rate_profit);
        realized_per_slot.push(fluid.f_star - slot.profit);
    }
    Ok(RegretSeries {
        cumulative: per_slot.iter().copied().sum(),
        realized_cumulative: realized_per_slot.iter().copied().sum(),
        per_slot,
        realized_per_slot,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueMetrics {
    pub max_queue: u64,
    /// Time average of the total queue length after each slot.
    pub time_avg_queue: f64,
    /// `max(2 M N, q_th)` for the standard variant, `q_th` for the balanced one.
    pub bound_prediction: u64,
}

pub fn bound_prediction<T: Scalar>(params: &LearnerParams<T>, variant: Variant) -> u64 {
    match variant {
        Variant::Standard => params.standard_queue_bound(),
        Variant::Balanced => params.q_threshold,
    }
}

pub fn queue_metrics<T: Scalar>(
    trace: &RunTrace<T>,
    params: &LearnerParams<T>,
    variant: Variant,
) -> Result<QueueMetrics, MetricsError> {
    let mut max_queue = 0u64;
    let mut total = 0u128;
    for slot in trace.slots() {
        for &q in slot.queues {
            max_queue = max_queue.max(u64::from(q));
            total += u128::from(q);
        }
    }
    let bound = bound_prediction(params, variant);
    if max_queue > bound {
        return Err(MetricsError::BoundViolated { observed: max_queue, bound });
    }
    let time_avg_queue = if trace.is_empty() { 0.0 } else { total as f64 / trace.len() as f64 };
    Ok(QueueMetrics { max_queue, time_avg_queue, bound_prediction: bound })
}

/// Summary of one run, as written to the per-run JSONL records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: String,
    pub horizon: u64,
    pub replication: usize,
    pub seed: u64,
    pub variant: Variant,
    pub slots: u64,
    pub truncated: bool,
    pub outer_iterations: usize,
    pub cumulative_regret: f64,
    pub realized_regret: f64,
    pub time_avg_profit: f64,
    pub f_star: f64,
    #[serde(flatten)]
    pub queues: QueueMetrics,
}

#[allow(clippy::too_many_arguments)]
pub fn run_metrics<T: Scalar>(
    run_id: impl Into<String>,
    replication: usize,
    trace: &RunTrace<T>,
    fluid: &FluidSolution<T>,
    scenario: &Scenario<T>,
    params: &LearnerParams<T>,
    variant: Variant,
) -> Result<RunMetrics, MetricsError> {
    let regret = regret_series(trace, fluid, scenario)?;
    let queues = queue_metrics(trace, params, variant)?;
    let profit: f64 = trace.profit().iter().map(|p| p.as_f64()).sum();
    Ok(RunMetrics {
        run_id: run_id.into(),
        horizon: trace.meta.horizon,
        replication,
        seed: trace.meta.seed,
        variant,
        slots: trace.len() as u64,
        truncated: trace.meta.truncated,
        outer_iterations: trace.iterations.len(),
        cumulative_regret: regret.cumulative.as_f64(),
        realized_regret: regret.realized_cumulative.as_f64(),
        time_avg_profit: if trace.is_empty() { 0.0 } else { profit / trace.len() as f64 },
        f_star: fluid.f_star.as_f64(),
        queues,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, sd: var.sqrt(), se: (var / n).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub horizon: u64,
    pub replications: usize,
    pub regret: MeanSe,
    pub realized_regret: MeanSe,
    pub time_avg_profit: MeanSe,
    pub f_star: f64,
    pub max_queue: MeanSe,
    pub max_queue_overall: u64,
    pub time_avg_queue: MeanSe,
    pub bound_prediction: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
    /// Least-squares slope of log mean regret against log horizon (3+ horizons, positive means).
    pub regret_slope: Option<f64>,
}

/// Groups runs by horizon (ascending) and summarises each group.
pub fn aggregate_replications(metrics: &[RunMetrics]) -> Result<Summary, MetricsError> {
    let mut horizons: Vec<u64> = metrics.iter().map(|m| m.horizon).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let mut cells = Vec::with_capacity(horizons.len());
    for h in horizons {
        let runs: Vec<&RunMetrics> = metrics.iter().filter(|m| m.horizon == h).collect();
        if runs.len() < 2 {
            return Err(MetricsError::InsufficientReplications { horizon: h, count: runs.len() });
        }
        let col = |f: &dyn Fn(&RunMetrics) -> f64| MeanSe::of(&runs.iter().map(|m| f(m)).collect::<Vec<_>>());
        cells.push(CellSummary {
            horizon: h,
            replications: runs.len(),
            regret: col(&|m| m.cumulative_regret),
            realized_regret: col(&|m| m.realized_regret),
            time_avg_profit: col(&|m| m.time_avg_profit),
            f_star: runs[0].f_star,
            max_queue: col(&|m| m.queues.max_queue as f64),
            max_queue_overall: runs.iter().map(|m| m.queues.max_queue).max().unwrap_or(0),
            time_avg_queue: col(&|m| m.queues.time_avg_queue),
            bound_prediction: runs.iter().map(|m| m.queues.bound_prediction).max().unwrap_or(0),
        });
    }
    let points: Vec<(f64, f64)> = cells.iter().map(|c| (c.horizon as f64, c.regret.mean)).collect();
    let regret_slope = if points.len() >= 3 { loglog_slope(&points) } else { None };
    Ok(Summary { cells, regret_slope })
}

/// Ordinary least-squares slope of `ln y` on `ln x`; `None` unless all values are positive.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics(h: u64, regret: f64) -> RunMetrics {
        RunMetrics {
            run_id: format!("h{h}"),
            horizon: h,
            replication: 0,
            seed: 0,
            variant: Variant::Standard,
            slots: h,
            truncated: false,
            outer_iterations: 0,
            cumulative_regret: regret,
            realized_regret: regret,
            time_avg_profit: 0.0,
            f_star: 0.0,
            queues: QueueMetrics { max_queue: 1, time_avg_queue: 0.5, bound_prediction: 10 },
        }
    }

    #[test]
    fn exact_power_law_slope() {
        let runs: Vec<_> = [1u64 << 14, 1 << 16, 1 << 18]
            .iter()
            .flat_map(|&h| {
                let r = 3.0 * (h as f64).powf(5.0 / 6.0);
                [metrics(h, r), metrics(h, r)]
            })
            .collect();
        let s = aggregate_replications(&runs).unwrap();
        assert!((s.regret_slope.unwrap() - 5.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn flat_regret_has_zero_slope() {
        let runs: Vec<_> = [100u64, 1000, 10000].iter().flat_map(|&h| [metrics(h, 7.0), metrics(h, 7.0)]).collect();
        assert!(aggregate_replications(&runs).unwrap().regret_slope.unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_replication_rejected() {
        let runs = vec![metrics(100, 1.0), metrics(100, 2.0), metrics(1000, 1.0)];
        assert!(matches!(
            aggregate_replications(&runs),
            Err(MetricsError::InsufficientReplications { horizon: 1000, count: 1 })
        ));
    }

    #[test]
    fn mean_and_standard_error() {
        let m = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((m.se - m.sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trace_queue_metrics() {
        let p = LearnerParams::new(0.1, 0.1, 0.01, 1.0, 50).unwrap();
        let q = queue_metrics(&RunTrace::<f64>::new(1, 1, 1), &p, Variant::Balanced).unwrap();
        assert_eq!((q.max_queue, q.time_avg_queue, q.bound_prediction), (0, 0.0, 50));
    }
}

use rand::Rng;

use super::{LearnerParams, PricingError, RateEstimator};
use crate::scalar::Scalar;
use crate::sim::MarketSim;
use crate::trace::{BisectionLog, BisectionStep, Branch};

/// Searches, for every queue at once, the price whose arrival rate matches the queue's target.
///
/// Each of the `M` iterations posts the interval midpoints and runs the live market until every
/// queue has `N` counted slots. A queue at or above `threshold` at the start of a slot posts its
/// rejection price instead and does not count that slot. The estimate uses the first `N`
/// counted arrivals. Demand intervals move up when the estimated rate exceeds the target,
/// supply intervals move down.
///
/// If the horizon runs out mid-search the log is returned with `truncated` set and the current
/// midpoints as final prices.
pub fn bisection_run<T: Scalar, R: Rng>(
    targets: &[T],
    initial: &[(T, T)],
    threshold: Option<u64>,
    sim: &mut MarketSim<'_, T, R>,
    params: &LearnerParams<T>,
    estimator: RateEstimator,
    branch: Branch,
) -> Result<BisectionLog<T>, PricingError> {
    let scenario = sim.scenario();
    let customers = scenario.topology().customers();
    let queues = scenario.topology().queue_count();
    if targets.len() != queues || initial.len() != queues {
        return Err(PricingError::DimensionMismatch { expected: queues, got: targets.len().min(initial.len()) });
    }
    let curve = |q: usize| if q < customers { &scenario.demand()[q] } else { &scenario.supply()[q - customers] };
    let n_target = params.samples_per_price;
    let half = T::lit(0.5);

    let mut lower: Vec<T> = initial.iter().map(|iv| iv.0).collect();
    let mut upper: Vec<T> = initial.iter().map(|iv| iv.1).collect();
    let mut log = BisectionLog {
        branch,
        threshold,
        targets: targets.to_vec(),
        initial: initial.to_vec(),
        steps: Vec::with_capacity(params.bisection_steps as usize),
        final_prices: Vec::new(),
        truncated: false,
    };

    let mut posted = vec![T::zero(); queues];
    let mut rejected = vec![false; queues];
    for _ in 0..params.bisection_steps {
        if let Some(q) = (0..queues).find(|&q| !(lower[q] <= upper[q])) {
            return Err(PricingError::IntervalInverted { queue: q });
        }
        let mid: Vec<T> = (0..queues).map(|q| (lower[q] + upper[q]) * half).collect();
        let mut counted = vec![0u64; queues];
        let mut hits = vec![0u64; queues];
        let start = sim.clock();

        while counted.iter().any(|&n| n < n_target) {
            if sim.exhausted() {
                log.steps.push(BisectionStep {
                    lower: lower.clone(),
                    upper: upper.clone(),
                    midpoints: mid.clone(),
                    counted,
                    estimates: None,
                    start_slot: start,
                    end_slot: sim.clock(),
                });
                log.final_prices = (0..queues).map(|q| clamp_to_curve(mid[q], curve(q))).collect();
                log.truncated = true;
                return Ok(log);
            }
            for q in 0..queues {
                rejected[q] = threshold.is_some_and(|th| sim.queue_len(q) >= th);
                posted[q] = if rejected[q] { curve(q).rejection_price() } else { mid[q] };
            }
            let arrivals = sim.step(&posted, &rejected)?;
            for q in 0..queues {
                if !rejected[q] {
                    counted[q] += 1;
                    if counted[q] <= n_target {
                        hits[q] += u64::from(arrivals[q]);
                    }
                }
            }
        }

        let estimates: Vec<T> = match estimator {
            RateEstimator::SampleAverage => {
                let n = T::lit(n_target as f64);
                hits.iter().map(|&h| T::lit(h as f64) / n).collect()
            }
            RateEstimator::Exact => (0..queues).map(|q| curve(q).rate_clamped(mid[q])).collect(),
        };
        let step = BisectionStep {
            lower: lower.clone(),
            upper: upper.clone(),
            midpoints: mid.clone(),
            counted,
            estimates: Some(estimates.clone()),
            start_slot: start,
            end_slot: sim.clock(),
        };
        for q in 0..queues {
            let too_many = estimates[q] > targets[q];
            // Raising a demand price lowers its rate; raising a supply price raises it.
            if too_many == (q < customers) {
                lower[q] = mid[q];
            } else {
                upper[q] = mid[q];
            }
        }
        log.final_prices = (0..queues).map(|q| clamp_to_curve(mid[q], curve(q))).collect();
        log.steps.push(step);
    }
    Ok(log)
}

fn clamp_to_curve<T: Scalar>(p: T, curve: &crate::market::CurveSpec<T>) -> T {
    p.max(curve.p_min()).min(curve.p_max())
}

use rand::Rng;

use super::{
    bisection_run, error_radii, gradient_estimate, perturb_targets, sample_unit_direction, ErrorRadii, LearnerParams,
    PriceSearch, PricingError, ProbeTargets, RateEstimator, WarmStart,
};
use crate::geometry::ShrunkGeometry;
use crate::market::{CurveSpec, Scenario};
use crate::rng::RunStreams;
use crate::scalar::Scalar;
use crate::sim::MarketSim;
use crate::trace::{BisectionLog, Branch, OuterRecord, RegimeWarning, RunTrace, TraceMeta, Variant};

/// Injectable shortcuts for deterministic tests. The defaults are the production path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Hooks {
    pub estimator: RateEstimator,
    pub price_search: PriceSearch,
    /// Stop after this many outer iterations even if slots remain.
    pub max_outer_iterations: Option<usize>,
}

/// Zero-order projected gradient ascent over match rates, with prices found by bisection on
/// the live market.
#[derive(Debug, Clone)]
pub struct Learner<'a, T> {
    scenario: &'a Scenario<T>,
    params: LearnerParams<T>,
    geometry: ShrunkGeometry<T>,
    radii: ErrorRadii<T>,
    warm_start: Option<WarmStart<T>>,
    hooks: Hooks,
    warnings: Vec<RegimeWarning>,
}

impl<'a, T: Scalar> Learner<'a, T> {
    /// Standard variant: starts at the center point, full price ranges and no rejection in the
    /// first outer iteration.
    pub fn standard(scenario: &'a Scenario<T>, params: LearnerParams<T>) -> Result<Self, PricingError> {
        let geometry = ShrunkGeometry::new(scenario, params.delta).map_err(|e| match e {
            crate::geometry::GeometryError::DeltaOutOfRange { delta, r } => {
                PricingError::ParameterRegimeViolation(format!("delta = {delta} must be below r = {r}"))
            }
            other => other.into(),
        })?;
        let radii = error_radii(scenario, &params);
        let mut warnings = Vec::new();
        if params.epsilon >= params.delta {
            warnings.push(RegimeWarning::EpsilonNotBelowDelta {
                epsilon: params.epsilon.as_f64(),
                delta: params.delta.as_f64(),
            });
        }
        let ranges = scenario.demand().iter().chain(scenario.supply()).map(CurveSpec::price_range);
        let c = scenario.topology().customers();
        for (q, (e, range)) in radii.per_queue().zip(ranges).enumerate() {
            if T::lit(2.0) * e > range {
                let (side, index) = if q < c { ("customer", q) } else { ("server", q - c) };
                warnings.push(RegimeWarning::ErrorRadiusExceedsRange {
                    side,
                    index,
                    width: (T::lit(2.0) * e).as_f64(),
                    range: range.as_f64(),
                });
            }
        }
        Ok(Self { scenario, params, geometry, radii, warm_start: None, hooks: Hooks::default(), warnings })
    }

    /// Balanced variant: starts from a validated warm start and rejects at the threshold from
    /// the first outer iteration on.
    pub fn balanced(
        scenario: &'a Scenario<T>,
        params: LearnerParams<T>,
        warm_start: WarmStart<T>,
    ) -> Result<Self, PricingError> {
        let mut learner = Self::standard(scenario, params)?;
        warm_start.validate(scenario, &learner.geometry, &learner.params, &learner.radii)?;
        learner.warm_start = Some(warm_start);
        Ok(learner)
    }

    pub fn with_hooks(mut self, hooks: Hooks) -> Self {
        self.hooks = hooks;
        self
    }

    pub fn variant(&self) -> Variant {
        if self.warm_start.is_some() {
            Variant::Balanced
        } else {
            Variant::Standard
        }
    }

    pub fn params(&self) -> &LearnerParams<T> {
        &self.params
    }

    pub fn geometry(&self) -> &ShrunkGeometry<T> {
        &self.geometry
    }

    pub fn radii(&self) -> &ErrorRadii<T> {
        &self.radii
    }

    pub fn warnings(&self) -> &[RegimeWarning] {
        &self.warnings
    }

    /// Runs the learner for `horizon` slots from empty queues.
    pub fn run(&self, horizon: u64, streams: RunStreams) -> Result<RunTrace<T>, PricingError> {
        let RunStreams { seed, arrivals, mut directions } = streams;
        let mut sim = MarketSim::new(self.scenario, horizon, arrivals);
        let topology = self.scenario.topology();
        let full_ranges: Vec<(T, T)> =
            self.scenario.demand().iter().chain(self.scenario.supply()).map(|c| (c.p_min(), c.p_max())).collect();
        let widths: Vec<T> = self.radii.per_queue().collect();

        let mut x = match &self.warm_start {
            Some(w) => w.x.clone(),
            None => self.geometry.center().to_vec(),
        };
        let mut last_prices: [Vec<T>; 2] = [Vec::new(), Vec::new()];
        let mut iterations = Vec::new();
        let mut truncated = false;
        let mut k = 1usize;

        while !sim.exhausted() && self.hooks.max_outer_iterations.is_none_or(|cap| k <= cap) {
            let start = sim.clock();
            let u: Vec<T> = sample_unit_direction(topology.edge_count(), &mut directions);
            let (plus, minus) = perturb_targets(&x, &u, &self.geometry, topology)?;
            let mut record = OuterRecord {
                k,
                x: x.clone(),
                direction: u.clone(),
                x_plus: plus.point.clone(),
                x_minus: minus.point.clone(),
                searches: Vec::with_capacity(2),
                gradient: None,
                start_slot: start,
                end_slot: start,
            };

            for (b, (branch, probe)) in [(Branch::Plus, &plus), (Branch::Minus, &minus)].into_iter().enumerate() {
                let initial: Vec<(T, T)> = match (&self.warm_start, k) {
                    (None, 1) => full_ranges.clone(),
                    (Some(w), 1) => match branch {
                        Branch::Plus => w.plus.clone(),
                        Branch::Minus => w.minus.clone(),
                    },
                    _ => last_prices[b].iter().zip(&widths).map(|(&p, &e)| (p - e, p + e)).collect(),
                };
                let threshold = match (&self.warm_start, k) {
                    (None, 1) => None,
                    _ => Some(self.params.q_threshold),
                };
                let log = self.search(probe, &initial, threshold, branch, &mut sim)?;
                let stop = log.truncated;
                last_prices[b] = log.final_prices.clone();
                record.searches.push(log);
                if stop {
                    truncated = true;
                    break;
                }
            }

            record.end_slot = sim.clock();
            if !truncated {
                let g = gradient_estimate(&plus, &last_prices[0], &minus, &last_prices[1], &u, self.params.delta);
                let step: Vec<T> = x.iter().zip(&g).map(|(&a, &b)| a + self.params.eta * b).collect();
                x = self.geometry.project_dprime(&step)?;
                record.gradient = Some(g);
            }
            iterations.push(record);
            if truncated {
                break;
            }
            k += 1;
        }

        let mut trace = sim.into_trace();
        trace.iterations = iterations;
        trace.meta = TraceMeta {
            scenario: self.scenario.name().to_string(),
            scenario_fingerprint: self.scenario.fingerprint(),
            seed,
            horizon,
            variant: Some(self.variant()),
            truncated,
            warnings: self.warnings.clone(),
        };
        Ok(trace)
    }

    fn search<R: Rng>(
        &self,
        probe: &ProbeTargets<T>,
        initial: &[(T, T)],
        threshold: Option<u64>,
        branch: Branch,
        sim: &mut MarketSim<'_, T, R>,
    ) -> Result<BisectionLog<T>, PricingError> {
        let targets = probe.per_queue();
        match self.hooks.price_search {
            PriceSearch::Bisection => {
                bisection_run(&targets, initial, threshold, sim, &self.params, self.hooks.estimator, branch)
            }
            PriceSearch::ExactPrices => {
                let c = self.scenario.topology().customers();
                let prices = targets
                    .iter()
                    .enumerate()
                    .map(|(q, &r)| {
                        let curve = if q < c { &self.scenario.demand()[q] } else { &self.scenario.supply()[q - c] };
                        curve.price(r)
                    })
                    .collect::<Result<Vec<T>, _>>()?;
                let truncated = sim.exhausted();
                if !truncated {
                    sim.step(&prices, &vec![false; targets.len()])?;
                }
                Ok(BisectionLog {
                    branch,
                    threshold,
                    targets,
                    initial: initial.to_vec(),
                    steps: Vec::new(),
                    final_prices: prices,
                    truncated,
                })
            }
        }
    }
}

/// Standard variant from empty queues.
pub fn run_pricing<T: Scalar>(
    scenario: &Scenario<T>,
    params: LearnerParams<T>,
    horizon: u64,
    seed: u64,
) -> Result<RunTrace<T>, PricingError> {
    Learner::standard(scenario, params)?.run(horizon, RunStreams::new(seed))
}

/// Balanced variant from empty queues.
pub fn run_balanced_pricing<T: Scalar>(
    scenario: &Scenario<T>,
    params: LearnerParams<T>,
    warm_start: WarmStart<T>,
    horizon: u64,
    seed: u64,
) -> Result<RunTrace<T>, PricingError> {
    Learner::balanced(scenario, params, warm_start)?.run(horizon, RunStreams::new(seed))
}

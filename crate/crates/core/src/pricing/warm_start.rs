use super::{ErrorRadii, LearnerParams, PricingError};
use crate::geometry::{ShrunkGeometry, MEMBERSHIP_TOL};
use crate::market::Scenario;
use crate::scalar::Scalar;

/// Known nearly balanced starting point and price intervals for the balanced variant.
/// Intervals are per queue, customers then servers, separately for the `+` and `-` searches.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart<T> {
    pub x: Vec<T>,
    pub plus: Vec<(T, T)>,
    pub minus: Vec<(T, T)>,
}

impl<T: Scalar> WarmStart<T> {
    /// Same intervals for both searches.
    pub fn new(x: Vec<T>, intervals: Vec<(T, T)>) -> Self {
        Self { x, plus: intervals.clone(), minus: intervals }
    }

    /// Intervals of width exactly `2e` centered at the true prices of `x`'s induced rates.
    /// Needs the true curves, so this is for experiments where the scenario plays the oracle.
    pub fn centered_at_true_prices(scenario: &Scenario<T>, radii: &ErrorRadii<T>, x: Vec<T>) -> Result<Self, PricingError> {
        let t = scenario.topology();
        let lambda = t.customer_sums(&x);
        let mu = t.server_sums(&x);
        let mut intervals = Vec::with_capacity(t.queue_count());
        for (i, c) in scenario.demand().iter().enumerate() {
            let p = c.price(lambda[i])?;
            intervals.push((p - radii.customers[i], p + radii.customers[i]));
        }
        for (j, c) in scenario.supply().iter().enumerate() {
            let p = c.price(mu[j])?;
            intervals.push((p - radii.servers[j], p + radii.servers[j]));
        }
        Ok(Self::new(x, intervals))
    }

    /// Checks the start point lies in `D'`, every interval is no wider than `2e`, and the induced
    /// rates sit inside the rate window the intervals certify, with room for the `delta` probes.
    pub fn validate(
        &self,
        scenario: &Scenario<T>,
        geometry: &ShrunkGeometry<T>,
        params: &LearnerParams<T>,
        radii: &ErrorRadii<T>,
    ) -> Result<(), PricingError> {
        let t = scenario.topology();
        let invalid = |msg: String| Err(PricingError::WarmStartInvalid(msg));
        if self.x.len() != t.edge_count() {
            return invalid(format!("start point has {} entries, expected {}", self.x.len(), t.edge_count()));
        }
        if !geometry.membership_dprime(&self.x, T::lit(MEMBERSHIP_TOL))? {
            return invalid("start point is outside the shrunk feasible set".into());
        }
        let lambda = t.customer_sums(&self.x);
        let mu = t.server_sums(&self.x);
        let widths: Vec<T> = radii.per_queue().collect();
        let c = t.customers();
        for (name, intervals) in [("plus", &self.plus), ("minus", &self.minus)] {
            if intervals.len() != t.queue_count() {
                return invalid(format!("{name} has {} intervals, expected {}", intervals.len(), t.queue_count()));
            }
            for (q, &(lo, hi)) in intervals.iter().enumerate() {
                if !(lo <= hi) {
                    return invalid(format!("{name} interval {q} is inverted"));
                }
                let cap = T::lit(2.0) * widths[q];
                if hi - lo > cap * (T::one() + T::lit(1e-12)) {
                    return invalid(format!("{name} interval {q} has width {} above 2e = {}", hi - lo, cap));
                }
                let (rate, degree, low_rate, high_rate) = if q < c {
                    let curve = &scenario.demand()[q];
                    (lambda[q], t.customer_degree(q), curve.rate_clamped(hi), curve.rate_clamped(lo))
                } else {
                    let j = q - c;
                    let curve = &scenario.supply()[j];
                    (mu[j], t.server_degree(j), curve.rate_clamped(lo), curve.rate_clamped(hi))
                };
                let margin = T::from_count(degree).sqrt() * params.delta - params.epsilon;
                if rate < low_rate + margin || rate > high_rate - margin {
                    return invalid(format!(
                        "{name} interval {q}: rate {rate} outside certified window [{}, {}]",
                        low_rate + margin,
                        high_rate - margin
                    ));
                }
            }
        }
        Ok(())
    }
}

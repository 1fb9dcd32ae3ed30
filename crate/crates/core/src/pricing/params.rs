use serde::Serialize;

use super::PricingError;
use crate::scalar::{snapped_ceil, Scalar};

/// Tuning of the learner. `M` and `N` are derived from `epsilon` and `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LearnerParams<T> {
    /// Exploration radius of the two-point gradient estimate.
    pub delta: T,
    /// Gradient ascent step size.
    pub eta: T,
    /// Bisection accuracy.
    pub epsilon: T,
    pub beta: T,
    /// Queue length at which arrivals are temporarily rejected.
    pub q_threshold: u64,
    /// `M = ceil(log2(1/epsilon))`.
    pub bisection_steps: u32,
    /// `N = ceil(beta ln(1/epsilon) / epsilon^2)`.
    pub samples_per_price: u64,
}

impl<T: Scalar> LearnerParams<T> {
    pub fn new(delta: T, eta: T, epsilon: T, beta: T, q_threshold: u64) -> Result<Self, PricingError> {
        let bad = |reason: String| Err(PricingError::ParameterRegimeViolation(reason));
        if !(delta > T::zero()) || !delta.is_finite() {
            return bad(format!("delta must be positive, got {delta}"));
        }
        if !(eta > T::zero() && eta < T::one()) {
            return bad(format!("eta must lie in (0, 1), got {eta}"));
        }
        let inv_e = T::one() / T::one().exp();
        if !(epsilon > T::zero() && epsilon < inv_e) {
            return bad(format!("epsilon must lie in (0, 1/e), got {epsilon}"));
        }
        if !(beta > T::zero()) || !beta.is_finite() {
            return bad(format!("beta must be positive, got {beta}"));
        }
        if q_threshold == 0 {
            return bad("queue threshold must be at least 1".into());
        }
        let eps = epsilon.as_f64();
        let m = snapped_ceil((1.0 / eps).log2());
        let n = snapped_ceil(beta.as_f64() * (1.0 / eps).ln() / (eps * eps));
        if n > u64::MAX as f64 / 4.0 {
            return bad(format!("sample count {n:e} is not representable"));
        }
        Ok(Self {
            delta,
            eta,
            epsilon,
            beta,
            q_threshold,
            bisection_steps: m as u32,
            samples_per_price: n as u64,
        })
    }

    /// Deterministic queue bound of the standard variant: `max(2 M N, q_th)`.
    pub fn standard_queue_bound(&self) -> u64 {
        (2 * u64::from(self.bisection_steps) * self.samples_per_price).max(self.q_threshold)
    }
}

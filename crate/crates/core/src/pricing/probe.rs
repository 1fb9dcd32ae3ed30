use rand::Rng;
use rand_distr::StandardNormal;

use super::PricingError;
use crate::geometry::{ShrunkGeometry, MEMBERSHIP_TOL};
use crate::market::Topology;
use crate::scalar::Scalar;

/// Direction drawn uniformly from the unit sphere in `R^dim` by normalising a standard
/// Gaussian vector.
pub fn sample_unit_direction<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<T> {
    assert!(dim >= 1, "direction dimension must be positive");
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return g.into_iter().map(|v| T::lit(v / norm)).collect();
        }
    }
}

/// Per-queue target rates induced by one probe point `x +/- delta u`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeTargets<T> {
    pub point: Vec<T>,
    /// `lambda_i = sum_{j in E_c,i} x_ij`.
    pub lambda: Vec<T>,
    /// `mu_j = sum_{i in E_s,j} x_ij`.
    pub mu: Vec<T>,
}

impl<T: Scalar> ProbeTargets<T> {
    fn at(point: Vec<T>, topology: &Topology) -> Self {
        let lambda = topology.customer_sums(&point);
        let mu = topology.server_sums(&point);
        Self { point, lambda, mu }
    }

    /// Customers then servers.
    pub fn per_queue(&self) -> Vec<T> {
        self.lambda.iter().chain(&self.mu).copied().collect()
    }

    /// `sum lambda p_c - sum mu p_s` for per-queue prices (customers then servers).
    pub fn profit_estimate(&self, prices: &[T]) -> T {
        let c = self.lambda.len();
        let revenue: T = self.lambda.iter().zip(&prices[..c]).map(|(&l, &p)| l * p).sum();
        let cost: T = self.mu.iter().zip(&prices[c..]).map(|(&m, &p)| m * p).sum();
        revenue - cost
    }
}

/// Forms `x +/- delta u` and their induced targets. Both points lie in `D` whenever `x` is in `D'`.
pub fn perturb_targets<T: Scalar>(
    x: &[T],
    u: &[T],
    geometry: &ShrunkGeometry<T>,
    topology: &Topology,
) -> Result<(ProbeTargets<T>, ProbeTargets<T>), PricingError> {
    if u.len() != x.len() {
        return Err(PricingError::DimensionMismatch { expected: x.len(), got: u.len() });
    }
    let tol = T::lit(MEMBERSHIP_TOL);
    if !geometry.membership_dprime(x, tol)? {
        return Err(PricingError::XNotInShrunkSet);
    }
    let d = geometry.delta();
    let plus: Vec<T> = x.iter().zip(u).map(|(&a, &b)| a + d * b).collect();
    let minus: Vec<T> = x.iter().zip(u).map(|(&a, &b)| a - d * b).collect();
    for p in [&plus, &minus] {
        if !geometry.membership_d(p, tol)? {
            return Err(PricingError::ProbeLeftFeasibleSet);
        }
    }
    Ok((ProbeTargets::at(plus, topology), ProbeTargets::at(minus, topology)))
}

/// Two-point estimate `(|E| / 2 delta) [f^+ - f^-] u` with `f^+/-` the profit estimated from
/// the probe targets and the prices found for them.
pub fn gradient_estimate<T: Scalar>(
    plus: &ProbeTargets<T>,
    plus_prices: &[T],
    minus: &ProbeTargets<T>,
    minus_prices: &[T],
    u: &[T],
    delta: T,
) -> Vec<T> {
    let diff = plus.profit_estimate(plus_prices) - minus.profit_estimate(minus_prices);
    let scale = T::from_count(u.len()) / (T::lit(2.0) * delta) * diff;
    u.iter().map(|&v| scale * v).collect()
}

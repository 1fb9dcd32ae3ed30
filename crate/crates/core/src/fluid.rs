//! Fluid baseline: the static profit-maximisation program over per-edge match rates.

use thiserror::Error;

use crate::geometry::{feasible_polytope, GeometryError};
use crate::market::{CurveSpec, MarketError, Scenario, PROBE_POINTS};
use crate::scalar::Scalar;

pub const MAX_ITERATIONS: usize = 100_000;
/// Central-difference step for curve families without a closed-form slope.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("induced rate outside the curve domain: {0}")]
    RateOutOfCurveDomain(#[from] MarketError),
    #[error("projected gradient ascent did not converge in {iterations} iterations (last step {last_step:e})")]
    SolverNonConvergence { iterations: usize, last_step: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidSolution<T> {
    pub x_star: Vec<T>,
    pub lambda_star: Vec<T>,
    pub mu_star: Vec<T>,
    /// Optimal profit per slot.
    pub f_star: T,
    pub iterations: usize,
    pub final_step: T,
    /// Some constraint of `D` is active at the optimum.
    pub boundary_active: bool,
}

/// `f(x) = sum_i lambda_i F_i(lambda_i) - sum_j mu_j G_j(mu_j)` with induced rates from `x`.
pub fn profit_rate<T: Scalar>(x: &[T], scenario: &Scenario<T>) -> Result<T, FluidError> {
    let t = scenario.topology();
    Ok(scenario.profit_at_rates(&t.customer_sums(x), &t.server_sums(x))?)
}

/// Derivative of `rate * price(rate)`.
fn marginal<T: Scalar>(curve: &CurveSpec<T>, rate: T) -> Result<T, MarketError> {
    let p = curve.price(rate)?;
    if let Some(slope) = curve.analytic_slope(rate) {
        return Ok(p + rate * slope);
    }
    let h = T::lit(FD_STEP);
    let lo = (rate - h).max(T::zero());
    let hi = (rate + h).min(T::one());
    Ok((hi * curve.price(hi)? - lo * curve.price(lo)?) / (hi - lo))
}

/// Gradient of `f`: `d f / d x_ij = (lambda F)'(lambda_i) - (mu G)'(mu_j)`.
pub fn profit_gradient<T: Scalar>(x: &[T], scenario: &Scenario<T>) -> Result<Vec<T>, FluidError> {
    let t = scenario.topology();
    let lambda = t.customer_sums(x);
    let mu = t.server_sums(x);
    let mr: Vec<T> = scenario.demand().iter().zip(&lambda).map(|(c, &l)| marginal(c, l)).collect::<Result<_, _>>()?;
    let mc: Vec<T> = scenario.supply().iter().zip(&mu).map(|(c, &m)| marginal(c, m)).collect::<Result<_, _>>()?;
    Ok(t.edges().iter().map(|&(i, j)| mr[i] - mc[j]).collect())
}

/// Upper bound on the curvature of `f` from a grid probe of each queue's revenue or cost.
fn smoothness_estimate<T: Scalar>(scenario: &Scenario<T>) -> T {
    let t = scenario.topology();
    let h = T::one() / T::from_count(PROBE_POINTS - 1);
    let curvature = |c: &CurveSpec<T>| {
        let v: Vec<T> = (0..PROBE_POINTS)
            .map(|n| {
                let s = T::from_count(n) * h;
                s * c.price_unchecked(s)
            })
            .collect();
        v.windows(3).map(|w| ((w[0] - w[1] - w[1] + w[2]) / (h * h)).abs()).fold(T::zero(), T::max)
    };
    let total: T = scenario
        .demand()
        .iter()
        .enumerate()
        .map(|(i, c)| curvature(c) * T::from_count(t.customer_degree(i)))
        .chain(scenario.supply().iter().enumerate().map(|(j, c)| curvature(c) * T::from_count(t.server_degree(j))))
        .sum();
    total.max(T::lit(1e-6))
}

/// Projected gradient ascent on `f` over `D`, started at the center point, with step
/// `0.1 / L` for a probed smoothness bound `L`. Stops when the gradient mapping
/// `|x_{k+1} - x_k| / step` drops below `tol / 100`.
pub fn solve_fluid<T: Scalar>(scenario: &Scenario<T>, tol: T) -> Result<FluidSolution<T>, FluidError> {
    let d = feasible_polytope(scenario);
    let step = T::lit(0.1) / smoothness_estimate(scenario);
    let threshold = (tol * T::lit(1e-2)).max(T::lit(64.0) * T::epsilon());
    let mut x = scenario.center();
    let mut moved = T::infinity();
    for it in 1..=MAX_ITERATIONS {
        let g = profit_gradient(&x, scenario)?;
        let trial: Vec<T> = x.iter().zip(&g).map(|(&a, &b)| a + step * b).collect();
        let next = d.project(&trial)?;
        moved = next.iter().zip(&x).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt();
        x = next;
        if moved / step <= threshold {
            let t = scenario.topology();
            let tight = T::lit(1e-8);
            let boundary_active = d.slabs().iter().any(|s| {
                let v: T = s.members.iter().map(|&e| x[e]).sum();
                (v - s.lower).abs() <= tight || (v - s.upper).abs() <= tight
            });
            return Ok(FluidSolution {
                f_star: profit_rate(&x, scenario)?,
                lambda_star: t.customer_sums(&x),
                mu_star: t.server_sums(&x),
                x_star: x,
                iterations: it,
                final_step: moved,
                boundary_active,
            });
        }
    }
    Err(FluidError::SolverNonConvergence { iterations: MAX_ITERATIONS, last_step: moved.as_f64() })
}

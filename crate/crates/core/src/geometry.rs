//! Feasible polytope `D`, its shrunk copy `D'`, and Euclidean projection onto either.
//!
//! Both sets are intersections of "slabs" `lower <= sum_{e in S} x_e <= upper` where `S` is a
//! single edge (nonnegativity) or the neighborhood of one queue (rate bounds). Projection uses
//! Dykstra's alternating projections, each slab projection being closed form.

use thiserror::Error;

use crate::market::{Scenario, Topology};
use crate::scalar::Scalar;

pub const PROJECTION_TOL: f64 = 1e-10;
pub const PROJECTION_MAX_SWEEPS: usize = 100_000;
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exploration radius {delta} must lie in (0, r = {r})")]
    DeltaOutOfRange { delta: f64, r: f64 },
    #[error("projection did not converge in {sweeps} sweeps (last change {change:e})")]
    ProjectionNonConvergence { sweeps: usize, change: f64 },
    #[error("non-finite coordinate in projection input")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slab<T> {
    pub members: Vec<usize>,
    pub lower: T,
    pub upper: T,
}

impl<T: Scalar> Slab<T> {
    fn violation(&self, x: &[T]) -> T {
        let s: T = self.members.iter().map(|&e| x[e]).sum();
        (self.lower - s).max(s - self.upper).max(T::zero())
    }
}

/// Intersection of slabs in `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope<T> {
    dim: usize,
    slabs: Vec<Slab<T>>,
}

impl<T: Scalar> Polytope<T> {
    pub fn new(dim: usize, slabs: Vec<Slab<T>>) -> Self {
        Self { dim, slabs }
    }

    /// Slabs shared by `D` and `D'`: a lower bound per coordinate and a sum interval per queue.
    fn from_bounds(
        topology: &Topology,
        coordinate_lower: impl Fn(usize) -> T,
        customer_bounds: impl Fn(usize) -> (T, T),
        server_bounds: impl Fn(usize) -> (T, T),
    ) -> Self {
        let mut slabs = Vec::with_capacity(topology.edge_count() + topology.queue_count());
        for e in 0..topology.edge_count() {
            slabs.push(Slab { members: vec![e], lower: coordinate_lower(e), upper: T::infinity() });
        }
        for i in 0..topology.customers() {
            let (lower, upper) = customer_bounds(i);
            slabs.push(Slab { members: topology.customer_edges(i).to_vec(), lower, upper });
        }
        for j in 0..topology.servers() {
            let (lower, upper) = server_bounds(j);
            slabs.push(Slab { members: topology.server_edges(j).to_vec(), lower, upper });
        }
        Self { dim: topology.edge_count(), slabs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn slabs(&self) -> &[Slab<T>] {
        &self.slabs
    }

    fn check_dim(&self, x: &[T]) -> Result<(), GeometryError> {
        if x.len() != self.dim {
            return Err(GeometryError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// Largest constraint violation at `x` (zero inside).
    pub fn max_violation(&self, x: &[T]) -> Result<T, GeometryError> {
        self.check_dim(x)?;
        Ok(self.slabs.iter().map(|s| s.violation(x)).fold(T::zero(), T::max))
    }

    pub fn contains(&self, x: &[T], tol: T) -> Result<bool, GeometryError> {
        Ok(self.max_violation(x)? <= tol)
    }

    /// Euclidean projection by Dykstra's method.
    pub fn project(&self, x: &[T]) -> Result<Vec<T>, GeometryError> {
        self.check_dim(x)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let tol = T::lit(PROJECTION_TOL).max(T::lit(16.0) * T::epsilon());
        let mut y = x.to_vec();
        let mut corrections: Vec<Vec<T>> = self.slabs.iter().map(|s| vec![T::zero(); s.members.len()]).collect();
        let mut change = T::zero();
        for _ in 0..PROJECTION_MAX_SWEEPS {
            change = T::zero();
            for (slab, corr) in self.slabs.iter().zip(corrections.iter_mut()) {
                let sum: T = slab.members.iter().zip(corr.iter()).map(|(&e, &c)| y[e] + c).sum();
                let n = T::from_count(slab.members.len());
                let shift = if sum < slab.lower {
                    (slab.lower - sum) / n
                } else if sum > slab.upper {
                    (slab.upper - sum) / n
                } else {
                    T::zero()
                };
                for (&e, c) in slab.members.iter().zip(corr.iter_mut()) {
                    // z = y + c is projected to z + shift; the new correction is z - P(z) = -shift.
                    let next = y[e] + *c + shift;
                    let d = next - y[e];
                    change = change + d * d;
                    y[e] = next;
                    *c = -shift;
                }
            }
            if change.sqrt() <= tol && self.max_violation(&y)? <= tol {
                return Ok(y);
            }
        }
        Err(GeometryError::ProjectionNonConvergence {
            sweeps: PROJECTION_MAX_SWEEPS,
            change: change.sqrt().as_f64(),
        })
    }
}

/// The feasible set `D`: `x >= 0` and every queue's induced rate in `[a_min, 1]`.
pub fn feasible_polytope<T: Scalar>(scenario: &Scenario<T>) -> Polytope<T> {
    let a = scenario.a_min();
    Polytope::from_bounds(scenario.topology(), |_| T::zero(), |_| (a, T::one()), |_| (a, T::one()))
}

pub fn membership_d<T: Scalar>(x: &[T], scenario: &Scenario<T>, tol: T) -> Result<bool, GeometryError> {
    feasible_polytope(scenario).contains(x, tol)
}

/// The radius `r`: the minimum over all edges and queues of the distance, in the scaled
/// sense of the shrunk-set construction, from the center point to each face of `D`.
pub fn compute_r<T: Scalar>(scenario: &Scenario<T>) -> T {
    let t = scenario.topology();
    let c = scenario.center();
    let a = scenario.a_min();
    let mut r = c.iter().copied().fold(T::infinity(), T::min);
    let groups = (0..t.customers())
        .map(|i| t.customer_edges(i))
        .chain((0..t.servers()).map(|j| t.server_edges(j)));
    for edges in groups {
        let n = T::from_count(edges.len());
        let sum: T = edges.iter().map(|&e| c[e]).sum();
        r = r.min((T::one() - sum) / n).min((sum - a) / n);
    }
    r
}

/// `D`, `D'`, the radius `r`, the center point and the exploration radius `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrunkGeometry<T> {
    a_min: T,
    r: T,
    delta: T,
    center: Vec<T>,
    feasible: Polytope<T>,
    shrunk: Polytope<T>,
}

impl<T: Scalar> ShrunkGeometry<T> {
    pub fn new(scenario: &Scenario<T>, delta: T) -> Result<Self, GeometryError> {
        let r = compute_r(scenario);
        if !(delta > T::zero() && delta < r) {
            return Err(GeometryError::DeltaOutOfRange { delta: delta.as_f64(), r: r.as_f64() });
        }
        let t = scenario.topology();
        let a = scenario.a_min();
        let center = scenario.center();
        let scale = T::one() - delta / r;
        let bounds = |edges: &[usize]| {
            let sum: T = edges.iter().map(|&e| center[e]).sum();
            (sum - scale * (sum - a), sum + scale * (T::one() - sum))
        };
        let shrunk = Polytope::from_bounds(
            t,
            |e| center[e] - scale * center[e],
            |i| bounds(t.customer_edges(i)),
            |j| bounds(t.server_edges(j)),
        );
        Ok(Self { a_min: a, r, delta, center, feasible: feasible_polytope(scenario), shrunk })
    }

    pub fn a_min(&self) -> T {
        self.a_min
    }

    pub fn r(&self) -> T {
        self.r
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Contraction factor `1 - delta / r`.
    pub fn scale(&self) -> T {
        T::one() - self.delta / self.r
    }

    pub fn center(&self) -> &[T] {
        &self.center
    }

    pub fn feasible(&self) -> &Polytope<T> {
        &self.feasible
    }

    pub fn shrunk(&self) -> &Polytope<T> {
        &self.shrunk
    }

    pub fn membership_d(&self, x: &[T], tol: T) -> Result<bool, GeometryError> {
        self.feasible.contains(x, tol)
    }

    pub fn membership_dprime(&self, x: &[T], tol: T) -> Result<bool, GeometryError> {
        self.shrunk.contains(x, tol)
    }

    pub fn project_dprime(&self, x: &[T]) -> Result<Vec<T>, GeometryError> {
        self.shrunk.project(x)
    }

    /// Image of `y` under the contraction `x_ctr + (1 - delta/r)(y - x_ctr)`.
    pub fn contract(&self, y: &[T]) -> Vec<T> {
        let s = self.scale();
        y.iter().zip(&self.center).map(|(&v, &c)| c + s * (v - c)).collect()
    }
}

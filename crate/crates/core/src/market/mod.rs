//! Market primitives: compatibility graph, demand and supply curves, validated scenarios,
//! Bernoulli arrivals and the queue recursion.

mod curve;
mod dynamics;
mod scenario;
mod topology;

pub use curve::{CurveFamily, CurveKind, CurveSpec, PROBE_POINTS};
pub use dynamics::{apply_queue_dynamics, sample_arrivals, ArrivalVector, QueueState};
pub use scenario::Scenario;
pub use topology::Topology;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarketError {
    #[error("market needs at least one customer type and one server type")]
    EmptySide,
    #[error("edge ({customer}, {server}) refers to a missing type")]
    EdgeOutOfRange { customer: usize, server: usize },
    #[error("edge ({customer}, {server}) listed twice")]
    DuplicateEdge { customer: usize, server: usize },
    #[error("{side} type {index} has no compatible partner")]
    TopologyDisconnectedType { side: &'static str, index: usize },
    #[error("curve parameters must be finite")]
    NonFiniteParameter,
    #[error("exponential curvature must be finite and nonzero, got {0}")]
    InvalidCurvature(f64),
    #[error("{kind:?} curve is not strictly monotone in the required direction")]
    CurveNotMonotone { kind: CurveKind },
    #[error("revenue rate * F(rate) is not concave")]
    RevenueNotConcave,
    #[error("cost rate * G(rate) is not convex")]
    CostNotConvex,
    #[error("forward and inverse curve disagree at price {price}")]
    InverseMismatch { price: f64 },
    #[error("supplied Lipschitz constants {supplied:?} are below the true ones {required:?}")]
    LipschitzTooSmall { supplied: (f64, f64), required: (f64, f64) },
    #[error("rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
    #[error("price {0} outside the curve's price range")]
    PriceOutOfRange(f64),
    #[error("expected {expected} {side} curves, got {got}")]
    CurveCountMismatch { side: &'static str, expected: usize, got: usize },
    #[error("{side} curve {index} has the wrong kind")]
    WrongCurveKind { side: &'static str, index: usize },
    #[error("a_min must lie in (0, 1), got {0}")]
    AminOutOfRange(f64),
    #[error("a_min = {a_min} too large: center sum minus a_min is {slack} for {side} type {index}")]
    AminTooLarge { a_min: f64, side: &'static str, index: usize, slack: f64 },
    #[error("queue {side} {index} would go negative")]
    NegativeQueue { side: &'static str, index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

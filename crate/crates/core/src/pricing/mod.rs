//! The pricing learner: two-point zero-order gradient ascent over per-edge match rates, where
//! each probe's prices are found by bisection against live arrivals, with threshold rejection
//! to cap queue lengths.

mod bisection;
mod learner;
mod params;
mod probe;
mod radii;
mod warm_start;

pub use bisection::bisection_run;
pub use learner::{run_balanced_pricing, run_pricing, Hooks, Learner};
pub use params::LearnerParams;
pub use probe::{gradient_estimate, perturb_targets, sample_unit_direction, ProbeTargets};
pub use radii::{error_radii, ErrorRadii};
pub use warm_start::WarmStart;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::market::MarketError;

/// How a bisection iteration turns its counted slots into a rate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateEstimator {
    /// Average of the first `N` counted arrival indicators.
    #[default]
    SampleAverage,
    /// Test hook: the true rate at the posted midpoint.
    Exact,
}

/// How probe prices are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriceSearch {
    #[default]
    Bisection,
    /// Test hook: post the true prices of the targets for a single slot.
    ExactPrices,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PricingError {
    #[error("parameter regime violation: {0}")]
    ParameterRegimeViolation(String),
    #[error("bisection interval of queue {queue} is inverted")]
    IntervalInverted { queue: usize },
    #[error("iterate is outside the shrunk feasible set")]
    XNotInShrunkSet,
    #[error("probe point left the feasible set")]
    ProbeLeftFeasibleSet,
    #[error("invalid warm start: {0}")]
    WarmStartInvalid(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Market(#[from] MarketError),
}

//! Two-sided queueing market simulation with learning-based pricing.
//!
//! Customers and servers arrive at per-type queues according to posted prices, are matched
//! longest-queue-first over a bipartite compatibility graph, and a platform learns prices by
//! zero-order gradient ascent on profit. Everything numeric is generic over [`Scalar`]
//! (`f32` or `f64`); the aliases at the crate root fix `f64`, with `*32` variants for `f32`.

// `!(a > b)` is how NaN inputs are rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod fluid;
pub mod geometry;
pub mod market;
pub mod matching;
pub mod metrics;
pub mod pricing;
pub mod rng;
pub mod scalar;
pub mod sim;
pub mod trace;

pub use scalar::Scalar;

pub type Scenario = market::Scenario<f64>;
pub type Scenario32 = market::Scenario<f32>;
pub type CurveSpec = market::CurveSpec<f64>;
pub type CurveSpec32 = market::CurveSpec<f32>;
pub type LearnerParams = pricing::LearnerParams<f64>;
pub type LearnerParams32 = pricing::LearnerParams<f32>;
pub type WarmStart = pricing::WarmStart<f64>;
pub type WarmStart32 = pricing::WarmStart<f32>;
pub type RunTrace = trace::RunTrace<f64>;
pub type RunTrace32 = trace::RunTrace<f32>;
pub type FluidSolution = fluid::FluidSolution<f64>;
pub type FluidSolution32 = fluid::FluidSolution<f32>;
pub type ShrunkGeometry = geometry::ShrunkGeometry<f64>;
pub type ShrunkGeometry32 = geometry::ShrunkGeometry<f32>;

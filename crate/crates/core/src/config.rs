//! TOML files for scenarios and warm starts.
//!
//! A scenario file looks like
//!
//! ```toml
//! name = "ul"
//! customers = 1
//! servers = 1
//! a_min = 0.2
//! edges = [[1, 1]]          # 1-based (customer, server) pairs
//!
//! [[demand]]                # one per customer type, in order
//! family = "linear"         # or "exponential" with `curvature = k`
//! p_min = 1.0
//! p_max = 2.0
//! lipschitz = 1.0           # optional, derived from the curve when absent
//! lipschitz_inverse = 1.0   # optional
//!
//! [[supply]]                # one per server type, in order
//! family = "linear"
//! p_min = 0.5
//! p_max = 1.5
//! ```
//!
//! [`save_scenario`] always writes the Lipschitz constants, so a saved file reloads to an
//! identical [`Scenario`].

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{CurveFamily, CurveKind, CurveSpec, MarketError, Scenario, Topology};
use crate::pricing::WarmStart;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot access {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{context}: {message}")]
    Parse { context: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(#[from] MarketError),
}

impl ConfigError {
    fn parse(context: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self::Parse { context: context.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub family: String,
    pub p_min: f64,
    pub p_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz_inverse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub customers: usize,
    pub servers: usize,
    pub a_min: f64,
    pub edges: Vec<[usize; 2]>,
    pub demand: Vec<CurveConfig>,
    pub supply: Vec<CurveConfig>,
}

impl CurveConfig {
    fn build<T: Scalar>(&self, kind: CurveKind, context: &str) -> Result<CurveSpec<T>, ConfigError> {
        let family = match (self.family.as_str(), self.curvature) {
            ("linear", None) => CurveFamily::Linear,
            ("linear", Some(_)) => return Err(ConfigError::parse(context, "linear curves take no curvature")),
            ("exponential", Some(k)) => CurveFamily::Exponential { curvature: T::lit(k) },
            ("exponential", None) => return Err(ConfigError::parse(context, "exponential curves need a curvature")),
            (other, _) => return Err(ConfigError::parse(context, format!("unknown curve family {other:?}"))),
        };
        let curve = CurveSpec::from_bounds(kind, family, T::lit(self.p_min), T::lit(self.p_max))?;
        Ok(match (self.lipschitz, self.lipschitz_inverse) {
            (None, None) => curve,
            (l, li) => {
                let l = l.map_or(curve.lipschitz(), T::lit);
                let li = li.map_or(curve.lipschitz_inverse(), T::lit);
                curve.with_lipschitz(l, li)?
            }
        })
    }

    fn from_curve<T: Scalar>(curve: &CurveSpec<T>) -> Self {
        let curvature = match curve.family() {
            CurveFamily::Linear => None,
            CurveFamily::Exponential { curvature } => Some(curvature.as_f64()),
        };
        Self {
            family: curve.family().name().to_string(),
            p_min: curve.p_min().as_f64(),
            p_max: curve.p_max().as_f64(),
            curvature,
            lipschitz: Some(curve.lipschitz().as_f64()),
            lipschitz_inverse: Some(curve.lipschitz_inverse().as_f64()),
        }
    }
}

impl ScenarioConfig {
    pub fn build<T: Scalar>(&self) -> Result<Scenario<T>, ConfigError> {
        for (side, list, want) in [("demand", &self.demand, self.customers), ("supply", &self.supply, self.servers)] {
            if list.len() != want {
                return Err(ConfigError::parse(side, format!("expected {want} curves, found {}", list.len())));
            }
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (n, &[i, j]) in self.edges.iter().enumerate() {
            if i == 0 || j == 0 {
                return Err(ConfigError::parse(format!("edges[{n}]"), "indices are 1-based"));
            }
            edges.push((i - 1, j - 1));
        }
        let topology = Topology::new(self.customers, self.servers, edges)?;
        let demand = self
            .demand
            .iter()
            .enumerate()
            .map(|(i, c)| c.build(CurveKind::Demand, &format!("demand[{i}]")))
            .collect::<Result<_, _>>()?;
        let supply = self
            .supply
            .iter()
            .enumerate()
            .map(|(j, c)| c.build(CurveKind::Supply, &format!("supply[{j}]")))
            .collect::<Result<_, _>>()?;
        Ok(Scenario::new(self.name.clone(), topology, demand, supply, T::lit(self.a_min))?)
    }

    pub fn from_scenario<T: Scalar>(scenario: &Scenario<T>) -> Self {
        let t = scenario.topology();
        Self {
            name: scenario.name().to_string(),
            customers: t.customers(),
            servers: t.servers(),
            a_min: scenario.a_min().as_f64(),
            edges: t.edges().iter().map(|&(i, j)| [i + 1, j + 1]).collect(),
            demand: scenario.demand().iter().map(CurveConfig::from_curve).collect(),
            supply: scenario.supply().iter().map(CurveConfig::from_curve).collect(),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })
}

fn write(path: &Path, text: &str) -> Result<(), ConfigError> {
    fs::write(path, text).map_err(|e| ConfigError::Io { path: path.to_path_buf(), message: e.to_string() })
}

pub fn parse_scenario<T: Scalar>(text: &str, context: &str) -> Result<Scenario<T>, ConfigError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::parse(context, e))?;
    config.build()
}

pub fn scenario_to_toml<T: Scalar>(scenario: &Scenario<T>) -> String {
    toml::to_string(&ScenarioConfig::from_scenario(scenario)).expect("scenario config always serializes")
}

pub fn load_scenario<T: Scalar>(path: impl AsRef<Path>) -> Result<Scenario<T>, ConfigError> {
    let path = path.as_ref();
    parse_scenario(&read(path)?, &path.display().to_string())
}

pub fn save_scenario<T: Scalar>(scenario: &Scenario<T>, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    write(path.as_ref(), &scenario_to_toml(scenario))
}

/// Warm-start file: the start point and per-queue `[low, high]` price intervals.
///
/// ```toml
/// x = [0.375]
/// customer_intervals = [[1.0, 2.0]]
/// server_intervals = [[0.5, 1.5]]
/// # optional, for the `-` search; defaults to the intervals above
/// minus_customer_intervals = [[1.0, 2.0]]
/// minus_server_intervals = [[0.5, 1.5]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarmStartConfig {
    pub x: Vec<f64>,
    pub customer_intervals: Vec<[f64; 2]>,
    pub server_intervals: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_customer_intervals: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minus_server_intervals: Option<Vec<[f64; 2]>>,
}

impl WarmStartConfig {
    /// Converts to a [`WarmStart`]; dimensions and bounds are checked by `WarmStart::validate`.
    pub fn build<T: Scalar>(&self) -> Result<WarmStart<T>, ConfigError> {
        let join = |c: &[[f64; 2]], s: &[[f64; 2]]| -> Vec<(T, T)> {
            c.iter().chain(s).map(|&[lo, hi]| (T::lit(lo), T::lit(hi))).collect()
        };
        let plus = join(&self.customer_intervals, &self.server_intervals);
        let minus = match (&self.minus_customer_intervals, &self.minus_server_intervals) {
            (None, None) => plus.clone(),
            (Some(c), Some(s)) => join(c, s),
            _ => {
                return Err(ConfigError::parse(
                    "warm start",
                    "minus intervals need both minus_customer_intervals and minus_server_intervals",
                ))
            }
        };
        Ok(WarmStart { x: self.x.iter().map(|&v| T::lit(v)).collect(), plus, minus })
    }

    pub fn from_warm_start<T: Scalar>(warm: &WarmStart<T>, customers: usize) -> Self {
        let split = |v: &[(T, T)]| -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
            let all: Vec<[f64; 2]> = v.iter().map(|&(a, b)| [a.as_f64(), b.as_f64()]).collect();
            (all[..customers].to_vec(), all[customers..].to_vec())
        };
        let (customer_intervals, server_intervals) = split(&warm.plus);
        let (mc, ms) = if warm.minus == warm.plus { (None, None) } else {
            let (c, s) = split(&warm.minus);
            (Some(c), Some(s))
        };
        Self {
            x: warm.x.iter().map(|v| v.as_f64()).collect(),
            customer_intervals,
            server_intervals,
            minus_customer_intervals: mc,
            minus_server_intervals: ms,
        }
    }
}

pub fn load_warm_start<T: Scalar>(path: impl AsRef<Path>) -> Result<WarmStart<T>, ConfigError> {
    let path = path.as_ref();
    let config: WarmStartConfig =
        toml::from_str(&read(path)?).map_err(|e| ConfigError::parse(path.display().to_string(), e))?;
    config.build()
}

pub fn save_warm_start<T: Scalar>(warm: &WarmStart<T>, customers: usize, path: impl AsRef<Path>) -> Result<(), ConfigError> {
    let text = toml::to_string(&WarmStartConfig::from_warm_start(warm, customers)).expect("warm start always serializes");
    write(path.as_ref(), &text)
}

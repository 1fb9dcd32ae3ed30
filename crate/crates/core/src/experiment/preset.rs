use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pricing::{LearnerParams, PricingError};
use crate::scalar::{snapped_ceil, Scalar};

/// Slack when comparing an exponent against the closed end of its range, so `1.0 / 6.0`
/// counts as inside `(0, 1/6]`.
const GAMMA_SLACK: f64 = 1e-12;

/// Parameter schedules as powers of the horizon `T`. Schedules 1 to 3 tune the standard
/// variant and 4 and 5 the balanced one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Corollary {
    /// `eps = T^-1/3`, `eta = delta = T^-1/6`, `q = T^1/2`, `beta = 5`.
    C1,
    /// `eps = T^-g/2`, `eta = delta = T^-g/4`, `q = T^min(g, 1/2)`, `beta = 4/g - 1`, `g` in `(0, 2/3]`.
    C2,
    /// `eps = T^-2(1+g)/9`, `eta = delta = T^-(1+g)/9`, `q = T^g`, `beta = 11`, `g` in `(0, 1/2]`.
    C3,
    /// Rates of [`Corollary::C1`] with `q = T^1/6`.
    C4,
    /// `eps = T^-2g`, `eta = delta = T^-g`, `q = T^g`, `beta = 1/g - 1`, `g` in `(0, 1/6]`.
    C5,
}

impl Corollary {
    pub const ALL: [Corollary; 5] = [Self::C1, Self::C2, Self::C3, Self::C4, Self::C5];

    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    /// Upper end of the admissible exponent range, or `None` if the schedule has no exponent.
    pub fn gamma_max(self) -> Option<f64> {
        match self {
            Self::C1 | Self::C4 => None,
            Self::C2 => Some(2.0 / 3.0),
            Self::C3 => Some(0.5),
            Self::C5 => Some(1.0 / 6.0),
        }
    }
}

impl From<Corollary> for u8 {
    fn from(c: Corollary) -> u8 {
        c.number()
    }
}

impl TryFrom<u8> for Corollary {
    type Error = PresetError;

    fn try_from(n: u8) -> Result<Self, PresetError> {
        match n {
            1..=5 => Ok(Self::ALL[usize::from(n) - 1]),
            _ => Err(PresetError::UnknownCorollary(n.to_string())),
        }
    }
}

impl FromStr for Corollary {
    type Err = PresetError;

    fn from_str(s: &str) -> Result<Self, PresetError> {
        let digits = s.trim().trim_start_matches(['c', 'C']);
        digits.parse::<u8>().map_err(|_| PresetError::UnknownCorollary(s.to_string()))?.try_into()
    }
}

impl fmt::Display for Corollary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresetError {
    #[error("unknown corollary {0:?}, expected 1 to 5")]
    UnknownCorollary(String),
    #[error("corollary {corollary} needs an exponent gamma")]
    MissingGamma { corollary: Corollary },
    #[error("corollary {corollary} takes no exponent")]
    UnexpectedGamma { corollary: Corollary },
    #[error("gamma = {gamma} is outside (0, {max}] for corollary {corollary}")]
    GammaOutOfRange { corollary: Corollary, gamma: f64, max: f64 },
    #[error("horizon must be at least 2, got {0}")]
    HorizonTooSmall(u64),
    #[error("resolved parameters leave the analysed regime: {0}")]
    RegimeViolation(String),
}

/// `T^exponent` computed as `2^(exponent log2 T)`, exact whenever that product is an integer.
fn power(horizon: u64, exponent: f64) -> f64 {
    ((horizon as f64).log2() * exponent).exp2()
}

/// Resolves a corollary's schedule at horizon `horizon`. `q_th` is rounded up; `epsilon`, `eta`
/// and `delta` stay exact powers.
pub fn preset_parameters<T: Scalar>(
    corollary: Corollary,
    gamma: Option<f64>,
    horizon: u64,
) -> Result<LearnerParams<T>, PresetError> {
    if horizon < 2 {
        return Err(PresetError::HorizonTooSmall(horizon));
    }
    let g = match (corollary.gamma_max(), gamma) {
        (None, None) => 0.0,
        (None, Some(_)) => return Err(PresetError::UnexpectedGamma { corollary }),
        (Some(_), None) => return Err(PresetError::MissingGamma { corollary }),
        (Some(max), Some(g)) => {
            if !(g > 0.0 && g <= max + GAMMA_SLACK) {
                return Err(PresetError::GammaOutOfRange { corollary, gamma: g, max });
            }
            g
        }
    };
    // (epsilon exponent, step exponent, threshold exponent, beta), all exponents negated.
    let (e_eps, e_step, e_q, beta) = match corollary {
        Corollary::C1 => (1.0 / 3.0, 1.0 / 6.0, 0.5, 5.0),
        Corollary::C2 => (g / 2.0, g / 4.0, g.min(0.5), 4.0 / g - 1.0),
        Corollary::C3 => (2.0 * (1.0 + g) / 9.0, (1.0 + g) / 9.0, g, 11.0),
        Corollary::C4 => (1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 5.0),
        Corollary::C5 => (2.0 * g, g, g, 1.0 / g - 1.0),
    };
    let epsilon = power(horizon, -e_eps);
    let step = power(horizon, -e_step);
    let q = snapped_ceil(power(horizon, e_q)).max(1.0);
    if epsilon >= step {
        return Err(PresetError::RegimeViolation(format!("epsilon = {epsilon} is not below delta = {step}")));
    }
    if !(beta > 0.0) {
        return Err(PresetError::RegimeViolation(format!("beta = {beta} must be positive")));
    }
    LearnerParams::new(T::lit(step), T::lit(step), T::lit(epsilon), T::lit(beta), q as u64).map_err(|e| match e {
        PricingError::ParameterRegimeViolation(m) => PresetError::RegimeViolation(m),
        other => PresetError::RegimeViolation(other.to_string()),
    })
}

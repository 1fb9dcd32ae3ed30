use serde::{Deserialize, Serialize};

use super::MarketError;
use crate::scalar::Scalar;

/// Number of points used by the construction-time shape probes.
pub const PROBE_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Demand,
    Supply,
}

/// Functional family of a curve. Every family is written as
/// `price(rate) = at_zero + (at_one - at_zero) * shape(rate)` with `shape(0) = 0`, `shape(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveFamily<T> {
    /// `shape(s) = s`.
    Linear,
    /// `shape(s) = (exp(k s) - 1) / (exp(k) - 1)` for a nonzero curvature `k`.
    Exponential { curvature: T },
}

impl<T: Scalar> CurveFamily<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Exponential { .. } => "exponential",
        }
    }

    fn shape(&self, s: T) -> T {
        match *self {
            Self::Linear => s,
            Self::Exponential { curvature: k } => (k * s).exp_m1() / k.exp_m1(),
        }
    }

    fn shape_inverse(&self, y: T) -> T {
        match *self {
            Self::Linear => y,
            Self::Exponential { curvature: k } => (y * k.exp_m1()).ln_1p() / k,
        }
    }

    /// Smallest and largest value of `shape'` on `[0, 1]`.
    fn shape_slope_bounds(&self) -> (T, T) {
        match *self {
            Self::Linear => (T::one(), T::one()),
            Self::Exponential { curvature: k } => {
                let at = |s: T| k * (k * s).exp() / k.exp_m1();
                let (a, b) = (at(T::zero()), at(T::one()));
                (a.min(b), a.max(b))
            }
        }
    }
}

/// A demand curve `F: rate -> price` (strictly decreasing) or a supply curve
/// `G: rate -> price` (strictly increasing), bijective between `[0, 1]` and `[p_min, p_max]`.
///
/// The Lipschitz constants are metadata the platform is assumed to know even though the
/// curve itself is hidden from the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec<T> {
    kind: CurveKind,
    family: CurveFamily<T>,
    at_zero: T,
    at_one: T,
    lipschitz: T,
    lipschitz_inverse: T,
}

impl<T: Scalar> CurveSpec<T> {
    /// Builds a curve from its prices at rate 0 and rate 1 and validates its shape.
    pub fn new(kind: CurveKind, family: CurveFamily<T>, at_zero: T, at_one: T) -> Result<Self, MarketError> {
        if !at_zero.is_finite() || !at_one.is_finite() {
            return Err(MarketError::NonFiniteParameter);
        }
        if let CurveFamily::Exponential { curvature } = family {
            if !curvature.is_finite() || curvature == T::zero() {
                return Err(MarketError::InvalidCurvature(curvature.as_f64()));
            }
        }
        let span = (at_one - at_zero).abs();
        let (lo, hi) = family.shape_slope_bounds();
        let curve = Self {
            kind,
            family,
            at_zero,
            at_one,
            lipschitz: span * hi,
            lipschitz_inverse: T::one() / (span * lo),
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Linear demand `F(rate) = p_max - (p_max - p_min) rate`.
    pub fn linear_demand(p_min: T, p_max: T) -> Result<Self, MarketError> {
        Self::new(CurveKind::Demand, CurveFamily::Linear, p_max, p_min)
    }

    /// Linear supply `G(rate) = p_min + (p_max - p_min) rate`.
    pub fn linear_supply(p_min: T, p_max: T) -> Result<Self, MarketError> {
        Self::new(CurveKind::Supply, CurveFamily::Linear, p_min, p_max)
    }

    /// Builds a curve with the orientation implied by `kind` from its price bounds.
    pub fn from_bounds(kind: CurveKind, family: CurveFamily<T>, p_min: T, p_max: T) -> Result<Self, MarketError> {
        match kind {
            CurveKind::Demand => Self::new(kind, family, p_max, p_min),
            CurveKind::Supply => Self::new(kind, family, p_min, p_max),
        }
    }

    /// Replaces the derived Lipschitz constants with caller-supplied ones.
    /// Supplied constants may be looser than the true ones, never tighter.
    pub fn with_lipschitz(mut self, lipschitz: T, lipschitz_inverse: T) -> Result<Self, MarketError> {
        let slack = T::one() - T::lit(1e-9);
        if !(lipschitz >= self.lipschitz * slack) || !(lipschitz_inverse >= self.lipschitz_inverse * slack) {
            return Err(MarketError::LipschitzTooSmall {
                supplied: (lipschitz.as_f64(), lipschitz_inverse.as_f64()),
                required: (self.lipschitz.as_f64(), self.lipschitz_inverse.as_f64()),
            });
        }
        self.lipschitz = lipschitz;
        self.lipschitz_inverse = lipschitz_inverse;
        Ok(self)
    }

    fn validate(&self) -> Result<(), MarketError> {
        let decreasing = self.at_one < self.at_zero;
        let increasing = self.at_one > self.at_zero;
        let oriented = match self.kind {
            CurveKind::Demand => decreasing,
            CurveKind::Supply => increasing,
        };
        if !oriented {
            return Err(MarketError::CurveNotMonotone { kind: self.kind });
        }

        let grid: Vec<T> = (0..PROBE_POINTS)
            .map(|n| T::from_count(n) / T::from_count(PROBE_POINTS - 1))
            .collect();
        let prices: Vec<T> = grid.iter().map(|&s| self.price_unchecked(s)).collect();
        let strict = prices.windows(2).all(|w| match self.kind {
            CurveKind::Demand => w[1] < w[0],
            CurveKind::Supply => w[1] > w[0],
        });
        if !strict {
            return Err(MarketError::CurveNotMonotone { kind: self.kind });
        }

        let scale = self.p_max().abs().max(T::one());
        let tol = T::lit(1e-9).max(T::lit(64.0) * T::epsilon() * scale);
        let value: Vec<T> = grid.iter().zip(&prices).map(|(&s, &p)| s * p).collect();
        for w in value.windows(3) {
            let second = w[0] - w[1] - w[1] + w[2];
            match self.kind {
                CurveKind::Demand if second > tol => return Err(MarketError::RevenueNotConcave),
                CurveKind::Supply if second < -tol => return Err(MarketError::CostNotConvex),
                _ => {}
            }
        }

        let round_trip_tol = T::lit(1e-12).max(T::lit(64.0) * T::epsilon()) * scale;
        for &p in &prices {
            let back = self.price_unchecked(self.rate_clamped(p));
            if (back - p).abs() > round_trip_tol {
                return Err(MarketError::InverseMismatch { price: p.as_f64() });
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn family(&self) -> CurveFamily<T> {
        self.family
    }

    pub fn p_min(&self) -> T {
        self.at_zero.min(self.at_one)
    }

    pub fn p_max(&self) -> T {
        self.at_zero.max(self.at_one)
    }

    pub fn price_range(&self) -> T {
        self.p_max() - self.p_min()
    }

    /// Lipschitz constant of the forward map rate -> price.
    pub fn lipschitz(&self) -> T {
        self.lipschitz
    }

    /// Lipschitz constant of the inverse map price -> rate.
    pub fn lipschitz_inverse(&self) -> T {
        self.lipschitz_inverse
    }

    /// The price that shuts arrivals off: `p_max` for demand, `p_min` for supply.
    pub fn rejection_price(&self) -> T {
        match self.kind {
            CurveKind::Demand => self.p_max(),
            CurveKind::Supply => self.p_min(),
        }
    }

    /// Forward evaluation `F(rate)` or `G(rate)`.
    pub fn price(&self, rate: T) -> Result<T, MarketError> {
        if !(rate >= T::zero() && rate <= T::one()) {
            return Err(MarketError::RateOutOfRange(rate.as_f64()));
        }
        Ok(self.price_unchecked(rate))
    }

    /// Inverse evaluation `F^{-1}(price)` or `G^{-1}(price)`.
    pub fn rate(&self, price: T) -> Result<T, MarketError> {
        if !(price >= self.p_min() && price <= self.p_max()) {
            return Err(MarketError::PriceOutOfRange(price.as_f64()));
        }
        Ok(self.rate_clamped(price))
    }

    /// Inverse extended by constants outside the price range: a demand curve has rate 0
    /// above `p_max` and rate 1 below `p_min` (mirrored for supply).
    pub fn rate_clamped(&self, price: T) -> T {
        let y = (price - self.at_zero) / (self.at_one - self.at_zero);
        let y = y.max(T::zero()).min(T::one());
        self.family.shape_inverse(y).max(T::zero()).min(T::one())
    }

    pub(crate) fn price_unchecked(&self, rate: T) -> T {
        let p = self.at_zero + (self.at_one - self.at_zero) * self.family.shape(rate);
        p.max(self.p_min()).min(self.p_max())
    }

    /// Price at zero rate and at unit rate.
    pub fn endpoints(&self) -> (T, T) {
        (self.at_zero, self.at_one)
    }

    /// Closed-form derivative of the forward map, for families that have one wired in.
    pub fn analytic_slope(&self, _rate: T) -> Option<T> {
        match self.family {
            CurveFamily::Linear => Some(self.at_one - self.at_zero),
            CurveFamily::Exponential { .. } => None,
        }
    }

    /// Converts the curve to another scalar type.
    pub fn cast<U: Scalar>(&self) -> CurveSpec<U> {
        let c = |v: T| U::lit(v.as_f64());
        CurveSpec {
            kind: self.kind,
            family: match self.family {
                CurveFamily::Linear => CurveFamily::Linear,
                CurveFamily::Exponential { curvature } => CurveFamily::Exponential { curvature: c(curvature) },
            },
            at_zero: c(self.at_zero),
            at_one: c(self.at_one),
            lipschitz: c(self.lipschitz),
            lipschitz_inverse: c(self.lipschitz_inverse),
        }
    }
}

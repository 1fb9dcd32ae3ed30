use super::{CurveKind, CurveSpec, MarketError, Topology};
use crate::scalar::Scalar;

/// A validated market: topology, one demand curve per customer type, one supply curve per
/// server type, and the rate floor `a_min`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    name: String,
    topology: Topology,
    demand: Vec<CurveSpec<T>>,
    supply: Vec<CurveSpec<T>>,
    a_min: T,
}

impl<T: Scalar> Scenario<T> {
    pub fn new(
        name: impl Into<String>,
        topology: Topology,
        demand: Vec<CurveSpec<T>>,
        supply: Vec<CurveSpec<T>>,
        a_min: T,
    ) -> Result<Self, MarketError> {
        if demand.len() != topology.customers() {
            return Err(MarketError::CurveCountMismatch {
                side: "demand",
                expected: topology.customers(),
                got: demand.len(),
            });
        }
        if supply.len() != topology.servers() {
            return Err(MarketError::CurveCountMismatch {
                side: "supply",
                expected: topology.servers(),
                got: supply.len(),
            });
        }
        if let Some(i) = demand.iter().position(|c| c.kind() != CurveKind::Demand) {
            return Err(MarketError::WrongCurveKind { side: "demand", index: i });
        }
        if let Some(j) = supply.iter().position(|c| c.kind() != CurveKind::Supply) {
            return Err(MarketError::WrongCurveKind { side: "supply", index: j });
        }
        if !(a_min > T::zero()) || !a_min.is_finite() {
            return Err(MarketError::AminOutOfRange(a_min.as_f64()));
        }

        let scenario = Self { name: name.into(), topology, demand, supply, a_min };
        let center = scenario.center();
        let t = &scenario.topology;
        let sides = [
            ("customer", (0..t.customers()).map(|i| t.customer_edges(i)).collect::<Vec<_>>()),
            ("server", (0..t.servers()).map(|j| t.server_edges(j)).collect::<Vec<_>>()),
        ];
        for (side, groups) in sides {
            for (index, edges) in groups.into_iter().enumerate() {
                let slack = edges.iter().map(|&e| center[e]).sum::<T>() - a_min;
                if !(slack > T::zero()) {
                    return Err(MarketError::AminTooLarge {
                        a_min: a_min.as_f64(),
                        side,
                        index,
                        slack: slack.as_f64(),
                    });
                }
            }
        }
        Ok(scenario)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn demand(&self) -> &[CurveSpec<T>] {
        &self.demand
    }

    pub fn supply(&self) -> &[CurveSpec<T>] {
        &self.supply
    }

    pub fn a_min(&self) -> T {
        self.a_min
    }

    /// Center point `(a_min + 1) / (2 N_ij)` per edge.
    pub fn center(&self) -> Vec<T> {
        let two = T::lit(2.0);
        (0..self.topology.edge_count())
            .map(|e| (self.a_min + T::one()) / (two * T::from_count(self.topology.max_degree(e))))
            .collect()
    }

    /// Stable 64-bit FNV-1a digest of the scenario contents.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv(0xcbf2_9ce4_8422_2325);
        h.usize(self.topology.customers());
        h.usize(self.topology.servers());
        for &(i, j) in self.topology.edges() {
            h.usize(i);
            h.usize(j);
        }
        for c in self.demand.iter().chain(&self.supply) {
            h.bytes(c.family().name().as_bytes());
            if let super::CurveFamily::Exponential { curvature } = c.family() {
                h.f64(curvature.as_f64());
            }
            let (z, o) = c.endpoints();
            for v in [z, o, c.lipschitz(), c.lipschitz_inverse()] {
                h.f64(v.as_f64());
            }
        }
        h.f64(self.a_min.as_f64());
        h.0
    }

    pub fn cast<U: Scalar>(&self) -> Scenario<U> {
        Scenario {
            name: self.name.clone(),
            topology: self.topology.clone(),
            demand: self.demand.iter().map(CurveSpec::cast).collect(),
            supply: self.supply.iter().map(CurveSpec::cast).collect(),
            a_min: U::lit(self.a_min.as_f64()),
        }
    }

    /// Profit rate at per-queue arrival rates: `sum lambda F(lambda) - sum mu G(mu)`.
    pub fn profit_at_rates(&self, lambda: &[T], mu: &[T]) -> Result<T, MarketError> {
        let mut total = T::zero();
        for (c, &l) in self.demand.iter().zip(lambda) {
            total = total + l * c.price(l)?;
        }
        for (c, &m) in self.supply.iter().zip(mu) {
            total = total - m * c.price(m)?;
        }
        Ok(total)
    }
}

struct Fnv(u64);

impl Fnv {
    fn bytes(&mut self, b: &[u8]) {
        for &x in b {
            self.0 ^= u64::from(x);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn usize(&mut self, v: usize) {
        self.bytes(&(v as u64).to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.bytes(&v.to_bits().to_le_bytes());
    }
}

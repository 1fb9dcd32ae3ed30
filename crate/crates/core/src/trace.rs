//! Per-slot run records, stored column-wise.

use serde::Serialize;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Standard,
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

/// Conditions under which a run proceeds but leaves the regime the queue and regret
/// guarantees were derived for.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegimeWarning {
    EpsilonNotBelowDelta { epsilon: f64, delta: f64 },
    ErrorRadiusExceedsRange { side: &'static str, index: usize, width: f64, range: f64 },
}

/// One bisection iteration `m` of one price search.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionStep<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub midpoints: Vec<T>,
    /// Counted slots per queue when the iteration ended (may exceed `N` for early finishers).
    pub counted: Vec<u64>,
    /// Rate estimates compared against the targets; `None` if the horizon ran out first.
    pub estimates: Option<Vec<T>>,
    pub start_slot: u64,
    pub end_slot: u64,
}

/// One complete price search (all `M` bisection iterations) for a `+` or `-` probe.
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionLog<T> {
    pub branch: Branch,
    pub threshold: Option<u64>,
    pub targets: Vec<T>,
    pub initial: Vec<(T, T)>,
    pub steps: Vec<BisectionStep<T>>,
    pub final_prices: Vec<T>,
    pub truncated: bool,
}

/// One outer iteration `k` of the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterRecord<T> {
    pub k: usize,
    pub x: Vec<T>,
    pub direction: Vec<T>,
    pub x_plus: Vec<T>,
    pub x_minus: Vec<T>,
    pub searches: Vec<BisectionLog<T>>,
    pub gradient: Option<Vec<T>>,
    pub start_slot: u64,
    pub end_slot: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TraceMeta {
    pub scenario: String,
    pub scenario_fingerprint: u64,
    pub seed: u64,
    pub horizon: u64,
    pub variant: Option<Variant>,
    pub truncated: bool,
    pub warnings: Vec<RegimeWarning>,
}

/// Column-wise per-slot record. Queue-indexed columns hold customers `0..I` then servers `0..J`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace<T> {
    pub meta: TraceMeta,
    customers: usize,
    servers: usize,
    edges: usize,
    prices: Vec<T>,
    rates: Vec<T>,
    arrivals: Vec<u8>,
    rejected: Vec<bool>,
    matches: Vec<u8>,
    queues: Vec<u32>,
    profit: Vec<T>,
    pub iterations: Vec<OuterRecord<T>>,
}

/// Borrowed view of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot<'a, T> {
    pub prices: &'a [T],
    pub rates: &'a [T],
    pub arrivals: &'a [u8],
    pub rejected: &'a [bool],
    pub matches: &'a [u8],
    /// Queue lengths after the slot.
    pub queues: &'a [u32],
    pub profit: T,
}

impl<T: Scalar> RunTrace<T> {
    pub fn new(customers: usize, servers: usize, edges: usize) -> Self {
        Self { customers, servers, edges, ..Default::default() }
    }

    pub fn customers(&self) -> usize {
        self.customers
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn edges(&self) -> usize {
        self.edges
    }

    fn queue_count(&self) -> usize {
        self.customers + self.servers
    }

    pub fn len(&self) -> usize {
        self.profit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profit.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        prices: &[T],
        rates: &[T],
        arrivals: &[u8],
        rejected: &[bool],
        matches: &[u32],
        queues: impl IntoIterator<Item = u64>,
        profit: T,
    ) {
        debug_assert_eq!(prices.len(), self.queue_count());
        debug_assert_eq!(matches.len(), self.edges);
        self.prices.extend_from_slice(prices);
        self.rates.extend_from_slice(rates);
        self.arrivals.extend_from_slice(arrivals);
        self.rejected.extend_from_slice(rejected);
        self.matches.extend(matches.iter().map(|&m| u8::try_from(m).expect("at most two matches per edge")));
        self.queues.extend(queues.into_iter().map(|q| u32::try_from(q).expect("queue fits in u32")));
        self.profit.push(profit);
    }

    pub fn slot(&self, t: usize) -> Slot<'_, T> {
        let q = self.queue_count();
        let qs = t * q..(t + 1) * q;
        let es = t * self.edges..(t + 1) * self.edges;
        Slot {
            prices: &self.prices[qs.clone()],
            rates: &self.rates[qs.clone()],
            arrivals: &self.arrivals[qs.clone()],
            rejected: &self.rejected[qs.clone()],
            matches: &self.matches[es],
            queues: &self.queues[qs],
            profit: self.profit[t],
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = Slot<'_, T>> + '_ {
        (0..self.len()).map(|t| self.slot(t))
    }

    pub fn profit(&self) -> &[T] {
        &self.profit
    }

    /// Recomputes realized profit `sum A_c p_c - sum A_s p_s` for slot `t`.
    pub fn recompute_profit(&self, t: usize) -> T {
        let s = self.slot(t);
        let (c, sv) = (self.customers, self.servers);
        let revenue: T = (0..c).filter(|&i| s.arrivals[i] == 1).map(|i| s.prices[i]).sum();
        let cost: T = (c..c + sv).filter(|&j| s.arrivals[j] == 1).map(|j| s.prices[j]).sum();
        revenue - cost
    }
}

//! Live market: posts prices, draws arrivals from the true curves, matches, and records.

use rand::Rng;

use crate::market::{sample_arrivals, MarketError, QueueState, Scenario};
use crate::matching::matching_step;
use crate::scalar::Scalar;
use crate::trace::RunTrace;

pub struct MarketSim<'a, T, R> {
    scenario: &'a Scenario<T>,
    queues: QueueState,
    clock: u64,
    horizon: u64,
    rng: R,
    trace: RunTrace<T>,
    prices: Vec<T>,
    rates: Vec<T>,
    arrivals: Vec<u8>,
}

impl<'a, T: Scalar, R: Rng> MarketSim<'a, T, R> {
    pub fn new(scenario: &'a Scenario<T>, horizon: u64, rng: R) -> Self {
        let t = scenario.topology();
        let n = t.queue_count();
        Self {
            scenario,
            queues: QueueState::empty(t),
            clock: 0,
            horizon,
            rng,
            trace: RunTrace::new(t.customers(), t.servers(), t.edge_count()),
            prices: Vec::with_capacity(n),
            rates: Vec::with_capacity(n),
            arrivals: Vec::with_capacity(n),
        }
    }

    /// Starts from the given queue lengths instead of empty queues.
    pub fn with_queues(mut self, queues: QueueState) -> Self {
        self.queues = queues;
        self
    }

    pub fn scenario(&self) -> &'a Scenario<T> {
        self.scenario
    }

    pub fn queues(&self) -> &QueueState {
        &self.queues
    }

    /// Slots already run.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn exhausted(&self) -> bool {
        self.clock >= self.horizon
    }

    /// Queue length at the start of the current slot; customers `0..I` then servers.
    pub fn queue_len(&self, q: usize) -> u64 {
        let c = self.queues.customers.len();
        if q < c {
            self.queues.customers[q]
        } else {
            self.queues.servers[q - c]
        }
    }

    /// Runs one slot at the given posted prices (customers then servers). Prices outside a
    /// curve's range are clamped onto it before posting. Returns the arrival indicators.
    pub fn step(&mut self, posted: &[T], rejected: &[bool]) -> Result<&[u8], MarketError> {
        let sc = self.scenario;
        let topo = sc.topology();
        let c = topo.customers();
        if posted.len() != topo.queue_count() {
            return Err(MarketError::DimensionMismatch { expected: topo.queue_count(), got: posted.len() });
        }
        self.prices.clear();
        self.rates.clear();
        for (q, &p) in posted.iter().enumerate() {
            let curve = if q < c { &sc.demand()[q] } else { &sc.supply()[q - c] };
            let p = p.max(curve.p_min()).min(curve.p_max());
            self.prices.push(p);
            self.rates.push(curve.rate_clamped(p));
        }
        let a = sample_arrivals(&self.rates[..c], &self.rates[c..], &mut self.rng)?;
        let out = matching_step(&self.queues, &a, topo);
        self.arrivals.clear();
        self.arrivals.extend(a.customers.iter().chain(&a.servers));

        let revenue: T = (0..c).filter(|&i| a.customers[i] == 1).map(|i| self.prices[i]).sum();
        let cost: T = (0..topo.servers()).filter(|&j| a.servers[j] == 1).map(|j| self.prices[c + j]).sum();
        self.queues = out.queues;
        self.trace.push(
            &self.prices,
            &self.rates,
            &self.arrivals,
            rejected,
            &out.matches,
            self.queues.customers.iter().chain(&self.queues.servers).copied(),
            revenue - cost,
        );
        self.clock += 1;
        Ok(&self.arrivals)
    }

    pub fn trace_mut(&mut self) -> &mut RunTrace<T> {
        &mut self.trace
    }

    pub fn into_trace(self) -> RunTrace<T> {
        self.trace
    }
}

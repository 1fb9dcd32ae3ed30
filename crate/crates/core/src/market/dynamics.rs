use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MarketError, Topology};
use crate::scalar::Scalar;

/// Queue lengths at the start of a slot.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QueueState {
    pub customers: Vec<u64>,
    pub servers: Vec<u64>,
}

impl QueueState {
    pub fn empty(topology: &Topology) -> Self {
        Self { customers: vec![0; topology.customers()], servers: vec![0; topology.servers()] }
    }

    pub fn max_len(&self) -> u64 {
        self.customers.iter().chain(&self.servers).copied().max().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.customers.iter().chain(&self.servers).sum()
    }
}

/// Bernoulli arrival indicators for one slot.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArrivalVector {
    pub customers: Vec<u8>,
    pub servers: Vec<u8>,
}

/// Draws one Bernoulli arrival per queue, customers first then servers.
pub fn sample_arrivals<T: Scalar, R: Rng + ?Sized>(
    customer_rates: &[T],
    server_rates: &[T],
    rng: &mut R,
) -> Result<ArrivalVector, MarketError> {
    if let Some(&r) = customer_rates.iter().chain(server_rates).find(|r| !(**r >= T::zero() && **r <= T::one())) {
        return Err(MarketError::RateOutOfRange(r.as_f64()));
    }
    let mut draw = |r: &T| u8::from(rng.gen_bool(r.as_f64()));
    let customers = customer_rates.iter().map(&mut draw).collect();
    let servers = server_rates.iter().map(&mut draw).collect();
    Ok(ArrivalVector { customers, servers })
}

/// `Q(t+1) = Q(t) + A(t) - departures`, where departures are the per-edge match counts summed
/// over each queue's neighborhood.
pub fn apply_queue_dynamics(
    q: &QueueState,
    a: &ArrivalVector,
    matches: &[u32],
    topology: &Topology,
) -> Result<QueueState, MarketError> {
    if matches.len() != topology.edge_count() {
        return Err(MarketError::DimensionMismatch { expected: topology.edge_count(), got: matches.len() });
    }
    let step = |len: u64, arrival: u8, edges: &[usize], side: &'static str, index: usize| {
        let out: u64 = edges.iter().map(|&e| u64::from(matches[e])).sum();
        (len + u64::from(arrival)).checked_sub(out).ok_or(MarketError::NegativeQueue { side, index })
    };
    let customers = (0..topology.customers())
        .map(|i| step(q.customers[i], a.customers[i], topology.customer_edges(i), "customer", i))
        .collect::<Result<_, _>>()?;
    let servers = (0..topology.servers())
        .map(|j| step(q.servers[j], a.servers[j], topology.server_edges(j), "server", j))
        .collect::<Result<_, _>>()?;
    Ok(QueueState { customers, servers })
}

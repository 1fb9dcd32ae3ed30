//! Longest-queue-first matching for one slot.
//!
//! Arrivals are processed in the fixed order customers `0..I` then servers `0..J`. Each arrival
//! joins its own queue, and if any compatible queue on the other side is nonempty it is matched
//! with the longest such queue (ties go to the lowest index).

use crate::market::{ArrivalVector, QueueState, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchOutcome {
    /// Matches per edge in canonical edge order.
    pub matches: Vec<u32>,
    pub queues: QueueState,
    /// Server type that absorbed customer `i`'s arrival, if it was matched on arrival.
    pub customer_partner: Vec<Option<usize>>,
    /// Customer type that absorbed server `j`'s arrival, if it was matched on arrival.
    pub server_partner: Vec<Option<usize>>,
    pub departures: u64,
}

pub fn matching_step(q: &QueueState, a: &ArrivalVector, topology: &Topology) -> MatchOutcome {
    let mut qc = q.customers.clone();
    let mut qs = q.servers.clone();
    let mut matches = vec![0u32; topology.edge_count()];
    let mut customer_partner = vec![None; topology.customers()];
    let mut server_partner = vec![None; topology.servers()];
    let mut departures = 0;

    for i in 0..topology.customers() {
        qc[i] += u64::from(a.customers[i]);
        if a.customers[i] == 0 {
            continue;
        }
        if let Some(e) = longest(topology.customer_edges(i), |e| qs[topology.edges()[e].1]) {
            let j = topology.edges()[e].1;
            qc[i] -= 1;
            qs[j] -= 1;
            matches[e] += 1;
            customer_partner[i] = Some(j);
            departures += 1;
        }
    }
    for j in 0..topology.servers() {
        qs[j] += u64::from(a.servers[j]);
        if a.servers[j] == 0 {
            continue;
        }
        if let Some(e) = longest(topology.server_edges(j), |e| qc[topology.edges()[e].0]) {
            let i = topology.edges()[e].0;
            qs[j] -= 1;
            qc[i] -= 1;
            matches[e] += 1;
            server_partner[j] = Some(i);
            departures += 1;
        }
    }

    MatchOutcome {
        matches,
        queues: QueueState { customers: qc, servers: qs },
        customer_partner,
        server_partner,
        departures,
    }
}

/// Edge whose opposite queue is longest, first one on ties; `None` when all are empty.
fn longest(edges: &[usize], len: impl Fn(usize) -> u64) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for &e in edges {
        let l = len(e);
        if l > 0 && best.is_none_or(|(_, b)| l > b) {
            best = Some((e, l));
        }
    }
    best.map(|(e, _)| e)
}

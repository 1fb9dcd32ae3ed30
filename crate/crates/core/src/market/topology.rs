use std::collections::BTreeSet;

use super::MarketError;

/// Bipartite compatibility graph between customer types and server types.
///
/// Indices are zero-based. Edges are kept in lexicographic `(customer, server)` order,
/// which is the canonical coordinate order of every per-edge vector in the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    customers: usize,
    servers: usize,
    edges: Vec<(usize, usize)>,
    customer_edges: Vec<Vec<usize>>,
    server_edges: Vec<Vec<usize>>,
    max_degree: Vec<usize>,
}

impl Topology {
    pub fn new(
        customers: usize,
        servers: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, MarketError> {
        if customers == 0 || servers == 0 {
            return Err(MarketError::EmptySide);
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= customers || j >= servers {
                return Err(MarketError::EdgeOutOfRange { customer: i, server: j });
            }
            if !set.insert((i, j)) {
                return Err(MarketError::DuplicateEdge { customer: i, server: j });
            }
        }
        let edges: Vec<_> = set.into_iter().collect();

        let mut customer_edges = vec![Vec::new(); customers];
        let mut server_edges = vec![Vec::new(); servers];
        for (e, &(i, j)) in edges.iter().enumerate() {
            customer_edges[i].push(e);
            server_edges[j].push(e);
        }
        if let Some(i) = customer_edges.iter().position(Vec::is_empty) {
            return Err(MarketError::TopologyDisconnectedType { side: "customer", index: i });
        }
        if let Some(j) = server_edges.iter().position(Vec::is_empty) {
            return Err(MarketError::TopologyDisconnectedType { side: "server", index: j });
        }
        let max_degree = edges
            .iter()
            .map(|&(i, j)| customer_edges[i].len().max(server_edges[j].len()))
            .collect();

        Ok(Self { customers, servers, edges, customer_edges, server_edges, max_degree })
    }

    /// Complete bipartite graph.
    pub fn complete(customers: usize, servers: usize) -> Result<Self, MarketError> {
        Self::new(
            customers,
            servers,
            (0..customers).flat_map(|i| (0..servers).map(move |j| (i, j))),
        )
    }

    pub fn customers(&self) -> usize {
        self.customers
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn queue_count(&self) -> usize {
        self.customers + self.servers
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_index(&self, customer: usize, server: usize) -> Option<usize> {
        self.edges.binary_search(&(customer, server)).ok()
    }

    /// Edge indices incident to customer type `i`.
    pub fn customer_edges(&self, i: usize) -> &[usize] {
        &self.customer_edges[i]
    }

    /// Edge indices incident to server type `j`.
    pub fn server_edges(&self, j: usize) -> &[usize] {
        &self.server_edges[j]
    }

    pub fn customer_degree(&self, i: usize) -> usize {
        self.customer_edges[i].len()
    }

    pub fn server_degree(&self, j: usize) -> usize {
        self.server_edges[j].len()
    }

    /// `max(|E_c,i|, |E_s,j|)` for edge `e = (i, j)`.
    pub fn max_degree(&self, e: usize) -> usize {
        self.max_degree[e]
    }

    /// Servers compatible with customer type `i`, ascending.
    pub fn servers_of(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.customer_edges[i].iter().map(move |&e| self.edges[e].1)
    }

    /// Customers compatible with server type `j`, ascending.
    pub fn customers_of(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.server_edges[j].iter().map(move |&e| self.edges[e].0)
    }

    /// Per-customer sums of a per-edge vector.
    pub fn customer_sums<T: Copy + std::iter::Sum>(&self, x: &[T]) -> Vec<T> {
        self.customer_edges.iter().map(|es| es.iter().map(|&e| x[e]).sum()).collect()
    }

    /// Per-server sums of a per-edge vector.
    pub fn server_sums<T: Copy + std::iter::Sum>(&self, x: &[T]) -> Vec<T> {
        self.server_edges.iter().map(|es| es.iter().map(|&e| x[e]).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighborhoods_match_edges() {
        let t = Topology::new(3, 2, [(0, 0), (1, 0), (1, 1), (2, 1)]).unwrap();
        assert_eq!(t.edge_count(), 4);
        assert_eq!(t.servers_of(1).collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(t.customers_of(1).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!((0..4).map(|e| t.max_degree(e)).collect::<Vec<_>>(), vec![2, 2, 2, 2]);
        assert_eq!(t.edge_index(2, 1), Some(3));
        assert_eq!(t.edge_index(0, 1), None);
    }

    #[test]
    fn edges_are_canonicalised() {
        let t = Topology::new(2, 2, [(1, 1), (0, 1), (1, 0)]).unwrap();
        assert_eq!(t.edges(), &[(0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn rejects_isolated_types() {
        assert!(matches!(
            Topology::new(2, 1, [(0, 0)]),
            Err(MarketError::TopologyDisconnectedType { side: "customer", index: 1 })
        ));
        assert!(matches!(
            Topology::new(1, 2, [(0, 1)]),
            Err(MarketError::TopologyDisconnectedType { side: "server", index: 0 })
        ));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(Topology::new(1, 1, [(0, 1)]), Err(MarketError::EdgeOutOfRange { .. })));
        assert!(matches!(
            Topology::new(1, 1, [(0, 0), (0, 0)]),
            Err(MarketError::DuplicateEdge { .. })
        ));
        assert!(matches!(Topology::new(0, 1, []), Err(MarketError::EmptySide)));
    }

    #[test]
    fn sums_follow_neighborhoods() {
        let t = Topology::complete(2, 1).unwrap();
        assert_eq!(t.customer_sums(&[0.25, 0.5]), vec![0.25, 0.5]);
        assert_eq!(t.server_sums(&[0.25, 0.5]), vec![0.75]);
    }
}

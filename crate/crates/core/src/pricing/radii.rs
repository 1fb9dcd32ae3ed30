use super::LearnerParams;
use crate::market::Scenario;
use crate::scalar::Scalar;

/// Per-queue half-widths of the warm bisection intervals used from the second outer
/// iteration on. They bound how far a queue's price can move in one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRadii<T> {
    pub customers: Vec<T>,
    pub servers: Vec<T>,
}

impl<T: Scalar> ErrorRadii<T> {
    /// Customers then servers.
    pub fn per_queue(&self) -> impl Iterator<Item = T> + '_ {
        self.customers.iter().chain(&self.servers).copied()
    }
}

pub fn error_radii<T: Scalar>(scenario: &Scenario<T>, params: &LearnerParams<T>) -> ErrorRadii<T> {
    let t = scenario.topology();
    let (eta, delta, eps) = (params.eta, params.delta, params.epsilon);
    let two = T::lit(2.0);
    let edges = T::from_count(t.edge_count());
    let edges_sqrt = edges.sqrt();
    let edges_32 = edges * edges_sqrt;

    let drift = |l: T, l_inv: T, range: T| l * (T::one() + l_inv * range);
    let demand = scenario.demand();
    let supply = scenario.supply();
    let drift_sum: T = demand
        .iter()
        .map(|c| drift(c.lipschitz(), c.lipschitz_inverse(), c.price_range()))
        .chain(supply.iter().map(|c| drift(c.lipschitz(), c.lipschitz_inverse(), c.price_range())))
        .sum();
    let level_sum: T = demand
        .iter()
        .enumerate()
        .map(|(i, c)| T::from_count(t.customer_degree(i)) * (c.lipschitz() + c.p_max()))
        .chain(
            supply
                .iter()
                .enumerate()
                .map(|(j, c)| T::from_count(t.server_degree(j)) * (c.lipschitz() + c.p_max())),
        )
        .sum();

    let radius = |l: T, l_inv: T, range: T| {
        two * eta * eps * edges_32 * l / delta * drift_sum
            + two * eps * drift(l, l_inv, range)
            + eta * edges_32 * l * level_sum
            + two * delta * edges_sqrt * l
    };
    ErrorRadii {
        customers: demand.iter().map(|c| radius(c.lipschitz(), c.lipschitz_inverse(), c.price_range())).collect(),
        servers: supply.iter().map(|c| radius(c.lipschitz(), c.lipschitz_inverse(), c.price_range())).collect(),
    }
}

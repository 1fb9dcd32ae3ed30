//! Fixtures and independent oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's geometry and solver code: the shrunk-set
//! bounds are re-derived from scratch, projections are found by enumerating active sets,
//! and fluid optima by grid search.

#![allow(dead_code)]

use qmarket_core::market::{CurveSpec, Scenario, Topology};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn ul_with(a_min: f64) -> Scenario<f64> {
    Scenario::new(
        "ul",
        Topology::complete(1, 1).unwrap(),
        vec![CurveSpec::linear_demand(1.0, 2.0).unwrap()],
        vec![CurveSpec::linear_supply(0.5, 1.5).unwrap()],
        a_min,
    )
    .unwrap()
}

pub fn ul() -> Scenario<f64> {
    ul_with(0.2)
}

/// The shipped three-by-two path market.
pub fn three_by_two() -> Scenario<f64> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/three_by_two.toml");
    qmarket_core::config::load_scenario(path).unwrap()
}

/// Random edge set on `customers x servers` in which every type has at least one edge.
pub fn random_edges<R: Rng>(customers: usize, servers: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let density = rng.gen_range(0.2..0.9);
    let mut edges: Vec<(usize, usize)> = (0..customers)
        .flat_map(|i| (0..servers).map(move |j| (i, j)))
        .filter(|_| rng.gen_bool(density))
        .collect();
    for i in 0..customers {
        if !edges.iter().any(|e| e.0 == i) {
            edges.push((i, rng.gen_range(0..servers)));
        }
    }
    for j in 0..servers {
        if !edges.iter().any(|e| e.1 == j) {
            edges.push((rng.gen_range(0..customers), j));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Random market with linear curves and a valid `a_min`, or `None` if the drawn topology
/// admits no rate floor above 0.005.
pub fn random_scenario<R: Rng>(customers: usize, servers: usize, max_edges: usize, rng: &mut R) -> Option<Scenario<f64>> {
    let mut edges = random_edges(customers, servers, rng);
    edges.shuffle(rng);
    // Dropping an edge may disconnect a type; construction then fails and the caller redraws.
    edges.truncate(max_edges.max(customers.max(servers)));
    let topology = Topology::new(customers, servers, edges).ok()?;
    if topology.edge_count() > max_edges {
        return None;
    }
    let demand = (0..customers)
        .map(|_| {
            let lo = rng.gen_range(0.8..1.6);
            CurveSpec::linear_demand(lo, lo + rng.gen_range(0.4..1.5)).unwrap()
        })
        .collect::<Vec<_>>();
    let supply = (0..servers)
        .map(|_| {
            let lo = rng.gen_range(0.1..0.8);
            CurveSpec::linear_supply(lo, lo + rng.gen_range(0.4..1.5)).unwrap()
        })
        .collect::<Vec<_>>();
    for a_min in [0.2, 0.1, 0.05, 0.02, 0.005] {
        if let Ok(s) = Scenario::new("random", topology.clone(), demand.clone(), supply.clone(), a_min) {
            return Some(s);
        }
    }
    None
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn random_unit<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = norm(&v);
        if n > 1e-3 && n <= 1.0 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// A linear inequality `a . x >= b`.
#[derive(Debug, Clone)]
pub struct Halfspace {
    pub a: Vec<f64>,
    pub b: f64,
}

/// `D'` written out from its definition: `x_e >= (delta/r) c_e`, and for every queue with edge
/// set `S` and center sum `C`, `C - s(C - a_min) <= sum_S x <= C + s(1 - C)` with `s = 1 - delta/r`.
/// `r` is recomputed here as the five-term minimum.
pub fn shrunk_halfspaces(scenario: &Scenario<f64>, delta: f64) -> Vec<Halfspace> {
    let t = scenario.topology();
    let a = scenario.a_min();
    let n_edges = t.edge_count();
    let center: Vec<f64> = t
        .edges()
        .iter()
        .map(|&(i, j)| {
            let deg_c = t.edges().iter().filter(|e| e.0 == i).count();
            let deg_s = t.edges().iter().filter(|e| e.1 == j).count();
            (a + 1.0) / (2.0 * deg_c.max(deg_s) as f64)
        })
        .collect();
    let groups: Vec<Vec<usize>> = (0..t.customers())
        .map(|i| (0..n_edges).filter(|&e| t.edges()[e].0 == i).collect())
        .chain((0..t.servers()).map(|j| (0..n_edges).filter(|&e| t.edges()[e].1 == j).collect()))
        .collect();
    let mut r = center.iter().copied().fold(f64::INFINITY, f64::min);
    for g in &groups {
        let c: f64 = g.iter().map(|&e| center[e]).sum();
        r = r.min((1.0 - c) / g.len() as f64).min((c - a) / g.len() as f64);
    }
    let s = 1.0 - delta / r;
    let mut hs = Vec::new();
    for e in 0..n_edges {
        let mut a_vec = vec![0.0; n_edges];
        a_vec[e] = 1.0;
        hs.push(Halfspace { a: a_vec, b: center[e] - s * center[e] });
    }
    for g in &groups {
        let c: f64 = g.iter().map(|&e| center[e]).sum();
        let mut up = vec![0.0; n_edges];
        let mut down = vec![0.0; n_edges];
        for &e in g {
            up[e] = 1.0;
            down[e] = -1.0;
        }
        hs.push(Halfspace { a: up, b: c - s * (c - a) });
        hs.push(Halfspace { a: down, b: -(c + s * (1.0 - c)) });
    }
    hs
}

/// Solves the square system `m y = rhs` by Gaussian elimination with partial pivoting.
fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col].clone();
            for (v, p) in m[row].iter_mut().zip(&pivot_row).skip(col) {
                *v -= f * p;
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut y = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * y[k]).sum();
        y[row] = (rhs[row] - s) / m[row][row];
    }
    Some(y)
}

/// Euclidean projection onto `{x : a_k . x >= b_k}` by enumerating candidate active sets: for
/// each subset of at most `dim` halfspaces, project onto its affine hull, keep the feasible
/// candidates, and return the closest. Combinatorial, so only for tiny problems.
pub fn brute_force_projection(x: &[f64], hs: &[Halfspace]) -> Vec<f64> {
    let dim = x.len();
    let feasible = |z: &[f64]| hs.iter().all(|h| dot(&h.a, z) >= h.b - 1e-10);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |z: Vec<f64>| {
        if feasible(&z) {
            let d = dist(&z, x);
            if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
                best = Some((d, z));
            }
        }
    };
    consider(x.to_vec());
    let mut subset = Vec::with_capacity(dim);
    fn walk(start: usize, hs: &[Halfspace], x: &[f64], subset: &mut Vec<usize>, dim: usize, out: &mut dyn FnMut(Vec<f64>)) {
        for k in start..hs.len() {
            subset.push(k);
            let gram: Vec<Vec<f64>> = subset.iter().map(|&p| subset.iter().map(|&q| dot(&hs[p].a, &hs[q].a)).collect()).collect();
            let resid: Vec<f64> = subset.iter().map(|&p| dot(&hs[p].a, x) - hs[p].b).collect();
            if let Some(lambda) = solve(gram, resid) {
                let mut z = x.to_vec();
                for (&p, l) in subset.iter().zip(&lambda) {
                    for (zi, ai) in z.iter_mut().zip(&hs[p].a) {
                        *zi -= l * ai;
                    }
                }
                out(z);
                if subset.len() < dim {
                    walk(k + 1, hs, x, subset, dim, out);
                }
            }
            subset.pop();
        }
    }
    walk(0, hs, x, &mut subset, dim, &mut consider);
    best.expect("feasible set is nonempty").1
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// `f(x) = sum_i lambda_i F_i(lambda_i) - sum_j mu_j G_j(mu_j)` evaluated from first principles.
pub fn profit(scenario: &Scenario<f64>, x: &[f64]) -> f64 {
    let t = scenario.topology();
    let mut lambda = vec![0.0; t.customers()];
    let mut mu = vec![0.0; t.servers()];
    for (e, &(i, j)) in t.edges().iter().enumerate() {
        lambda[i] += x[e];
        mu[j] += x[e];
    }
    let rev: f64 = lambda.iter().zip(scenario.demand()).map(|(&l, c)| l * c.price(l.clamp(0.0, 1.0)).unwrap()).sum();
    let cost: f64 = mu.iter().zip(scenario.supply()).map(|(&m, c)| m * c.price(m.clamp(0.0, 1.0)).unwrap()).sum();
    rev - cost
}

/// Maximum of the fluid objective over `D` on the lattice `step * Z^n`, for linear curves and up
/// to three edges. Every coordinate but the last is enumerated; along the last one the objective
/// is concave, so an integer ternary search finds the best lattice point exactly.
pub fn grid_search_optimum(scenario: &Scenario<f64>, step: f64) -> (f64, Vec<f64>) {
    let t = scenario.topology();
    let a = scenario.a_min();
    let n = t.edge_count();
    assert!((1..=3).contains(&n), "grid oracle is for one to three edges");
    let line = |c: &CurveSpec<f64>| {
        let (p0, p1) = (c.price(0.0).unwrap(), c.price(1.0).unwrap());
        assert!((c.price(0.5).unwrap() - 0.5 * (p0 + p1)).abs() < 1e-12, "grid oracle needs linear curves");
        (p0, p1 - p0)
    };
    let dem: Vec<(f64, f64)> = scenario.demand().iter().map(line).collect();
    let sup: Vec<(f64, f64)> = scenario.supply().iter().map(line).collect();
    let edges = t.edges().to_vec();
    let eval = |x: &[f64]| -> Option<f64> {
        let mut lambda = [0.0; 8];
        let mut mu = [0.0; 8];
        for (e, &(i, j)) in edges.iter().enumerate() {
            lambda[i] += x[e];
            mu[j] += x[e];
        }
        let mut f = 0.0;
        for (i, &(p0, k)) in dem.iter().enumerate() {
            let l = lambda[i];
            if l < a - 1e-12 || l > 1.0 + 1e-12 {
                return None;
            }
            f += l * (p0 + k * l);
        }
        for (j, &(p0, k)) in sup.iter().enumerate() {
            let m = mu[j];
            if m < a - 1e-12 || m > 1.0 + 1e-12 {
                return None;
            }
            f -= m * (p0 + k * m);
        }
        Some(f)
    };
    let ticks = (1.0 / step).round() as i64;
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut x = vec![0.0; n];
    for flat in 0..(ticks + 1).pow(n as u32 - 1) {
        let mut rem = flat;
        for slot in x.iter_mut().take(n - 1) {
            *slot = (rem % (ticks + 1)) as f64 * step;
            rem /= ticks + 1;
        }
        // Feasible range of the last coordinate is an interval of lattice indices.
        let (mut lo, mut hi) = (0i64, ticks);
        let last = edges[n - 1];
        for (side, idx) in [(0, last.0), (1, last.1)] {
            let others: f64 = (0..n - 1)
                .filter(|&e| if side == 0 { edges[e].0 == idx } else { edges[e].1 == idx })
                .map(|e| x[e])
                .sum();
            lo = lo.max(((a - others) / step - 1e-9).ceil() as i64);
            hi = hi.min(((1.0 - others) / step + 1e-9).floor() as i64);
        }
        if lo > hi {
            continue;
        }
        let g = |x: &mut Vec<f64>, k: i64| {
            x[n - 1] = k as f64 * step;
            eval(x).unwrap_or(f64::NEG_INFINITY)
        };
        while hi - lo > 2 {
            let m1 = lo + (hi - lo) / 3;
            let m2 = hi - (hi - lo) / 3;
            if g(&mut x, m1) < g(&mut x, m2) {
                lo = m1 + 1;
            } else {
                hi = m2;
            }
        }
        for k in lo..=hi {
            let f = g(&mut x, k);
            if f > best.0 {
                best = (f, x.clone());
            }
        }
    }
    best
}

/// `D` from its definition: nonnegative edge rates, every queue's total rate in `[a_min, 1]`.
pub fn in_d(scenario: &Scenario<f64>, x: &[f64], tol: f64) -> bool {
    let t = scenario.topology();
    let a = scenario.a_min();
    let mut lambda = vec![0.0; t.customers()];
    let mut mu = vec![0.0; t.servers()];
    for (e, &(i, j)) in t.edges().iter().enumerate() {
        if x[e] < -tol {
            return false;
        }
        lambda[i] += x[e];
        mu[j] += x[e];
    }
    lambda.iter().chain(&mu).all(|&s| s >= a - tol && s <= 1.0 + tol)
}

pub fn in_halfspaces(hs: &[Halfspace], x: &[f64], tol: f64) -> bool {
    hs.iter().all(|h| dot(&h.a, x) >= h.b - tol)
}

/// Gradient of the fluid objective for linear curves, written out by hand:
/// `d/dx_ij = F_i(l) + l F_i'(l) - G_j(m) - m G_j'(m)`.
pub fn linear_gradient(scenario: &Scenario<f64>, x: &[f64]) -> Vec<f64> {
    let t = scenario.topology();
    let lambda = t.customer_sums(x);
    let mu = t.server_sums(x);
    let marginal = |c: &CurveSpec<f64>, r: f64| {
        let (p0, p1) = (c.price(0.0).unwrap(), c.price(1.0).unwrap());
        p0 + 2.0 * (p1 - p0) * r
    };
    t.edges()
        .iter()
        .map(|&(i, j)| marginal(&scenario.demand()[i], lambda[i]) - marginal(&scenario.supply()[j], mu[j]))
        .collect()
}

/// Bisection steps and samples per price recomputed from `epsilon` and `beta`.
pub fn steps_and_samples(epsilon: f64, beta: f64) -> (u64, u64) {
    let m = ((1.0 / epsilon).log2() - 1e-9).ceil() as u64;
    let n = (beta * (1.0 / epsilon).ln() / (epsilon * epsilon) - 1e-9).ceil() as u64;
    (m, n)
}

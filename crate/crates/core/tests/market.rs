mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use qmarket_core::market::{apply_queue_dynamics, sample_arrivals, ArrivalVector, CurveSpec, MarketError, QueueState, Scenario, Topology};
use qmarket_core::matching::matching_step;
use qmarket_core::sim::MarketSim;

fn queues(customers: &[u64], servers: &[u64]) -> QueueState {
    QueueState { customers: customers.to_vec(), servers: servers.to_vec() }
}

fn arrivals(customers: &[u8], servers: &[u8]) -> ArrivalVector {
    ArrivalVector { customers: customers.to_vec(), servers: servers.to_vec() }
}

#[test]
fn server_arrival_drains_waiting_customer() {
    let t = Topology::complete(1, 1).unwrap();
    let out = matching_step(&queues(&[2], &[0]), &arrivals(&[0], &[1]), &t);
    assert_eq!(out.matches, vec![1]);
    assert_eq!(out.queues, queues(&[1], &[0]));
    assert_eq!(out.server_partner, vec![Some(0)]);
}

#[test]
fn server_picks_the_longest_customer_queue() {
    let t = Topology::complete(2, 1).unwrap();
    let out = matching_step(&queues(&[3, 5], &[0]), &arrivals(&[0, 0], &[1]), &t);
    assert_eq!(out.queues, queues(&[3, 4], &[0]));
    assert_eq!(out.matches, vec![0, 1]);
}

#[test]
fn idle_slot_changes_nothing() {
    let t = Topology::complete(2, 3).unwrap();
    let q = QueueState::empty(&t);
    let out = matching_step(&q, &arrivals(&[0, 0], &[0, 0, 0]), &t);
    assert!(out.matches.iter().all(|&m| m == 0));
    assert_eq!(out.queues, q);
    assert_eq!(out.departures, 0);
}

#[test]
fn ties_go_to_the_lowest_index() {
    let t = Topology::complete(3, 1).unwrap();
    let out = matching_step(&queues(&[4, 4, 4], &[0]), &arrivals(&[0, 0, 0], &[1]), &t);
    assert_eq!(out.queues.customers, vec![3, 4, 4]);
}

#[test]
fn queue_dynamics_examples() {
    let t = Topology::complete(1, 1).unwrap();
    // The matched server arrives in the same slot.
    let next = apply_queue_dynamics(&queues(&[1], &[0]), &arrivals(&[1], &[1]), &[1], &t).unwrap();
    assert_eq!(next.customers, vec![1]);
    let next = apply_queue_dynamics(&queues(&[0], &[0]), &arrivals(&[0], &[0]), &[0], &t).unwrap();
    assert_eq!(next, queues(&[0], &[0]));
    assert!(apply_queue_dynamics(&queues(&[0], &[0]), &arrivals(&[0], &[0]), &[1], &t).is_err());
}

/// Matching agrees with the queue dynamics, moves at most one unit per edge, and keeps the
/// complementary-emptiness property from any state that has it.
#[test]
fn matching_is_consistent_with_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let (ci, sj) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
        let t = Topology::new(ci, sj, random_edges(ci, sj, &mut rng)).unwrap();
        let mut q = QueueState::empty(&t);
        for _ in 0..200 {
            let a = arrivals(
                &(0..ci).map(|_| u8::from(rng.gen_bool(0.5))).collect::<Vec<_>>(),
                &(0..sj).map(|_| u8::from(rng.gen_bool(0.5))).collect::<Vec<_>>(),
            );
            let out = matching_step(&q, &a, &t);
            assert!(out.matches.iter().all(|&m| m <= 1));
            assert_eq!(apply_queue_dynamics(&q, &a, &out.matches, &t).unwrap(), out.queues);
            for &(i, j) in t.edges() {
                assert!(out.queues.customers[i] == 0 || out.queues.servers[j] == 0);
            }
            q = out.queues;
        }
    }
}

#[test]
fn curve_examples() {
    let s = ul();
    let (f, g) = (&s.demand()[0], &s.supply()[0]);
    assert_eq!(f.price(0.0).unwrap(), 2.0);
    assert!((f.price(0.5).unwrap() - 1.5).abs() < 1e-15);
    assert_eq!(g.price(1.0).unwrap(), 1.5);
    assert!((f.rate(1.5).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(f.rate(2.0).unwrap(), 0.0);
    assert_eq!(g.rate(0.5).unwrap(), 0.0);
}

#[test]
fn scenario_construction_rejects_bad_inputs() {
    let make = |a_min: f64, demand: Result<CurveSpec<f64>, MarketError>| {
        Scenario::new("x", Topology::complete(1, 1).unwrap(), vec![demand?], vec![CurveSpec::linear_supply(0.5, 1.5)?], a_min)
    };
    assert!(make(0.2, CurveSpec::linear_demand(1.0, 2.0)).is_ok());
    assert!(make(1.0, CurveSpec::linear_demand(1.0, 2.0)).is_err());
    // An increasing "demand" curve.
    let increasing = CurveSpec::new(qmarket_core::market::CurveKind::Demand, qmarket_core::market::CurveFamily::Linear, 2.0, 3.0);
    assert!(matches!(make(0.2, increasing), Err(MarketError::CurveNotMonotone { .. })));
}

#[test]
fn arrival_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let zeros = sample_arrivals(&[0.0, 0.0], &[0.0], &mut rng).unwrap();
    assert_eq!(zeros, arrivals(&[0, 0], &[0]));
    let ones = sample_arrivals(&[1.0], &[1.0, 1.0], &mut rng).unwrap();
    assert_eq!(ones, arrivals(&[1], &[1, 1]));
    let hits: u64 = (0..1_000_000).map(|_| u64::from(sample_arrivals(&[0.5], &[], &mut rng).unwrap().customers[0])).sum();
    assert!((hits as f64 / 1e6 - 0.5).abs() < 0.002);
    assert!(sample_arrivals(&[1.5], &[], &mut rng).is_err());
}

#[test]
fn simulation_is_reproducible() {
    let s = three_by_two();
    let run = |seed| {
        let mut sim = MarketSim::new(&s, 500, ChaCha8Rng::seed_from_u64(seed));
        let prices = [1.5, 1.8, 1.3, 1.0, 1.0];
        for _ in 0..500 {
            sim.step(&prices, &[false; 5]).unwrap();
        }
        sim.into_trace()
    };
    assert_eq!(run(3), run(3));
    assert_ne!(run(3), run(4));
}

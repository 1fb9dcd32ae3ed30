mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use qmarket_core::geometry::ShrunkGeometry;
use qmarket_core::market::{CurveSpec, QueueState, Scenario, Topology};
use qmarket_core::pricing::{
    bisection_run, error_radii, gradient_estimate, perturb_targets, Hooks, Learner, LearnerParams, PriceSearch, PricingError,
    RateEstimator, WarmStart,
};
use qmarket_core::rng::RunStreams;
use qmarket_core::sim::MarketSim;
use qmarket_core::trace::Branch;

/// Parameters with a small sample count, so price searches finish in a few hundred slots.
fn quick(delta: f64, epsilon: f64, beta: f64, q: u64) -> LearnerParams<f64> {
    LearnerParams::new(delta, delta, epsilon, beta, q).unwrap()
}

#[test]
fn bisection_hand_trace() {
    let s = ul();
    let params = quick(0.1, 0.125, 1e-6, 10);
    assert_eq!(params.bisection_steps, 3);
    let mut sim = MarketSim::new(&s, 1000, ChaCha8Rng::seed_from_u64(1));
    let log = bisection_run(&[0.5, 0.5], &[(1.0, 2.0), (0.5, 1.5)], None, &mut sim, &params, RateEstimator::Exact, Branch::Plus)
        .unwrap();
    let demand_mids: Vec<f64> = log.steps.iter().map(|st| st.midpoints[0]).collect();
    assert_eq!(demand_mids, vec![1.5, 1.25, 1.375]);
    assert_eq!(log.final_prices[0], 1.375);
    assert!((s.demand()[0].rate(1.375).unwrap() - 0.5).abs() <= 0.25);
}

#[test]
fn boundary_target_drives_price_to_the_top() {
    let s = ul();
    let params = quick(0.1, 2f64.powi(-10), 1e-6, 10);
    let mut sim = MarketSim::new(&s, 10_000, ChaCha8Rng::seed_from_u64(2));
    let log = bisection_run(&[0.0, 0.5], &[(1.0, 2.0), (0.5, 1.5)], None, &mut sim, &params, RateEstimator::Exact, Branch::Plus)
        .unwrap();
    let err = s.demand()[0].rate(log.final_prices[0]).unwrap();
    assert!(err <= 1.0 / 2f64.powi(params.bisection_steps as i32 - 1));
    assert!(log.final_prices[0] > 1.99);
}

/// A customer queue held at length one by a server side that never arrives never accrues a
/// counted sample and is quoted the rejection price throughout.
#[test]
fn pinned_queue_is_rejected_and_never_counted() {
    let s = ul();
    let params = quick(0.1, 0.125, 1e-3, 1);
    let start = QueueState { customers: vec![1], servers: vec![0] };
    let mut sim = MarketSim::new(&s, 300, ChaCha8Rng::seed_from_u64(3)).with_queues(start);
    // The supply interval is the single price with zero arrival rate.
    let log = bisection_run(&[0.5, 0.0], &[(1.0, 2.0), (0.5, 0.5)], Some(1), &mut sim, &params, RateEstimator::SampleAverage, Branch::Plus)
        .unwrap();
    assert!(log.truncated);
    assert_eq!(log.steps.last().unwrap().counted[0], 0);
    let trace = sim.into_trace();
    assert_eq!(trace.len(), 300);
    for slot in trace.slots() {
        assert!(slot.rejected[0]);
        assert_eq!(slot.prices[0], 2.0);
        assert_eq!(slot.arrivals[0], 0);
    }
}

#[test]
fn gradient_examples() {
    let s = ul();
    let g = ShrunkGeometry::new(&s, 0.1).unwrap();
    let exact = |p: &qmarket_core::pricing::ProbeTargets<f64>| {
        vec![s.demand()[0].price(p.lambda[0]).unwrap(), s.supply()[0].price(p.mu[0]).unwrap()]
    };
    let estimate = |u: f64, geometry: &ShrunkGeometry<f64>| {
        let (plus, minus) = perturb_targets(&[0.5], &[u], geometry, s.topology()).unwrap();
        gradient_estimate(&plus, &exact(&plus), &minus, &exact(&minus), &[u], geometry.delta())[0]
    };
    let (plus, minus) = perturb_targets(&[0.5], &[1.0], &g, s.topology()).unwrap();
    assert!((plus.lambda[0] - 0.6).abs() < 1e-15 && (plus.mu[0] - 0.6).abs() < 1e-15);
    assert!((minus.lambda[0] - 0.4).abs() < 1e-15 && (minus.mu[0] - 0.4).abs() < 1e-15);
    // f(x) = 1.5x - 2x^2, so f'(0.5) = -0.5.
    assert!((estimate(1.0, &g) + 0.5).abs() < 1e-12);
    assert!((estimate(-1.0, &g) + 0.5).abs() < 1e-12);
    let half = ShrunkGeometry::new(&s, 0.05).unwrap();
    assert!((estimate(1.0, &half) - estimate(1.0, &g)).abs() < 1e-12);
}

#[test]
fn exact_prices_converge_to_the_fluid_optimum() {
    let s = ul();
    let params = LearnerParams::new(0.05, 0.05, 0.01, 1.0, 10).unwrap();
    let hooks = Hooks { price_search: PriceSearch::ExactPrices, max_outer_iterations: Some(500), ..Hooks::default() };
    let trace = Learner::standard(&s, params).unwrap().with_hooks(hooks).run(10_000, RunStreams::new(4)).unwrap();
    assert_eq!(trace.iterations.len(), 500);
    let last = trace.iterations.last().unwrap();
    let x = last.x[0] + 0.05 * last.gradient.as_ref().unwrap()[0];
    assert!((x - 0.375).abs() < 1e-6, "x = {x}");
}

/// Error radius written out term by term for a one-edge market.
fn one_edge_radius(s: &Scenario<f64>, eta: f64, delta: f64, eps: f64) -> f64 {
    let (f, g) = (&s.demand()[0], &s.supply()[0]);
    let drift = |c: &CurveSpec<f64>| c.lipschitz() * (1.0 + c.lipschitz_inverse() * (c.p_max() - c.p_min()));
    let drift_sum = drift(f) + drift(g);
    let level_sum = (f.lipschitz() + f.p_max()) + (g.lipschitz() + g.p_max());
    let l = f.lipschitz();
    2.0 * eta * eps * l / delta * drift_sum + 2.0 * eps * drift(f) + eta * l * level_sum + 2.0 * delta * l
}

#[test]
fn error_radius_examples() {
    let s = ul();
    let params = LearnerParams::new(0.1, 0.1, 0.01, 1.0, 10).unwrap();
    let e = error_radii(&s, &params);
    assert!((e.customers[0] - 0.87).abs() < 1e-12);
    assert!((e.customers[0] - one_edge_radius(&s, 0.1, 0.1, 0.01)).abs() < 1e-12);

    let doubled = Scenario::new(
        "ul2",
        Topology::complete(1, 1).unwrap(),
        vec![CurveSpec::linear_demand(1.0, 2.0).unwrap().with_lipschitz(2.0, 2.0).unwrap()],
        vec![CurveSpec::linear_supply(0.5, 1.5).unwrap().with_lipschitz(2.0, 2.0).unwrap()],
        0.2,
    )
    .unwrap();
    let e2 = error_radii(&doubled, &params);
    assert!(e2.customers[0] > e.customers[0]);
    assert!((e2.customers[0] - one_edge_radius(&doubled, 0.1, 0.1, 0.01)).abs() < 1e-12);

    let mut previous = f64::INFINITY;
    for k in 2..18 {
        let eps = 2f64.powi(-2 * k);
        let step = eps.sqrt();
        let r = error_radii(&s, &LearnerParams::new(step, step, eps, 1e-12, 10).unwrap()).customers[0];
        assert!(r < previous);
        previous = r;
    }
    assert!(previous < 1e-3);
}

#[test]
fn oversized_warm_interval_is_rejected() {
    let s = ul();
    let params = LearnerParams::new(0.01, 0.01, 1e-3, 1.0, 10).unwrap();
    let radii = error_radii(&s, &params);
    let good = WarmStart::centered_at_true_prices(&s, &radii, vec![0.6]).unwrap();
    assert!(Learner::balanced(&s, params, good.clone()).is_ok());
    let mut wide = good;
    wide.plus[0].1 += 0.5;
    assert!(matches!(Learner::balanced(&s, params, wide), Err(PricingError::WarmStartInvalid(_))));
}

/// Structural invariants on a complete standard run: exact halving, warm intervals of width
/// `2e` around the previous prices, at least `N` counted samples per iteration, iterates in
/// `D'`, and the hard queue bound.
#[test]
fn standard_run_invariants() {
    // On the four-edge market the radius is only below the price range for small steps.
    for (s, params, horizon) in [(ul(), quick(0.03, 0.01, 1e-3, 20), 60_000), (three_by_two(), quick(1e-3, 5e-4, 1e-5, 20), 200_000)] {
        let learner = Learner::standard(&s, params).unwrap();
        assert!(learner.warnings().is_empty(), "{:?}", learner.warnings());
        let trace = learner.run(horizon, RunStreams::new(5)).unwrap();
        let hs = shrunk_halfspaces(&s, params.delta);
        let radii: Vec<f64> = error_radii(&s, &params).per_queue().collect();
        let n = params.samples_per_price;
        assert!(trace.iterations.len() > 20, "{} iterations on {}", trace.iterations.len(), s.name());
        let mut previous: Option<[Vec<f64>; 2]> = None;
        for it in &trace.iterations {
            assert!(in_halfspaces(&hs, &it.x, 1e-9));
            for (b, log) in it.searches.iter().enumerate() {
                for pair in log.steps.windows(2) {
                    for q in 0..radii.len() {
                        // Halving is exact up to the rounding of the midpoint.
                        let (w0, w1) = (pair[0].upper[q] - pair[0].lower[q], pair[1].upper[q] - pair[1].lower[q]);
                        assert!((w1 - w0 / 2.0).abs() <= 4.0 * f64::EPSILON * pair[0].upper[q].abs().max(1.0));
                    }
                }
                if !log.truncated {
                    assert!(log.steps.iter().all(|st| st.counted.iter().all(|&c| c >= n)));
                }
                if let Some(prev) = &previous {
                    for q in 0..radii.len() {
                        assert!((log.initial[q].0 - (prev[b][q] - radii[q])).abs() < 1e-12);
                        assert!((log.initial[q].1 - (prev[b][q] + radii[q])).abs() < 1e-12);
                    }
                } else {
                    assert!(log.threshold.is_none());
                }
            }
            if it.searches.len() == 2 {
                previous = Some([it.searches[0].final_prices.clone(), it.searches[1].final_prices.clone()]);
            }
        }
        let (m, samples) = steps_and_samples(params.epsilon, params.beta);
        let bound = (2 * m * samples).max(20);
        assert!(trace.slots().all(|sl| sl.queues.iter().all(|&q| u64::from(q) <= bound)));
    }
}

#[test]
fn balanced_run_respects_the_threshold() {
    let s = ul();
    let horizon = 1u64 << 16;
    let t = horizon as f64;
    let params = LearnerParams::new(t.powf(-1.0 / 6.0), t.powf(-1.0 / 6.0), t.powf(-1.0 / 3.0), 5.0, 50).unwrap();
    let radii = error_radii(&s, &params);
    let warm = WarmStart::centered_at_true_prices(&s, &radii, s.center()).unwrap();
    for seed in 0..3 {
        let trace = Learner::balanced(&s, params, warm.clone()).unwrap().run(horizon, RunStreams::new(seed)).unwrap();
        assert_eq!(trace.len() as u64, horizon);
        assert!(trace.slots().all(|sl| sl.queues.iter().all(|&q| q <= 50)));
    }
}

/// From prices exactly at the targets and an exact oracle, every bisection interval keeps the
/// target rate inside its image.
#[test]
fn degenerate_warm_start_keeps_targets_bracketed() {
    let s = ul();
    let params = quick(0.05, 2f64.powi(-8), 1e-6, 10);
    let radii = error_radii(&s, &params);
    let warm = WarmStart::centered_at_true_prices(&s, &radii, vec![0.6]).unwrap();
    let mut sim = MarketSim::new(&s, 10_000, ChaCha8Rng::seed_from_u64(6));
    let log = bisection_run(&[0.6, 0.6], &warm.plus, Some(10), &mut sim, &params, RateEstimator::Exact, Branch::Plus).unwrap();
    let (f, g) = (&s.demand()[0], &s.supply()[0]);
    for st in &log.steps {
        assert!(f.rate_clamped(st.upper[0]) <= 0.6 + 1e-12 && 0.6 <= f.rate_clamped(st.lower[0]) + 1e-12);
        assert!(g.rate_clamped(st.lower[1]) <= 0.6 + 1e-12 && 0.6 <= g.rate_clamped(st.upper[1]) + 1e-12);
    }
}

#[test]
fn runs_are_reproducible() {
    let s = three_by_two();
    let params = quick(0.02, 0.05, 0.05, 20);
    let a = Learner::standard(&s, params).unwrap().run(20_000, RunStreams::new(9)).unwrap();
    let b = Learner::standard(&s, params).unwrap().run(20_000, RunStreams::new(9)).unwrap();
    assert_eq!(a, b);
}

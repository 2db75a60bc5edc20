mod common;

use common::{fixture, naive_reach, naive_safety, toy};
use proptest::prelude::*;
use stoch_symbolic::abstraction::{Abstraction, SINK};
use stoch_symbolic::certificate::{h_general, NormConvention};
use stoch_symbolic::model::system::sample_in;
use stoch_symbolic::model::SystemSpec;
use stoch_symbolic::probounds::{alpha_sup, bound_finite_horizon, empirical_sup_deviation};
use stoch_symbolic::quantizer::QuantizationPlan;
use stoch_symbolic::rng::Stream;
use stoch_symbolic::stochsim::{contraction_probe, empirical_bisim_probe, monte_carlo, SimConfig};
use stoch_symbolic::synthesis::{solve_reach, solve_safety, solve_spec, Controller};

fn table_strategy() -> impl Strategy<Value = (usize, usize, Vec<u32>, u32, u32)> {
    (1usize..=8, 1usize..=3).prop_flat_map(|(ns, ni)| {
        let cell = prop_oneof![1 => Just(SINK), 8 => 0..ns as u32];
        (Just(ns), Just(ni), prop::collection::vec(cell, ns * ni), any::<u32>(), any::<u32>())
    })
}

proptest! {
    #[test]
    fn solvers_match_naive_sweeps((ns, ni, table, m1, m2) in table_strategy()) {
        let a = toy(ns, ni, table);
        let (x, y) = (common::bits(m1, ns), common::bits(m2, ns));
        let (win, choice) = solve_safety(&a, &x);
        prop_assert_eq!(&win, &naive_safety(&a, &x));
        for s in (0..ns).filter(|&s| win[s]) {
            let t = a.successor(s, choice[s] as usize);
            prop_assert!(t != SINK && win[t as usize]);
        }
        let r = solve_reach(&a, &x, &y);
        prop_assert_eq!(&r.win, &naive_reach(&a, &x, &y));
        for s in (0..ns).filter(|&s| r.win[s] && r.rank[s] > 0) {
            let t = a.successor(s, r.choice[s] as usize) as usize;
            prop_assert!(r.rank[t] < r.rank[s]);
        }
    }

    #[test]
    fn general_h_grows_with_noise(z1 in 0.001f64..0.1, dz in 0.001f64..0.1, t in 0.1f64..5.0) {
        let pend = fixture("pendulum");
        let mut sys = pend.cfg.system.clone();
        let h = |sys: &SystemSpec| {
            h_general(&pend.gains, pend.cert.hessian_sup(), sys, 2, t, 64, NormConvention::Euclidean).unwrap()
        };
        sys.lipschitz.z = z1;
        let lo = h(&sys);
        sys.lipschitz.z = z1 + dz;
        prop_assert!(h(&sys) > lo);
    }
}

fn coarse_pendulum(eta: f64) -> (common::Fixture, Abstraction, usize) {
    let pend = fixture("pendulum");
    let plan = QuantizationPlan { eta, ..pend.plan };
    let (a, rep) = pend.build_with(plan);
    (pend, a, rep.substeps)
}

#[test]
fn abstraction_and_controller_roundtrip() {
    let (pend, a, _) = coarse_pendulum(0.02);
    let back = Abstraction::from_bytes(&a.to_bytes().unwrap()).unwrap();
    assert_eq!(a, back);
    let c = solve_spec(&a, &pend.cfg.synthesis.spec, &pend.cfg.synthesis.initial).unwrap();
    assert!(c.check_closure(&a));
    assert_eq!(Controller::from_bytes(&c.to_bytes().unwrap()).unwrap(), c);
}

#[test]
fn monte_carlo_is_schedule_independent_and_weakly_convergent() {
    let (pend, a, _) = coarse_pendulum(0.01);
    let c = solve_spec(&a, &pend.cfg.synthesis.spec, &pend.cfg.synthesis.initial).unwrap();
    let sets: Vec<_> = pend.cfg.sim.as_ref().unwrap().sets.iter().map(|s| (s.name.clone(), s.set.clone())).collect();
    let x0 = &pend.cfg.synthesis.initial[0];
    let cfg = SimConfig { dt: 0.003, runs: 200, horizon: 15.0, master_seed: 8, record_stride: 50 };
    let run = |k: usize, cfg: &SimConfig| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| monte_carlo(&pend.cfg.system, &c, x0, cfg, &sets, 2, false).unwrap())
    };
    let coarse = run(1, &cfg);
    assert_eq!(coarse, run(4, &cfg));
    let fine = run(2, &SimConfig { dt: 0.0015, ..cfg });
    for (a, b) in coarse.series.iter().zip(&fine.series) {
        let (ma, mb) = (a.mean.last().unwrap(), b.mean.last().unwrap());
        let se = (a.se.last().unwrap().powi(2) + b.se.last().unwrap().powi(2)).sqrt();
        assert!((ma - mb).abs() <= 3.0 * se + 1e-12, "{}: {ma} vs {mb} (se {se})", a.name);
    }
}

#[test]
fn probe_paths() {
    let (pend, a, substeps) = coarse_pendulum(0.02);
    let forced = empirical_bisim_probe(&pend.cfg.system, &a, 1e-6, 10, 20, 0.003, 3, substeps).unwrap();
    assert!(forced.flagged);
    let s = &pend.cfg.system;
    let quiet = SystemSpec::new(s.drift.clone(), vec![], s.lipschitz, s.input_set.clone(), s.domain.clone()).unwrap();
    let exact = empirical_bisim_probe(&quiet, &a, 0.085, 50, 1, 0.003, 3, substeps).unwrap();
    assert_eq!(exact.se_at_max, 0.0);
    assert!(exact.max_estimate <= a.plan.eta / 2.0 * (1.0 + 1e-9));
}

#[test]
fn gronwall_bound_holds_empirically() {
    let dc = fixture("dcmotor");
    let sys = &dc.cfg.system;
    let mut rng = Stream::new(4, 0);
    for k in 0..20u64 {
        let (a1, a2) = (sample_in(&sys.domain, &mut rng), sample_in(&sys.domain, &mut rng));
        let u = sample_in(&sys.input_set, &mut rng);
        let st = contraction_probe(sys, &dc.cert, &dc.gains, &a1, &a2, &u, &u, 0.05, 1e-4, 200, 4, k);
        assert!(st.mean <= st.bound + 3.0 * st.se, "pair {k}: {st:?}");
    }
}

#[test]
fn finite_horizon_bound_dominates_simulation() {
    let pend = fixture("pendulum");
    let sys = &pend.cfg.system;
    let alpha = alpha_sup(&pend.cert, sys, &sys.domain, 1000, 1).unwrap();
    let (eps, inflation) = (0.005, 0.305);
    let bound = bound_finite_horizon(alpha, pend.gains.kappa, &pend.gains.alpha_lo, 2, inflation, 9, 3.0).unwrap();
    for x0 in [[0.5, 0.0], [-0.9, 0.9], [0.0, 0.0]] {
        let (p, se) = empirical_sup_deviation(sys, &x0, &[1.5], 3.0, 9, inflation + eps, 0.003, 300, 6).unwrap();
        assert!(p <= bound + 3.0 * se, "{x0:?}: {p} vs {bound}");
    }
}

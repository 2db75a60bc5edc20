#![allow(dead_code)]

use std::path::PathBuf;

use stoch_symbolic::abstraction::{Abstraction, Axis, BuildOptions, BuildReport, StateGrid, SINK};
use stoch_symbolic::certificate::{Certificate, DerivedGains};
use stoch_symbolic::cli::ProjectConfig;
use stoch_symbolic::model::BoxUnion;
use stoch_symbolic::quantizer::{plan, QuantizationPlan, Route};

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

pub struct Fixture {
    pub cfg: ProjectConfig,
    pub cert: Certificate,
    pub gains: DerivedGains,
    pub h: f64,
    pub plan: QuantizationPlan,
}

/// Bundled configuration with its certificate, gains, h(σ, τ) and plan.
pub fn fixture(name: &str) -> Fixture {
    let cfg = ProjectConfig::load(&config_path(name)).unwrap();
    let cert = cfg.certificate().unwrap();
    let gains = cert.gains(&cfg.system).unwrap();
    let h = cfg.h_at(&cert, &gains, cfg.plan.tau).unwrap();
    let plan = plan(
        &cfg.plan_request(cert.q),
        &gains,
        h,
        cfg.system.domain.span().unwrap(),
        cfg.system.input_set.span().unwrap(),
    )
    .unwrap();
    Fixture { cfg, cert, gains, h, plan }
}

impl Fixture {
    pub fn build(&self) -> (Abstraction, BuildReport) {
        self.build_with(self.plan)
    }

    pub fn build_with(&self, plan: QuantizationPlan) -> (Abstraction, BuildReport) {
        let inputs = self.cfg.inputs(&plan).unwrap();
        Abstraction::build(&self.cfg.system, plan, inputs, &BuildOptions::default()).unwrap()
    }
}

/// Abstraction over states 0..ns on a 1-D unit lattice with an explicit table.
pub fn toy(ns: usize, ni: usize, successors: Vec<u32>) -> Abstraction {
    let domain = BoxUnion::single(vec![[0.0, (ns - 1).max(1) as f64]]).unwrap();
    let grid = StateGrid::from_axes(domain, 1.0, vec![Axis { k0: 0, count: ns as u32 }]);
    Abstraction {
        plan: QuantizationPlan { tau: 1.0, eta: 1.0, mu: 0.0, eps: 1.0, q: 1, route: Route::Kl, h_at_tau: 0.0 },
        grid,
        inputs: (0..ni).map(|i| vec![i as f64]).collect(),
        successors,
    }
}

/// Greatest fixed point by synchronous sweeps.
pub fn naive_safety(a: &Abstraction, safe: &[bool]) -> Vec<bool> {
    let mut win = safe.to_vec();
    loop {
        let next: Vec<bool> = (0..a.num_states())
            .map(|s| {
                win[s]
                    && (0..a.num_inputs()).any(|i| {
                        let t = a.successor(s, i);
                        t != SINK && win[t as usize]
                    })
            })
            .collect();
        if next == win {
            return win;
        }
        win = next;
    }
}

/// Least fixed point by synchronous sweeps.
pub fn naive_reach(a: &Abstraction, target: &[bool], within: &[bool]) -> Vec<bool> {
    let mut win = target.to_vec();
    loop {
        let next: Vec<bool> = (0..a.num_states())
            .map(|s| {
                win[s]
                    || (within[s]
                        && (0..a.num_inputs()).any(|i| {
                            let t = a.successor(s, i);
                            t != SINK && win[t as usize]
                        }))
            })
            .collect();
        if next == win {
            return win;
        }
        win = next;
    }
}

pub fn bits(mask: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}

/// Every successor table with `ns` states, `ni` inputs and entries in 0..ns ∪ {SINK}.
pub fn all_tables(ns: usize, ni: usize) -> impl Iterator<Item = Vec<u32>> {
    let base = ns as u64 + 1;
    let cells = ns * ni;
    (0..base.pow(cells as u32)).map(move |mut code| {
        (0..cells)
            .map(|_| {
                let d = code % base;
                code /= base;
                if d == ns as u64 {
                    SINK
                } else {
                    d as u32
                }
            })
            .collect()
    })
}

//! Euler-Maruyama simulation, closed-loop Monte Carlo and empirical moment probes.

pub mod csv;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::{integrate_nominal, Abstraction, SINK};
use crate::certificate::{Certificate, DerivedGains};
use crate::error::{Error, Result};
use crate::model::{BoxUnion, SystemSpec};
use crate::rng::Stream;
use crate::synthesis::Controller;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub runs: usize,
    pub horizon: f64,
    pub master_seed: u64,
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn one() -> usize {
    1
}

/// τ/100 for τ ≤ 0.1, τ/1000 otherwise.
pub fn default_dt(tau: f64) -> f64 {
    if tau <= 0.1 {
        tau / 100.0
    } else {
        tau / 1000.0
    }
}

impl SimConfig {
    /// Steps per sampling period; requires dt ≤ τ/10 and τ an integer multiple of dt.
    pub fn steps_per_period(&self, tau: f64) -> Result<usize> {
        let ratio = tau / self.dt;
        let k = ratio.round();
        if !(self.dt > 0.0) || ratio < 10.0 - 1e-9 || (ratio - k).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidArgument(format!("dt = {} must divide τ = {tau} at least ten times", self.dt)));
        }
        Ok(k as usize)
    }

    pub fn total_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// Generic Euler-Maruyama path: x ← x + f(x)dt + g(x, ΔW), ΔW ~ N(0, dt·I_p).
pub struct EulerMaruyama {
    pub dt: f64,
    drift: Vec<f64>,
    noise: Vec<f64>,
    dw: Vec<f64>,
}

impl EulerMaruyama {
    pub fn new(n: usize, p: usize, dt: f64) -> Self {
        EulerMaruyama { dt, drift: vec![0.0; n], noise: vec![0.0; n], dw: vec![0.0; p] }
    }

    pub fn step(
        &mut self,
        x: &mut [f64],
        rng: &mut Stream,
        f: impl Fn(&[f64], &mut [f64]),
        g: impl Fn(&[f64], &[f64], &mut [f64]),
    ) {
        let sq = self.dt.sqrt();
        for w in self.dw.iter_mut() {
            *w = rng.normal() * sq;
        }
        f(x, &mut self.drift);
        self.noise.iter_mut().for_each(|v| *v = 0.0);
        g(x, &self.dw, &mut self.noise);
        for i in 0..x.len() {
            x[i] += self.drift[i] * self.dt + self.noise[i];
        }
    }

    /// Same step for the system with input u; the increments are returned for coupling.
    pub fn step_system(&mut self, sys: &SystemSpec, x: &mut [f64], u: &[f64], rng: &mut Stream) {
        self.step(x, rng, |x, out| sys.drift(x, u, out), |x, dw, out| sys.add_diffusion(x, dw, out));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub run_id: u64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub phases: Vec<usize>,
    /// Controller updates where the snapped state was not winning.
    pub left_events: usize,
    /// First recorded time at which the final phase was active.
    pub final_phase_time: Option<f64>,
}

/// One closed-loop run; the input is refreshed from the controller every τ.
pub fn simulate_run(sys: &SystemSpec, ctrl: &Controller, x0: &[f64], cfg: &SimConfig, run_id: u64) -> Result<Trajectory> {
    let per = cfg.steps_per_period(ctrl.tau)?;
    let steps = cfg.total_steps();
    let stride = cfg.record_stride.max(1);
    let mut rng = Stream::new(cfg.master_seed, run_id);
    let mut em = EulerMaruyama::new(sys.n, sys.p, cfg.dt);
    let mut x = x0.to_vec();
    let mut phase = 0usize;
    let mut u = ctrl.inputs[0].clone();
    let last = ctrl.phases.len() - 1;
    let mut tr = Trajectory {
        run_id,
        times: vec![],
        states: vec![],
        inputs: vec![],
        phases: vec![],
        left_events: 0,
        final_phase_time: None,
    };
    for k in 0..=steps {
        if k % per == 0 {
            match ctrl.refine(&x, phase) {
                Ok((v, p)) => {
                    u = v;
                    phase = p;
                }
                Err(Error::LeftWinningRegion { .. }) => tr.left_events += 1,
                Err(e) => return Err(e),
            }
        }
        let t = k as f64 * cfg.dt;
        if phase == last && tr.final_phase_time.is_none() {
            tr.final_phase_time = Some(t);
        }
        if k % stride == 0 {
            tr.times.push(t);
            tr.states.push(x.clone());
            tr.inputs.push(u.clone());
            tr.phases.push(phase);
        }
        if k == steps {
            break;
        }
        em.step_system(sys, &mut x, &u, &mut rng);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::SimulationDiverged { run_id, step: k });
        }
    }
    Ok(tr)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetSeries {
    pub name: String,
    /// Mean over runs of ‖ξ(t)‖_W^q.
    pub mean: Vec<f64>,
    /// (mean)^{1/q}.
    pub root: Vec<f64>,
    /// Standard error of `mean`.
    pub se: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStats {
    pub times: Vec<f64>,
    pub series: Vec<SetSeries>,
    pub runs: usize,
    /// Left-winning-region events per controller update.
    pub left_rate: f64,
    /// Latest time any run entered the final phase; None if some run never did.
    pub final_phase_time: Option<f64>,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

/// Runs 0..runs in parallel; aggregation is in run order, so results do not depend on scheduling.
pub fn monte_carlo(
    sys: &SystemSpec,
    ctrl: &Controller,
    x0: &[f64],
    cfg: &SimConfig,
    sets: &[(String, BoxUnion)],
    q: u32,
    keep_trajectories: bool,
) -> Result<TraceStats> {
    if cfg.runs == 0 {
        return Err(Error::InvalidArgument("need at least one run".into()));
    }
    let trajs: Vec<Trajectory> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|r| simulate_run(sys, ctrl, x0, cfg, r))
        .collect::<Result<_>>()?;
    let times = trajs[0].times.clone();
    let qf = q as f64;
    let nr = cfg.runs as f64;
    let series = sets
        .iter()
        .map(|(name, set)| {
            let mut mean = vec![0.0; times.len()];
            let mut sq = vec![0.0; times.len()];
            for tr in &trajs {
                for (k, x) in tr.states.iter().enumerate() {
                    let d = set.distance(x).powf(qf);
                    mean[k] += d;
                    sq[k] += d * d;
                }
            }
            let se = mean
                .iter()
                .zip(&sq)
                .map(|(s, s2)| {
                    let m = s / nr;
                    let var = if cfg.runs > 1 { (s2 / nr - m * m).max(0.0) * nr / (nr - 1.0) } else { 0.0 };
                    (var / nr).sqrt()
                })
                .collect();
            let mean: Vec<f64> = mean.iter().map(|s| s / nr).collect();
            let root = mean.iter().map(|m| m.powf(1.0 / qf)).collect();
            SetSeries { name: name.clone(), mean, root, se }
        })
        .collect();
    let updates = (cfg.total_steps() / cfg.steps_per_period(ctrl.tau)? + 1) * cfg.runs;
    let left: usize = trajs.iter().map(|t| t.left_events).sum();
    let final_phase_time = trajs
        .iter()
        .map(|t| t.final_phase_time)
        .try_fold(0.0f64, |acc, t| t.map(|v| acc.max(v)));
    Ok(TraceStats {
        times,
        series,
        runs: cfg.runs,
        left_rate: left as f64 / updates as f64,
        final_phase_time,
        trajectories: if keep_trajectories { trajs } else { vec![] },
    })
}

/// Endpoint of an open-loop path with constant input over [0, t].
pub fn open_loop_endpoint(sys: &SystemSpec, x0: &[f64], u: &[f64], t: f64, dt: f64, rng: &mut Stream) -> Vec<f64> {
    let mut em = EulerMaruyama::new(sys.n, sys.p, dt);
    let mut x = x0.to_vec();
    for _ in 0..(t / dt).round() as usize {
        em.step_system(sys, &mut x, u, rng);
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    /// Largest estimate of (E‖ξ_{x,u}(τ) − x′‖^q)^{1/q} over the sampled pairs.
    pub max_estimate: f64,
    /// Standard error of that estimate (delta method).
    pub se_at_max: f64,
    pub worst_state: usize,
    pub worst_input: usize,
    pub pairs: usize,
    /// Some pair exceeded ε + 3 SE.
    pub flagged: bool,
}

/// Monte-Carlo check that the stochastic one-period endpoint stays ε-close (in the q-th moment)
/// to the abstract successor.
pub fn empirical_bisim_probe(
    sys: &SystemSpec,
    a: &Abstraction,
    eps: f64,
    samples: usize,
    runs: usize,
    dt: f64,
    seed: u64,
    substeps: usize,
) -> Result<ProbeReport> {
    if samples == 0 || runs == 0 {
        return Err(Error::InvalidArgument("need at least one sample and one run".into()));
    }
    let q = a.plan.q as f64;
    let mut pick = Stream::new(seed, u64::MAX);
    let mut pairs = Vec::with_capacity(samples);
    let mut guard = 0;
    while pairs.len() < samples && guard < samples * 1000 {
        guard += 1;
        let (s, i) = (pick.below(a.num_states()), pick.below(a.num_inputs()));
        if a.grid.in_domain(s) && a.successor(s, i) != SINK {
            pairs.push((s, i));
        }
    }
    let noisy = sys.has_noise();
    let results: Vec<(f64, f64)> = pairs
        .par_iter()
        .enumerate()
        .map(|(k, &(s, i))| -> Result<(f64, f64)> {
            let x = a.state_coords(s);
            let target = a.state_coords(a.successor(s, i) as usize);
            let u = &a.inputs[i];
            let dist = |e: &[f64]| e.iter().zip(&target).map(|(p, t)| (p - t).abs()).fold(0.0, f64::max);
            if !noisy {
                let e = integrate_nominal(sys, &x, u, a.plan.tau, substeps)?;
                return Ok((dist(&e), 0.0));
            }
            let mut rng = Stream::new(seed, k as u64);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..runs {
                let d = dist(&open_loop_endpoint(sys, &x, u, a.plan.tau, dt, &mut rng)).powf(q);
                s1 += d;
                s2 += d * d;
            }
            let nr = runs as f64;
            let m = s1 / nr;
            let var = if runs > 1 { (s2 / nr - m * m).max(0.0) * nr / (nr - 1.0) } else { 0.0 };
            let root = m.powf(1.0 / q);
            let se = if m > 0.0 { (var / nr).sqrt() * root / (q * m) } else { 0.0 };
            Ok((root, se))
        })
        .collect::<Result<_>>()?;
    let (mut best, mut flagged) = (0usize, false);
    for (k, &(est, se)) in results.iter().enumerate() {
        if est > results[best].0 {
            best = k;
        }
        flagged |= est > eps + 3.0 * se;
    }
    Ok(ProbeReport {
        max_estimate: results[best].0,
        se_at_max: results[best].1,
        worst_state: pairs[best].0,
        worst_input: pairs[best].1,
        pairs: pairs.len(),
        flagged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContractionStat {
    pub mean: f64,
    pub se: f64,
    /// V(a, a′)e^{−κt} + ρ(‖υ − υ′‖∞)/(eκ).
    pub bound: f64,
}

/// E[V(ξ_{a,υ}(t), ξ_{a′,υ′}(t))] for two copies driven by the same Brownian increments.
#[allow(clippy::too_many_arguments)]
pub fn contraction_probe(
    sys: &SystemSpec,
    cert: &Certificate,
    gains: &DerivedGains,
    a: &[f64],
    a2: &[f64],
    u: &[f64],
    u2: &[f64],
    t: f64,
    dt: f64,
    runs: usize,
    seed: u64,
    stream: u64,
) -> ContractionStat {
    let mut rng = Stream::new(seed, stream);
    let steps = (t / dt).round() as usize;
    let sq = dt.sqrt();
    let (mut s1, mut s2) = (0.0, 0.0);
    let (mut f, mut g) = (vec![0.0; sys.n], vec![0.0; sys.n]);
    let mut dw = vec![0.0; sys.p];
    for _ in 0..runs {
        let (mut x, mut y) = (a.to_vec(), a2.to_vec());
        for _ in 0..steps {
            for w in dw.iter_mut() {
                *w = rng.normal() * sq;
            }
            sys.drift(&x, u, &mut f);
            sys.drift(&y, u2, &mut g);
            let (mut nx, mut ny) = (vec![0.0; sys.n], vec![0.0; sys.n]);
            sys.add_diffusion(&x, &dw, &mut nx);
            sys.add_diffusion(&y, &dw, &mut ny);
            for i in 0..sys.n {
                x[i] += f[i] * dt + nx[i];
                y[i] += g[i] * dt + ny[i];
            }
        }
        let v = cert.value(&x, &y);
        s1 += v;
        s2 += v * v;
    }
    let nr = runs as f64;
    let mean = s1 / nr;
    let var = (s2 / nr - mean * mean).max(0.0) * nr / (nr - 1.0).max(1.0);
    let du = u.iter().zip(u2).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let bound = cert.value(a, a2) * (-gains.kappa * t).exp() + gains.rho.eval(du) / (std::f64::consts::E * gains.kappa);
    ContractionStat { mean, se: (var / nr).sqrt(), bound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::StateGrid;
    use crate::linalg::Mat;
    use crate::model::{catalog, Drift, Lipschitz};
    use crate::synthesis::Phase;

    /// Controller that always applies input 0 everywhere in the domain.
    fn hold(sys: &SystemSpec, tau: f64, eta: f64, u: Vec<f64>) -> Controller {
        let grid = StateGrid::new(&sys.domain, eta).unwrap();
        let ns = grid.len();
        Controller {
            tau,
            eta,
            eps: 1.0,
            q: 1,
            grid,
            inputs: vec![u],
            phases: vec![Phase { win: vec![true; ns], trigger: vec![false; ns], choice: vec![0; ns] }],
        }
    }

    #[test]
    fn brownian_variance() {
        let mut em = EulerMaruyama::new(1, 1, 0.01);
        let runs = 10_000;
        let mut vals = Vec::with_capacity(runs);
        for r in 0..runs {
            let mut rng = Stream::new(3, r as u64);
            let mut x = [0.0];
            for _ in 0..100 {
                em.step(&mut x, &mut rng, |_, out| out[0] = 0.0, |_, dw, out| out[0] += dw[0]);
            }
            vals.push(x[0]);
        }
        let m = vals.iter().sum::<f64>() / runs as f64;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (runs - 1) as f64;
        assert!((0.94..=1.06).contains(&v), "{v}");
    }

    #[test]
    fn noise_free_matches_nominal() {
        let (a, b) = catalog::dc_motor_matrices();
        let dc = catalog::dc_motor();
        let sys = SystemSpec::new(Drift::Linear { a, b }, vec![], dc.lipschitz, dc.input_set.clone(), dc.domain.clone()).unwrap();
        let tau = 0.01;
        let dt = tau / 100.0;
        let ctrl = hold(&sys, tau, 0.5, vec![0.3]);
        let cfg = SimConfig { dt, runs: 1, horizon: tau, master_seed: 1, record_stride: 1 };
        let tr = simulate_run(&sys, &ctrl, &[1.0, 0.5], &cfg, 0).unwrap();
        let nominal = integrate_nominal(&sys, &[1.0, 0.5], &[0.3], tau, 256).unwrap();
        let end = tr.states.last().unwrap();
        let err = end.iter().zip(&nominal).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let a_norm = crate::linalg::inf_norm(&catalog::dc_motor_matrices().0);
        assert!(err < 10.0 * dt * a_norm * 1.0, "{err}");
    }

    #[test]
    fn runs_are_reproducible() {
        let sys = catalog::pendulum();
        let ctrl = hold(&sys, 0.3, 0.1, vec![0.5]);
        let cfg = SimConfig { dt: 0.003, runs: 4, horizon: 3.0, master_seed: 42, record_stride: 10 };
        let a = simulate_run(&sys, &ctrl, &[0.2, 0.0], &cfg, 2).unwrap();
        let b = simulate_run(&sys, &ctrl, &[0.2, 0.0], &cfg, 2).unwrap();
        let c = simulate_run(&sys, &ctrl, &[0.2, 0.0], &cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.states, c.states);
        assert_eq!(a.times.len(), 101);
    }

    #[test]
    fn monte_carlo_independent_of_pool_size() {
        let sys = catalog::pendulum();
        let ctrl = hold(&sys, 0.3, 0.1, vec![0.5]);
        let cfg = SimConfig { dt: 0.003, runs: 16, horizon: 1.5, master_seed: 9, record_stride: 50 };
        let sets = vec![("D".to_string(), BoxUnion::single(vec![[0.4, 0.5], [-1.0, 1.0]]).unwrap())];
        let run = |k| {
            rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap()
                .install(|| monte_carlo(&sys, &ctrl, &[0.0, 0.0], &cfg, &sets, 2, false).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn fixed_point_distance_is_zero() {
        let sys = SystemSpec::new(
            Drift::Linear { a: -Mat::identity(1, 1), b: Mat::zeros(1, 1) },
            vec![],
            Lipschitz { lx: 1.0, lu: 0.0, z: 0.0 },
            BoxUnion::single(vec![[-1.0, 1.0]]).unwrap(),
            BoxUnion::single(vec![[-1.0, 1.0]]).unwrap(),
        )
        .unwrap();
        let ctrl = hold(&sys, 0.1, 0.1, vec![0.0]);
        let cfg = SimConfig { dt: 0.001, runs: 3, horizon: 1.0, master_seed: 0, record_stride: 10 };
        let sets = vec![("origin".to_string(), BoxUnion::single(vec![[-0.01, 0.01]]).unwrap())];
        let st = monte_carlo(&sys, &ctrl, &[0.0], &cfg, &sets, 1, false).unwrap();
        assert!(st.series[0].mean.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn alignment_is_enforced() {
        let cfg = SimConfig { dt: 0.07, runs: 1, horizon: 1.0, master_seed: 0, record_stride: 1 };
        assert!(cfg.steps_per_period(0.1).is_err());
        let cfg = SimConfig { dt: 0.003, ..cfg };
        assert_eq!(cfg.steps_per_period(3.0).unwrap(), 1000);
        assert_eq!(default_dt(0.01), 0.0001);
        assert_eq!(default_dt(3.0), 0.003);
    }
}

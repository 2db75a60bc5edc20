//! Pipeline stages. Stages communicate only through files in the output directory.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use super::config::ProjectConfig;
use crate::abstraction::{Abstraction, BuildOptions};
use crate::certificate::{check_nonlinear_condition, lmi_margin, Certificate, DerivedGains, Form};
use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::probounds::{alpha_sup, bound_finite_horizon, bound_infinite_horizon, markov_pointwise, sbf_from_certificate};
use crate::quantizer::{eps_lower_bound_kl, eps_lower_bound_lyapunov, plan, QuantizationPlan};
use crate::stochsim::{csv, monte_carlo};
use crate::synthesis::{solve_spec, Controller};

pub const PLAN_FILE: &str = "plan.json";
pub const ABSTRACTION_FILE: &str = "abstraction.ssym";
pub const CONTROLLER_FILE: &str = "controller.sctl";
pub const STATS_FILE: &str = "sim.csv";
pub const TRAJECTORY_FILE: &str = "trajectories.csv";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    /// Overrides the simulation master seed.
    pub seed: Option<u64>,
    pub timings: bool,
}

pub struct Session<'w> {
    pub cfg: ProjectConfig,
    pub opts: RunOptions,
    out: &'w mut (dyn Write + Send),
}

macro_rules! say {
    ($s:expr, $($arg:tt)*) => { writeln!($s.out, $($arg)*)? };
}

impl<'w> Session<'w> {
    pub fn open(opts: RunOptions, out: &'w mut (dyn Write + Send)) -> Result<Self> {
        let cfg = ProjectConfig::load(&opts.config)?;
        fs::create_dir_all(&opts.out)?;
        Ok(Session { cfg, opts, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.opts.out.join(name)
    }

    fn sys(&self) -> &SystemSpec {
        &self.cfg.system
    }

    fn gains(&self, cert: &Certificate) -> Result<DerivedGains> {
        cert.gains(self.sys())
    }

    pub fn certify(&mut self) -> Result<()> {
        let cert = self.cfg.certificate()?;
        let cc = self.cfg.certificate.clone();
        say!(self, "certificate: {} form, q = {}", form_name(&cert.form), cert.q);
        let accepted = match (cert.kappa_hat, self.sys().drift.linear_parts()) {
            (Some(kh), Some((a, _))) => {
                let (lmax, tol) = lmi_margin(a, &self.sys().sigmas, &cert.p, kh)?;
                say!(self, "matrix inequality with κ̂ = {kh}: λ_max = {lmax:.6e} (tolerance {tol:.3e})");
                lmax <= tol
            }
            _ => {
                let rep = check_nonlinear_condition(self.sys(), &cert, cc.samples, cc.seed)?;
                say!(self, "sampled decay condition: {} samples, worst margin {:.6}", rep.samples, rep.worst_margin);
                if let Some(w) = &rep.witness {
                    say!(self, "witness: x = {:?}, x' = {:?}, z = {:?}, u = {:?}", w.x, w.x_prime, w.z, w.u);
                }
                rep.ok
            }
        };
        let g = self.gains(&cert)?;
        say!(self, "α̲(r) = {}", g.alpha_lo);
        say!(self, "ᾱ(r) = {}", g.alpha_hi);
        say!(self, "κ = {:.6}", g.kappa);
        say!(self, "ρ(r) = {}", g.rho);
        say!(self, "γ̂(r) = {}", g.gamma_hat);
        say!(self, "β(r, s) = {}", g.beta);
        say!(self, "γ(r) = {}", g.gamma);
        if accepted {
            say!(self, "certificate accepted");
            Ok(())
        } else {
            say!(self, "certificate rejected");
            Err(Error::CertificateRejected(format!("{} certificate fails its check", self.cfg.name)))
        }
    }

    pub fn plan(&mut self) -> Result<QuantizationPlan> {
        let cert = self.cfg.certificate()?;
        let g = self.gains(&cert)?;
        let pc = self.cfg.plan.clone();
        let h = self.cfg.h_at(&cert, &g, pc.tau)?;
        say!(self, "h(σ, τ = {}) = {:.6e} ({:?} bound)", pc.tau, h, pc.h.kind);
        match eps_lower_bound_lyapunov(&g, h, pc.tau, cert.q) {
            Ok(v) => say!(self, "ε lower bound (lyapunov route): {v:.6}"),
            Err(e) => say!(self, "ε lower bound (lyapunov route): none ({e})"),
        }
        match eps_lower_bound_kl(&g.beta, h, pc.tau, cert.q) {
            Ok(v) => say!(self, "ε lower bound (kl route): {v:.6}"),
            Err(e) => say!(self, "ε lower bound (kl route): none ({e})"),
        }
        let req = self.cfg.plan_request(cert.q);
        let p = plan(&req, &g, h, self.sys().domain.span()?, self.sys().input_set.span()?)?;
        say!(self, "plan: route {:?}, ε = {}, τ = {}, η = {}, μ = {}", p.route, p.eps, p.tau, p.eta, p.mu);
        fs::write(self.path(PLAN_FILE), serde_json::to_string_pretty(&p)?)?;
        Ok(p)
    }

    fn load_plan(&self) -> Result<QuantizationPlan> {
        let path = self.path(PLAN_FILE);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn build(&mut self) -> Result<Abstraction> {
        let plan = self.load_plan()?;
        let inputs = self.cfg.inputs(&plan)?;
        let t0 = Instant::now();
        let (a, rep) = Abstraction::build(self.sys(), plan, inputs, &BuildOptions::default())?;
        let secs = t0.elapsed().as_secs_f64();
        a.save(&self.path(ABSTRACTION_FILE))?;
        let domain_states = (0..a.num_states()).filter(|&s| a.grid.in_domain(s)).count();
        say!(self, "abstraction: {} states, {} inputs", domain_states, a.num_inputs());
        say!(self, "integrator: {} RK4 substeps, {} calibration pairs agree", rep.substeps, rep.calibration_checked);
        if self.opts.timings {
            say!(self, "build time: {:.3} s ({:.0} states/s)", secs, a.num_states() as f64 / secs.max(1e-9));
        }
        Ok(a)
    }

    pub fn synth(&mut self) -> Result<Controller> {
        let a = Abstraction::load(&self.path(ABSTRACTION_FILE))?;
        let t0 = Instant::now();
        let c = solve_spec(&a, &self.cfg.synthesis.spec, &self.cfg.synthesis.initial)?;
        let secs = t0.elapsed().as_secs_f64();
        c.save(&self.path(CONTROLLER_FILE))?;
        for (k, w) in c.winning_counts().iter().enumerate() {
            say!(self, "phase {k}: {w} winning states");
        }
        if self.opts.timings {
            say!(self, "synthesis time: {secs:.3} s");
        }
        Ok(c)
    }

    pub fn sim(&mut self) -> Result<()> {
        let ctrl = Controller::load(&self.path(CONTROLLER_FILE))?;
        let cfg = self.cfg.sim_config(self.opts.seed)?;
        let block = self.cfg.sim.clone().expect("checked by sim_config");
        let sets: Vec<_> = block.sets.iter().map(|s| (s.name.clone(), s.set.clone())).collect();
        let x0 = self.cfg.synthesis.initial[0].clone();
        let t0 = Instant::now();
        let stats = monte_carlo(self.sys(), &ctrl, &x0, &cfg, &sets, ctrl.q, block.trajectories)?;
        let secs = t0.elapsed().as_secs_f64();
        csv::write_stats(BufWriter::new(fs::File::create(self.path(STATS_FILE))?), &stats)?;
        if block.trajectories {
            csv::write_trajectories(BufWriter::new(fs::File::create(self.path(TRAJECTORY_FILE))?), &stats.trajectories)?;
        }
        say!(self, "simulated {} runs, dt = {}, horizon = {}", stats.runs, cfg.dt, cfg.horizon);
        for s in &stats.series {
            let peak = s.root.iter().cloned().fold(0.0, f64::max);
            say!(
                self,
                "{}: terminal (E‖ξ‖^{})^(1/{}) = {:.6} ± {:.6} (SE of mean), peak {:.6}",
                s.name,
                ctrl.q,
                ctrl.q,
                s.root.last().copied().unwrap_or(0.0),
                s.se.last().copied().unwrap_or(0.0),
                peak
            );
        }
        match stats.final_phase_time {
            Some(t) => say!(self, "final phase reached by every run at t ≤ {t}"),
            None => say!(self, "final phase not reached by every run"),
        }
        say!(self, "left-winning-region rate: {:.6}", stats.left_rate);
        if self.opts.timings {
            say!(self, "simulation time: {secs:.3} s");
        }
        Ok(())
    }

    pub fn bounds(&mut self) -> Result<()> {
        let b = self.cfg.bounds.clone().ok_or_else(|| Error::Config("no `bounds` block".into()))?;
        let cert = self.cfg.certificate()?;
        let g = self.gains(&cert)?;
        let eps = self.cfg.plan.eps;
        for &e in &b.markov {
            let v = markov_pointwise(eps, e)?;
            say!(self, "pointwise: P(deviation ≥ {e}) ≤ {v:.4} (satisfaction ≥ {:.1}%)", 100.0 * (1.0 - v));
        }
        if let Some(fh) = &b.finite_horizon {
            let set = fh.alpha_set.clone().unwrap_or_else(|| self.sys().domain.clone());
            let alpha = match alpha_sup(&cert, self.sys(), &set, 10_000, 1) {
                Ok(a) => a,
                // The moment order only rescales V; α is taken from the quadratic member.
                Err(Error::InvalidCertificate(_)) => {
                    let quad = Certificate::scaled(cert.p.clone(), 2, cert.kappa_tilde)?;
                    say!(self, "α from the q = 2 quadratic form with the same P");
                    alpha_sup(&quad, self.sys(), &set, 10_000, 1)?
                }
                Err(e) => return Err(e),
            };
            let v = bound_finite_horizon(alpha, g.kappa, &g.alpha_lo, cert.q, fh.epsilon, fh.n, self.cfg.plan.tau)?;
            say!(self, "α = {alpha:.6}");
            say!(
                self,
                "finite horizon (N = {}, τ = {}): P(sup deviation > {}) ≤ {:.4} (satisfaction ≥ {:.1}%)",
                fh.n,
                self.cfg.plan.tau,
                fh.epsilon,
                v,
                100.0 * (1.0 - v)
            );
        }
        if let Some(ih) = &b.infinite_horizon {
            let phi = match ih.phi_x0 {
                Some(p) => p,
                None => sbf_from_certificate(&cert, Some(self.sys()))?.at_start(&self.cfg.synthesis.initial[0]),
            };
            let v = bound_infinite_horizon(phi, ih.eps, ih.epsilon)?;
            say!(
                self,
                "infinite horizon: φ(x₀, x₀) = {phi}, P(sup deviation ≥ {}) ≤ {:.4} (satisfaction ≥ {:.1}%)",
                ih.epsilon,
                v,
                100.0 * (1.0 - v)
            );
        }
        Ok(())
    }

    /// All stages in order. A rejected certificate marked `assumed` only warns.
    pub fn pipeline(&mut self) -> Result<()> {
        match self.certify() {
            Err(Error::CertificateRejected(msg)) if self.cfg.certificate.assumed => {
                say!(self, "warning: {msg}; continuing with the assumed gains");
            }
            r => r?,
        }
        self.plan()?;
        self.build()?;
        self.synth()?;
        if self.cfg.sim.is_some() {
            self.sim()?;
        }
        if self.cfg.bounds.is_some() {
            self.bounds()?;
        }
        Ok(())
    }
}

fn form_name(f: &Form) -> &'static str {
    match f {
        Form::ScaledQuadratic => "scaled quadratic",
        Form::PlainQuadratic(_) => "plain quadratic",
    }
}

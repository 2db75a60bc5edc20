//! Project configuration: one JSON document describing the system, certificate,
//! quantization, control task, simulation and bound requests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abstraction::input_list;
use crate::certificate::{h_general, h_linear, h_quadratic, Certificate, DerivedGains, NormConvention, UserGains};
use crate::error::{Error, Result};
use crate::linalg::mat_from_rows;
use crate::model::{BoxUnion, SystemSpec};
use crate::quantizer::{PlanRequest, QuantizationPlan, Route};
use crate::stochsim::SimConfig;
use crate::synthesis::SpecTemplate;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub name: String,
    pub system: SystemSpec,
    /// Spacing of the finite input lattice; when set, μ = 0 in the plan conditions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_spacing: Option<f64>,
    pub certificate: CertificateConfig,
    pub plan: PlanConfig,
    pub synthesis: SynthesisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormKind {
    /// ((1/q)dᵀPd)^{q/2} with derived gains.
    Scaled,
    /// dᵀPd with user gains.
    Plain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub form: FormKind,
    pub p: Vec<Vec<f64>>,
    pub q: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_hat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<UserGains>,
    /// Continue the pipeline even if the sampled check rejects the certificate.
    #[serde(default)]
    pub assumed: bool,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    20_000
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HKind {
    Linear,
    Quadratic,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HConfig {
    pub kind: HKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<NormConvention>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanConfig {
    pub eps: f64,
    pub tau: f64,
    pub route: Route,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub h: HConfig,
    #[serde(default = "default_quad_steps")]
    pub quad_steps: usize,
}

fn default_quad_steps() -> usize {
    256
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisConfig {
    pub spec: SpecTemplate,
    pub initial: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSet {
    pub name: String,
    pub set: BoxUnion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    /// Defaults to τ/100 (τ ≤ 0.1) or τ/1000.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub runs: usize,
    pub horizon: f64,
    pub master_seed: u64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    pub sets: Vec<NamedSet>,
    #[serde(default)]
    pub trajectories: bool,
}

fn default_stride() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteHorizonConfig {
    pub epsilon: f64,
    pub n: u32,
    /// Region over which α is maximised; defaults to the domain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_set: Option<BoxUnion>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfiniteHorizonConfig {
    /// φ(x₀, x₀); computed from the certificate at the first initial state when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_x0: Option<f64>,
    pub eps: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markov: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite_horizon: Option<FiniteHorizonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infinite_horizon: Option<InfiniteHorizonConfig>,
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProjectConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        let n = self.system.n;
        let c = &self.certificate;
        if c.p.len() != n || c.p.iter().any(|r| r.len() != n) {
            return Err(Error::Config(format!("certificate P must be {n}×{n}")));
        }
        match c.form {
            FormKind::Plain if c.gains.is_none() => {
                return Err(Error::Config("plain certificates need `gains`".into()))
            }
            FormKind::Scaled if c.kappa_hat.is_none() == c.kappa_tilde.is_none() => {
                return Err(Error::Config("scaled certificates need exactly one of `kappa_hat`, `kappa_tilde`".into()))
            }
            _ => {}
        }
        if self.synthesis.initial.is_empty() || self.synthesis.initial.iter().any(|x| x.len() != n) {
            return Err(Error::Config(format!("initial states must be non-empty vectors of length {n}")));
        }
        if let Some(s) = self.input_spacing {
            if !(s > 0.0) {
                return Err(Error::Config("input_spacing must be positive".into()));
            }
        }
        if let Some(sim) = &self.sim {
            if sim.sets.iter().any(|s| s.set.dim() != n) {
                return Err(Error::Config(format!("simulation sets must have dimension {n}")));
            }
        }
        self.certificate()?;
        Ok(())
    }

    pub fn certificate(&self) -> Result<Certificate> {
        let c = &self.certificate;
        let p = mat_from_rows(&c.p)?;
        match (c.form, c.gains, c.kappa_hat, c.kappa_tilde) {
            (FormKind::Plain, Some(g), _, _) => Certificate::plain(p, c.q, g),
            (FormKind::Scaled, _, Some(kh), _) => Certificate::from_lmi(p, c.q, kh),
            (FormKind::Scaled, _, None, Some(kt)) => Certificate::scaled(p, c.q, kt),
            _ => Err(Error::Config("incomplete certificate block".into())),
        }
    }

    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig> {
        let s = self.sim.as_ref().ok_or_else(|| Error::Config("no `sim` block".into()))?;
        Ok(SimConfig {
            dt: s.dt.unwrap_or_else(|| crate::stochsim::default_dt(self.plan.tau)),
            runs: s.runs,
            horizon: s.horizon,
            master_seed: seed.unwrap_or(s.master_seed),
            record_stride: s.record_stride,
        })
    }
}

impl ProjectConfig {
    /// h(σ, t) by the configured bound.
    pub fn h_at(&self, cert: &Certificate, g: &DerivedGains, t: f64) -> Result<f64> {
        let pc = &self.plan;
        let sys = &self.system;
        match pc.h.kind {
            HKind::Linear => {
                let (a, b) = sys
                    .drift
                    .linear_parts()
                    .ok_or_else(|| Error::Config("the linear h bound needs a linear drift".into()))?;
                let kh = cert
                    .kappa_hat
                    .ok_or_else(|| Error::Config("the linear h bound needs kappa_hat".into()))?;
                h_linear(a, b, &sys.sigmas, &cert.p, kh, sys, t, pc.quad_steps)
            }
            HKind::Quadratic => h_quadratic(&cert.p, cert.q, cert.kappa_tilde, sys, t),
            HKind::General => h_general(
                g,
                cert.hessian_sup(),
                sys,
                cert.q,
                t,
                pc.quad_steps,
                pc.h.convention.unwrap_or(NormConvention::Euclidean),
            ),
        }
    }

    pub fn plan_request(&self, q: u32) -> PlanRequest {
        PlanRequest {
            eps: self.plan.eps,
            tau: self.plan.tau,
            route: self.plan.route,
            q,
            eta: self.plan.eta,
            mu: self.plan.mu,
            inputs_finite: self.input_spacing.is_some(),
        }
    }

    /// The finite input list: the configured lattice, or [U]_μ from the plan.
    pub fn inputs(&self, plan: &QuantizationPlan) -> Result<Vec<Vec<f64>>> {
        input_list(&self.system, self.input_spacing.unwrap_or(plan.mu))
    }
}

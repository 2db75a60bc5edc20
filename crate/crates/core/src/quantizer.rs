//! Quantization parameters (τ, η, μ) and precision lower bounds.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::certificate::DerivedGains;
use crate::error::{Error, Result};
use crate::model::{GainFn, KLFn};

/// Which sufficient condition justified a plan.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Lyapunov sandwich: ᾱ(η^q) ≤ α̲(ε^q) and
    /// e^{−κτ}α̲(ε^q) + ρ(μ)/(eκ) + γ̂(h^{1/q} + η) ≤ α̲(ε^q).
    Lyapunov,
    /// KL bound: (β(ε^q, τ) + γ(μ))^{1/q} + h^{1/q} + η ≤ ε.
    Kl,
}

impl Route {
    pub fn code(self) -> u32 {
        match self {
            Route::Lyapunov => 1,
            Route::Kl => 2,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            1 => Some(Route::Lyapunov),
            2 => Some(Route::Kl),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationPlan {
    pub tau: f64,
    pub eta: f64,
    pub mu: f64,
    pub eps: f64,
    pub q: u32,
    pub route: Route,
    pub h_at_tau: f64,
}

fn root(v: f64, q: u32) -> f64 {
    v.max(0.0).powf(1.0 / q as f64)
}

/// Largest violation of the two Lyapunov-route inequalities (≤ 0 means satisfied).
pub fn lyapunov_margin(eps: f64, tau: f64, eta: f64, mu: f64, g: &DerivedGains, h_tau: f64, q: u32) -> f64 {
    let qi = q as f64;
    let lo = g.alpha_lo.eval(eps.powf(qi));
    let first = g.alpha_hi.eval(eta.powf(qi)) - lo;
    let second = (-g.kappa * tau).exp() * lo
        + g.rho.eval(mu) / (E * g.kappa)
        + g.gamma_hat.eval(root(h_tau, q) + eta)
        - lo;
    first.max(second)
}

pub fn check_lyapunov(eps: f64, tau: f64, eta: f64, mu: f64, g: &DerivedGains, h_tau: f64, q: u32) -> bool {
    lyapunov_margin(eps, tau, eta, mu, g, h_tau, q) <= 0.0
}

/// LHS − ε of the KL-route inequality.
pub fn kl_margin(eps: f64, tau: f64, eta: f64, mu: f64, beta: &KLFn, gamma: &GainFn, h_tau: f64, q: u32) -> f64 {
    root(beta.eval(eps.powf(q as f64), tau) + gamma.eval(mu), q) + root(h_tau, q) + eta - eps
}

pub fn check_kl(eps: f64, tau: f64, eta: f64, mu: f64, beta: &KLFn, gamma: &GainFn, h_tau: f64, q: u32) -> bool {
    kl_margin(eps, tau, eta, mu, beta, gamma, h_tau, q) <= 0.0
}

/// ε must exceed (α̲⁻¹(γ̂(h^{1/q})/(1 − e^{−κτ})))^{1/q}.
pub fn eps_lower_bound_lyapunov(g: &DerivedGains, h_tau: f64, tau: f64, q: u32) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("τ must be positive".into()));
    }
    let y = g.gamma_hat.eval(root(h_tau, q)) / (1.0 - (-g.kappa * tau).exp());
    Ok(root(g.alpha_lo.inverse(y)?, q))
}

/// Contraction factor c^{1/q}e^{−κτ/q} of ε ↦ β(ε^q, τ)^{1/q} for a β linear in r.
pub fn kl_contraction(beta: &KLFn, tau: f64, q: u32) -> Result<f64> {
    if beta.p != 1.0 {
        return Err(Error::InvalidArgument("closed-form bound needs β linear in r".into()));
    }
    Ok(root(beta.c, q) * (-beta.kappa * tau / q as f64).exp())
}

/// ε_min = h^{1/q}/(1 − c^{1/q}e^{−κτ/q}).
pub fn eps_lower_bound_kl(beta: &KLFn, h_tau: f64, tau: f64, q: u32) -> Result<f64> {
    let factor = kl_contraction(beta, tau, q)?;
    if factor >= 1.0 {
        return Err(Error::NoAdmissibleEps { factor });
    }
    Ok(root(h_tau, q) / (1.0 - factor))
}

/// Descending 1-2-2.5-5 ladder from just below `top` down to 1e−9.
pub fn ladder(top: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut decade = 10f64.powi(top.log10().ceil() as i32);
    while decade > 1e-9 {
        for m in [1.0, 0.5, 0.25, 0.2] {
            let v = decade * m;
            if v <= top * (1.0 + 1e-12) {
                out.push(v);
            }
        }
        decade /= 10.0;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub eps: f64,
    pub tau: f64,
    pub route: Route,
    pub q: u32,
    pub eta: Option<f64>,
    pub mu: Option<f64>,
    /// Inputs are already a finite list; μ = 0.
    pub inputs_finite: bool,
}

/// Validates or searches (η, μ) for the requested route.
///
/// Without explicit values μ is the largest ladder value v with the route holding
/// at η = μ = v, then η is the largest ladder value holding at that μ.
pub fn plan(
    req: &PlanRequest,
    g: &DerivedGains,
    h_tau: f64,
    domain_span: f64,
    input_span: f64,
) -> Result<QuantizationPlan> {
    let (eps, tau, q) = (req.eps, req.tau, req.q);
    let lower = match req.route {
        Route::Lyapunov => eps_lower_bound_lyapunov(g, h_tau, tau, q)?,
        Route::Kl => eps_lower_bound_kl(&g.beta, h_tau, tau, q)?,
    };
    if eps <= lower {
        return Err(Error::InfeasiblePrecision { eps, lower_bound: lower });
    }
    let check = |eta: f64, mu: f64| match req.route {
        Route::Lyapunov => check_lyapunov(eps, tau, eta, mu, g, h_tau, q),
        Route::Kl => check_kl(eps, tau, eta, mu, &g.beta, &g.gamma, h_tau, q),
    };
    let fail = |detail: String| Error::NoFeasibleQuantization { route: format!("{:?}", req.route), detail };
    let top = domain_span.min(if req.inputs_finite { f64::INFINITY } else { input_span });
    let mu = if req.inputs_finite {
        0.0
    } else if let Some(mu) = req.mu {
        if mu > input_span {
            return Err(Error::SpacingExceedsSpan { spacing: mu, span: input_span });
        }
        mu
    } else {
        ladder(top)
            .into_iter()
            .find(|&v| check(v, v))
            .ok_or_else(|| fail("no input spacing on the ladder".into()))?
    };
    let eta = match req.eta {
        Some(eta) => {
            if eta > domain_span {
                return Err(Error::SpacingExceedsSpan { spacing: eta, span: domain_span });
            }
            if !check(eta, mu) {
                return Err(fail(format!("η = {eta}, μ = {mu} violates the condition")));
            }
            eta
        }
        None => ladder(domain_span)
            .into_iter()
            .find(|&v| check(v, mu))
            .ok_or_else(|| fail("no state spacing on the ladder".into()))?,
    };
    Ok(QuantizationPlan { tau, eta, mu, eps, q, route: req.route, h_at_tau: h_tau })
}

impl QuantizationPlan {
    /// Re-evaluates the route condition on the stored fields.
    pub fn revalidate(&self, g: &DerivedGains) -> bool {
        match self.route {
            Route::Lyapunov => check_lyapunov(self.eps, self.tau, self.eta, self.mu, g, self.h_at_tau, self.q),
            Route::Kl => check_kl(self.eps, self.tau, self.eta, self.mu, &g.beta, &g.gamma, self.h_at_tau, self.q),
        }
    }
}

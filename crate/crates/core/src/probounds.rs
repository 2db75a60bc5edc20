//! Probabilistic guarantee calculators built on a certificate: supermartingale,
//! finite-horizon and pointwise Markov bounds.

use rayon::prelude::*;

use crate::certificate::{Certificate, Form};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::system::sample_in;
use crate::model::{BoxUnion, GainFn, SystemSpec};
use crate::rng::Stream;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// min(1, (√φ(x₀, x₀) + ε)/ϵ): chance that the deviation ever exceeds ϵ.
pub fn bound_infinite_horizon(phi_x0: f64, eps: f64, epsilon: f64) -> Result<f64> {
    require_positive("ϵ", epsilon)?;
    if phi_x0 < 0.0 || eps < 0.0 {
        return Err(Error::InvalidArgument("φ and ε must be nonnegative".into()));
    }
    Ok(((phi_x0.sqrt() + eps) / epsilon).min(1.0))
}

/// min(1, ε/ϵ): per-instant violation probability from the q-th moment bound.
pub fn markov_pointwise(eps: f64, epsilon: f64) -> Result<f64> {
    require_positive("ϵ", epsilon)?;
    if eps < 0.0 {
        return Err(Error::InvalidArgument("ε must be nonnegative".into()));
    }
    Ok((eps / epsilon).min(1.0))
}

/// Violation bound over N sampling periods.
///
/// α̲(ϵ^q) ≥ α/(2κ): 1 − exp(−αNτ/(2α̲(ϵ^q))).
/// Otherwise:       (e^{Nτκ} − 1)α / (2κα̲(ϵ^q)e^{Nτκ}).
pub fn bound_finite_horizon(alpha: f64, kappa: f64, alpha_lo: &GainFn, q: u32, epsilon: f64, n: u32, tau: f64) -> Result<f64> {
    require_positive("κ", kappa)?;
    require_positive("ϵ", epsilon)?;
    require_positive("τ", tau)?;
    if alpha < 0.0 || n < 1 || q < 1 {
        return Err(Error::InvalidArgument("need α ≥ 0, N ≥ 1 and q ≥ 1".into()));
    }
    let a_lo = alpha_lo.eval(epsilon.powi(q as i32));
    require_positive("α̲(ϵ^q)", a_lo)?;
    let horizon = n as f64 * tau;
    let b = if a_lo >= alpha / (2.0 * kappa) {
        1.0 - (-alpha * horizon / (2.0 * a_lo)).exp()
    } else {
        -(-horizon * kappa).exp_m1() * alpha / (2.0 * kappa * a_lo)
    };
    Ok(b.clamp(0.0, 1.0))
}

/// Σᵢ σᵢᵀKσᵢ for the Hessian kernel K of a quadratic certificate.
fn trace_form(cert: &Certificate, sigmas: &[Mat]) -> Result<Mat> {
    let kernel = match cert.form {
        Form::PlainQuadratic(_) => cert.p.clone(),
        Form::ScaledQuadratic if cert.q == 2 => cert.p.clone(),
        Form::ScaledQuadratic => {
            return Err(Error::InvalidCertificate(format!(
                "second derivative is not constant for the scaled form with q = {}",
                cert.q
            )))
        }
    };
    let n = kernel.nrows();
    Ok(sigmas.iter().fold(Mat::zeros(n, n), |acc, s| acc + s.transpose() * &kernel * s))
}

/// sup over `domain` of Tr(σ(x)ᵀKσ(x)) = xᵀ(ΣσᵢᵀKσᵢ)x with K = P, taken over box
/// vertices (the form is convex) and cross-checked on `samples` interior points.
pub fn alpha_sup(cert: &Certificate, sys: &SystemSpec, domain: &BoxUnion, samples: usize, seed: u64) -> Result<f64> {
    let m = trace_form(cert, &sys.sigmas)?;
    let form = |x: &[f64]| {
        let v = nalgebra::DVector::from_column_slice(x);
        (v.transpose() * &m * &v)[(0, 0)]
    };
    let vmax = domain.vertices().iter().map(|x| form(x)).fold(0.0, f64::max);
    let mut rng = Stream::new(seed, 0);
    let smax = (0..samples).map(|_| form(&sample_in(domain, &mut rng))).fold(0.0, f64::max);
    if smax > vmax * (1.0 + 1e-12) + 1e-15 {
        return Err(Error::InvalidCertificate(format!(
            "interior sample {smax} exceeds the vertex maximum {vmax}"
        )));
    }
    Ok(vmax)
}

/// φ(x, x̄) = V(x, 0) + V(0, x̄).
#[derive(Clone, Debug, PartialEq)]
pub struct SBF {
    cert: Certificate,
}

pub fn sbf_from_certificate(cert: &Certificate, sys: Option<&SystemSpec>) -> Result<SBF> {
    if let Some(sys) = sys {
        let zero = vec![0.0; sys.n];
        let mut f = vec![0.0; sys.n];
        sys.drift(&zero, &vec![0.0; sys.m], &mut f);
        let sigma0 = sys.diffusion(&zero);
        if f.iter().any(|v| v.abs() > 1e-12) || sigma0.iter().any(|v| v.abs() > 1e-12) {
            return Err(Error::InvalidSystem("need f(0, 0) = 0 and σ(0) = 0".into()));
        }
    }
    Ok(SBF { cert: cert.clone() })
}

impl SBF {
    pub fn eval(&self, x: &[f64], xbar: &[f64]) -> f64 {
        let zero = vec![0.0; x.len()];
        self.cert.value(x, &zero) + self.cert.value(&zero, xbar)
    }

    /// φ(x₀, x₀).
    pub fn at_start(&self, x0: &[f64]) -> f64 {
        self.eval(x0, x0)
    }
}

/// Monte-Carlo estimate of P{max_{k≤N} ‖ξ(kτ) − X(kτ)‖∞ > threshold} where ξ is the
/// noisy open-loop path and X the noise-free one, both with input u and shared start.
/// Returns (estimate, standard error).
#[allow(clippy::too_many_arguments)]
pub fn empirical_sup_deviation(
    sys: &SystemSpec,
    x0: &[f64],
    u: &[f64],
    tau: f64,
    n: u32,
    threshold: f64,
    dt: f64,
    runs: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    require_positive("runs", runs as f64)?;
    let per = (tau / dt).round() as usize;
    let hits: Vec<bool> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = Stream::new(seed, r);
            let mut em = crate::stochsim::EulerMaruyama::new(sys.n, sys.p, dt);
            let mut x = x0.to_vec();
            let mut nominal = x0.to_vec();
            let mut f = vec![0.0; sys.n];
            for _ in 0..n {
                for _ in 0..per {
                    em.step_system(sys, &mut x, u, &mut rng);
                    sys.drift(&nominal, u, &mut f);
                    nominal.iter_mut().zip(&f).for_each(|(v, d)| *v += d * dt);
                }
                let d = x.iter().zip(&nominal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if d > threshold {
                    return true;
                }
            }
            false
        })
        .collect();
    let p = hits.iter().filter(|h| **h).count() as f64 / runs as f64;
    Ok((p, (p * (1.0 - p) / runs as f64).sqrt()))
}

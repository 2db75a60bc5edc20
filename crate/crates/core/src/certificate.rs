//! Quadratic incremental-stability certificates: verification, derived gains,
//! and bounds h(σ, t) on the moment gap between noisy and nominal trajectories.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    expm, inf_norm, lambda_max, lambda_min, require_symmetric, spectral_norm, sqrtm_psd, sym_part, Mat,
};
use crate::model::system::sample_in;
use crate::model::{BoxUnion, GainFn, KLFn, SystemSpec};
use crate::rng::Stream;

/// Relative slack for eigenvalue sign tests, scaled by the magnitude of the summed terms.
pub const REL_TOL: f64 = 1e-6;

/// Gains supplied with a plain-quadratic V(x, x′) = (x − x′)ᵀP(x − x′).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserGains {
    pub alpha_lo: GainFn,
    pub alpha_hi: GainFn,
    pub kappa: f64,
    pub rho: GainFn,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Form {
    /// V = ((1/q)(x − x′)ᵀP(x − x′))^{q/2}, gains derived from P.
    ScaledQuadratic,
    /// V = (x − x′)ᵀP(x − x′) with user gains.
    PlainQuadratic(UserGains),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub p: Mat,
    pub q: u32,
    /// Decay constant in the sampled condition; κ = κ̃/q.
    pub kappa_tilde: f64,
    /// Set when the certificate comes from the linear matrix inequality.
    pub kappa_hat: Option<f64>,
    pub form: Form,
}

impl Certificate {
    fn validate(p: &Mat, q: u32) -> Result<()> {
        require_symmetric(p)?;
        if lambda_min(p) <= 0.0 {
            return Err(Error::InvalidCertificate("P must be positive definite".into()));
        }
        if q < 1 {
            return Err(Error::InvalidCertificate("moment order q must be at least 1".into()));
        }
        Ok(())
    }

    pub fn scaled(p: Mat, q: u32, kappa_tilde: f64) -> Result<Self> {
        Self::validate(&p, q)?;
        if !(kappa_tilde > 0.0) {
            return Err(Error::InvalidCertificate("κ̃ must be positive".into()));
        }
        Ok(Certificate { p, q, kappa_tilde, kappa_hat: None, form: Form::ScaledQuadratic })
    }

    /// Linear-system certificate with LMI constant κ̂; uses κ̃ = qκ̂/2.
    pub fn from_lmi(p: Mat, q: u32, kappa_hat: f64) -> Result<Self> {
        let mut c = Self::scaled(p, q, q as f64 * kappa_hat / 2.0)?;
        c.kappa_hat = Some(kappa_hat);
        Ok(c)
    }

    pub fn plain(p: Mat, q: u32, gains: UserGains) -> Result<Self> {
        Self::validate(&p, q)?;
        if !(gains.kappa > 0.0) || gains.alpha_lo.c <= 0.0 {
            return Err(Error::InvalidCertificate("need κ > 0 and a nonzero α̲".into()));
        }
        Ok(Certificate {
            p,
            q,
            kappa_tilde: q as f64 * gains.kappa,
            kappa_hat: None,
            form: Form::PlainQuadratic(gains),
        })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    fn quad(&self, d: &[f64]) -> f64 {
        let n = self.n();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += d[i] * self.p[(i, j)] * d[j];
            }
        }
        s
    }

    /// V(x, y).
    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let w = self.quad(&d).max(0.0);
        match self.form {
            Form::ScaledQuadratic => (w / self.q as f64).powf(self.q as f64 / 2.0),
            Form::PlainQuadratic(_) => w,
        }
    }

    /// sup ‖√(∂ₓₓV)‖² for the quadratic kernel, taken as λ_max(P).
    pub fn hessian_sup(&self) -> f64 {
        lambda_max(&self.p)
    }

    /// α̲, ᾱ, κ, ρ, γ̂, β, γ.
    pub fn gains(&self, sys: &SystemSpec) -> Result<DerivedGains> {
        let (alpha_lo, alpha_hi, kappa, rho) = match self.form {
            Form::ScaledQuadratic => {
                let g = derive_quadratic_gains(&self.p, sys.n, self.q, self.kappa_tilde, sys.lipschitz.lu)?;
                (g.alpha_lo, g.alpha_hi, g.kappa, g.rho)
            }
            Form::PlainQuadratic(u) => (u.alpha_lo, u.alpha_hi, u.kappa, u.rho),
        };
        let (beta, gamma) = derive_beta_gamma(alpha_lo, alpha_hi, kappa, rho)?;
        let gamma_hat = gamma_hat(&self.p, self.q, &self.form, &sys.domain)?;
        Ok(DerivedGains { alpha_lo, alpha_hi, kappa, rho, gamma_hat, beta, gamma })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedGains {
    pub alpha_lo: GainFn,
    pub alpha_hi: GainFn,
    pub kappa: f64,
    pub rho: GainFn,
    pub gamma_hat: GainFn,
    pub beta: KLFn,
    pub gamma: GainFn,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticGains {
    pub alpha_lo: GainFn,
    pub alpha_hi: GainFn,
    pub kappa: f64,
    pub rho: GainFn,
}

/// λ_max of sym(PA + AᵀP + ΣσᵢᵀPσᵢ + κ̂P) and the tolerance it is compared against.
pub fn lmi_margin(a: &Mat, sigmas: &[Mat], p: &Mat, kappa_hat: f64) -> Result<(f64, f64)> {
    require_symmetric(p)?;
    let n = p.nrows();
    if a.shape() != (n, n) || sigmas.iter().any(|s| s.shape() != (n, n)) {
        return Err(Error::Dimension("LMI matrices must all be n×n".into()));
    }
    let lyap = p * a + a.transpose() * p;
    let noise = sigmas.iter().fold(Mat::zeros(n, n), |acc, s| acc + s.transpose() * p * s);
    let tol = REL_TOL * (spectral_norm(&lyap) + spectral_norm(&noise) + spectral_norm(p));
    Ok((lambda_max(&sym_part(&(lyap + noise + p * kappa_hat))), tol))
}

/// PA + AᵀP + ΣσᵢᵀPσᵢ ⪯ −κ̂P, tested through the largest eigenvalue of the symmetric part.
pub fn check_lmi(a: &Mat, sigmas: &[Mat], p: &Mat, kappa_hat: f64) -> Result<bool> {
    let (lmax, tol) = lmi_margin(a, sigmas, p, kappa_hat)?;
    Ok(lmax <= tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonlinearReport {
    pub ok: bool,
    /// max over samples of LHS − RHS.
    pub worst_margin: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
}

/// Sampled falsification of the decay condition with the drift linearised at a mean-value point z.
///
/// Scaled form: dᵀP∂ₓf(z,u)d + ½Σ‖√Pσᵢd‖² ≤ −κ̃(1/q)dᵀPd.
/// Plain form:  2dᵀP∂ₓf(z,u)d + Σ‖√Pσᵢd‖² ≤ −κ dᵀPd.
pub fn check_nonlinear_condition(
    sys: &SystemSpec,
    cert: &Certificate,
    samples: usize,
    seed: u64,
) -> Result<NonlinearReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let p = &cert.p;
    let noise = sys.sigmas.iter().fold(Mat::zeros(sys.n, sys.n), |acc, s| acc + s.transpose() * p * s);
    let (drift_w, noise_w, rhs_w) = match cert.form {
        Form::ScaledQuadratic => (1.0, 0.5, cert.kappa_tilde / cert.q as f64),
        Form::PlainQuadratic(g) => (2.0, 1.0, g.kappa),
    };
    let mut rng = Stream::new(seed, 0);
    let mut report = NonlinearReport { ok: true, worst_margin: f64::NEG_INFINITY, witness: None, samples };
    for _ in 0..samples {
        let x = sample_in(&sys.domain, &mut rng);
        let y = sample_in(&sys.domain, &mut rng);
        let z = sample_in(&sys.domain, &mut rng);
        let u = sample_in(&sys.input_set, &mut rng);
        let d = Mat::from_iterator(sys.n, 1, x.iter().zip(&y).map(|(a, b)| a - b));
        let j = sys.drift.jacobian_x(&z, &u);
        let dpd = (d.transpose() * p * &d)[(0, 0)];
        let lhs = drift_w * (d.transpose() * p * &j * &d)[(0, 0)] + noise_w * (d.transpose() * &noise * &d)[(0, 0)];
        let rhs = -rhs_w * dpd;
        let scale = drift_w * 2.0 * spectral_norm(p) * spectral_norm(&j)
            + noise_w * spectral_norm(&noise)
            + rhs_w * spectral_norm(p);
        let tol = REL_TOL * scale * d.norm_squared();
        let margin = lhs - rhs;
        if margin > report.worst_margin {
            report.worst_margin = margin;
        }
        if margin > tol && report.ok {
            report.ok = false;
            report.witness = Some(Witness { x, x_prime: y, z, u });
        }
    }
    Ok(report)
}

/// Gains of the scaled quadratic V: α̲(y) = ((1/q)λ_min)^{q/2}y, ᾱ(y) = ((n/q)λ_max)^{q/2}y,
/// κ = κ̃/q and ρ(r) = (n^{q/2}L_u^q/κ̃^{q−1})‖√P‖^q r^q.
pub fn derive_quadratic_gains(p: &Mat, n: usize, q: u32, kappa_tilde: f64, l_u: f64) -> Result<QuadraticGains> {
    if !(q == 1 || q == 2) {
        return Err(Error::InvalidCertificate(format!("quadratic gains need q ∈ {{1, 2}}, got {q}")));
    }
    require_symmetric(p)?;
    let qf = q as f64;
    let half = qf / 2.0;
    let sqrt_p = inf_norm(&sqrtm_psd(p));
    let rho_c = (n as f64).powf(half) * l_u.powf(qf) / kappa_tilde.powf(qf - 1.0) * sqrt_p.powf(qf);
    Ok(QuadraticGains {
        alpha_lo: GainFn::linear((lambda_min(p) / qf).powf(half)),
        alpha_hi: GainFn::linear((n as f64 * lambda_max(p) / qf).powf(half)),
        kappa: kappa_tilde / qf,
        rho: GainFn::new(rho_c, qf)?,
    })
}

/// α̲(r) = λ_min(P)r and ᾱ(r) = n·λ_max(P)r for the plain quadratic V.
pub fn plain_quadratic_bounds(p: &Mat) -> (GainFn, GainFn) {
    (GainFn::linear(lambda_min(p)), GainFn::linear(p.nrows() as f64 * lambda_max(p)))
}

/// β and γ of the KL/K bound. A linear α̲ is inverted additively; otherwise the
/// factor-2 split is used.
pub fn derive_beta_gamma(alpha_lo: GainFn, alpha_hi: GainFn, kappa: f64, rho: GainFn) -> Result<(KLFn, GainFn)> {
    if alpha_lo.is_linear() {
        let a = alpha_lo.c;
        Ok((
            KLFn::new(alpha_hi.c / a, alpha_hi.p, kappa)?,
            GainFn::new(rho.c / (E * kappa * a), rho.p)?,
        ))
    } else {
        derive_beta_gamma_split(alpha_lo, alpha_hi, kappa, rho)
    }
}

/// β(r,s) = α̲⁻¹(2ᾱ(r)e^{−κs}), γ(r) = α̲⁻¹((2/(eκ))ρ(r)).
pub fn derive_beta_gamma_split(alpha_lo: GainFn, alpha_hi: GainFn, kappa: f64, rho: GainFn) -> Result<(KLFn, GainFn)> {
    let inv = 1.0 / alpha_lo.p;
    Ok((
        KLFn::new((2.0 * alpha_hi.c / alpha_lo.c).powf(inv), alpha_hi.p * inv, kappa * inv)?,
        GainFn::new((2.0 / (E * kappa) * rho.c / alpha_lo.c).powf(inv), rho.p * inv)?,
    ))
}

/// Slope of γ̂ with |V(x, y) − V(x, y′)| ≤ γ̂(‖y − y′‖).
///
/// q = 1, scaled V: λ_max(P)/√λ_min(P).
/// q = 2: mean-value bound c·‖P‖∞·diam∞(D) with c the gradient factor of V
/// (2/q for the scaled form, 2 for the plain form).
pub fn gamma_hat(p: &Mat, q: u32, form: &Form, domain: &BoxUnion) -> Result<GainFn> {
    match (q, form) {
        (1, Form::ScaledQuadratic) => Ok(GainFn::linear(lambda_max(p) / lambda_min(p).sqrt())),
        (1 | 2, _) => {
            let c = match form {
                Form::ScaledQuadratic => 2.0 / q as f64,
                Form::PlainQuadratic(_) => 2.0,
            };
            Ok(GainFn::linear(c * inf_norm(p) * domain.diameter()))
        }
        _ => Err(Error::GammaHatUnavailable(q)),
    }
}

fn check_time(t: f64) -> Result<()> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    Ok(())
}

/// Closed-form bound for the scaled quadratic V (second moment of the gap).
pub fn h_quadratic(p: &Mat, q: u32, kappa_tilde: f64, sys: &SystemSpec, t: f64) -> Result<f64> {
    check_time(t)?;
    let z = sys.lipschitz.z;
    if t == 0.0 || z == 0.0 {
        return Ok(0.0);
    }
    let n = sys.n as f64;
    let sp2 = inf_norm(&sqrtm_psd(p)).powi(2);
    let lmin = lambda_min(p);
    let pre = 2.0 * sp2 * n * n * sys.n.min(sys.p) as f64 * z * z * (-2.0 * kappa_tilde * t / q as f64).exp()
        / (lmin * lmin * kappa_tilde);
    let state = lambda_max(p) * (1.0 - (-kappa_tilde * t / 2.0).exp()) * sys.domain.sup_norm().powi(2);
    let input = sp2 * sys.lipschitz.lu.powi(2) / (E * kappa_tilde) * sys.input_set.sup_norm().powi(2) * t;
    Ok(pre * (state + input))
}

/// Composite Simpson on [0, t] with an even number of panels.
pub fn simpson(f: impl Fn(f64) -> f64, t: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = t / n as f64;
    let mut s = f(0.0) + f(t);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k as f64 * h);
    }
    s * h / 3.0
}

/// Bound for linear drift and diffusion, with induced infinity norms:
/// (nλ_max(ΣσᵢᵀPσᵢ)e^{−κ̂t}/λ_min(P)) ∫₀ᵗ (‖e^{As}‖ sup‖x‖ + (∫₀ˢ‖e^{Ar}B‖dr) sup‖u‖)² ds.
pub fn h_linear(
    a: &Mat,
    b: &Mat,
    sigmas: &[Mat],
    p: &Mat,
    kappa_hat: f64,
    sys: &SystemSpec,
    t: f64,
    quad_steps: usize,
) -> Result<f64> {
    check_time(t)?;
    if quad_steps < 16 {
        return Err(Error::InvalidArgument("quad_steps must be at least 16".into()));
    }
    let n = p.nrows();
    let noise = sigmas.iter().fold(Mat::zeros(n, n), |acc, s| acc + s.transpose() * p * s);
    let lnoise = lambda_max(&noise).max(0.0);
    if t == 0.0 || lnoise == 0.0 {
        return Ok(0.0);
    }
    let panels = quad_steps + quad_steps % 2;
    let hs = t / panels as f64;
    // ‖e^{Ar}B‖ on the half-step lattice feeds a cumulative Simpson rule for the inner integral.
    let g: Vec<f64> = (0..=2 * panels).map(|k| inf_norm(&(expm(&(a * (k as f64 * hs / 2.0))) * b))).collect();
    let mut inner = vec![0.0; panels + 1];
    for j in 0..panels {
        inner[j + 1] = inner[j] + hs / 6.0 * (g[2 * j] + 4.0 * g[2 * j + 1] + g[2 * j + 2]);
    }
    let (sx, su) = (sys.domain.sup_norm(), sys.input_set.sup_norm());
    let outer: Vec<f64> = (0..=panels)
        .map(|j| (inf_norm(&expm(&(a * (j as f64 * hs)))) * sx + inner[j] * su).powi(2))
        .collect();
    let mut integral = outer[0] + outer[panels];
    for (j, v) in outer.iter().enumerate().take(panels).skip(1) {
        integral += if j % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    integral *= hs / 3.0;
    Ok(n as f64 * lnoise * (-kappa_hat * t).exp() / lambda_min(p) * integral)
}

/// How the dimension factor of the general bound is counted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormConvention {
    /// ‖·‖∞ throughout: factor n·min{n, p}.
    Infinity,
    /// Frobenius/Euclidean trace bound: factor min{n, p}.
    Euclidean,
}

/// α̲⁻¹(½·hess_sup·factor·Z²e^{−κt} ∫₀ᵗ (β(sup‖x‖^q, s) + γ(sup‖u‖))^{2/q} ds), q ≥ 2.
pub fn h_general(
    g: &DerivedGains,
    hess_sup: f64,
    sys: &SystemSpec,
    q: u32,
    t: f64,
    quad_steps: usize,
    convention: NormConvention,
) -> Result<f64> {
    if q < 2 {
        return Err(Error::MomentOrderTooSmall(q));
    }
    check_time(t)?;
    let z = sys.lipschitz.z;
    if t == 0.0 || z == 0.0 {
        return Ok(0.0);
    }
    let factor = match convention {
        NormConvention::Infinity => (sys.n * sys.n.min(sys.p)) as f64,
        NormConvention::Euclidean => sys.n.min(sys.p) as f64,
    };
    let rx = sys.domain.sup_norm().powi(q as i32);
    let gu = g.gamma.eval(sys.input_set.sup_norm());
    let expo = 2.0 / q as f64;
    let integral = simpson(|s| (g.beta.eval(rx, s) + gu).powf(expo), t, quad_steps);
    g.alpha_lo.inverse(0.5 * hess_sup * factor * z * z * (-g.kappa * t).exp() * integral)
}

/// Doubles the panel count from `start` until the relative change drops below `rel_tol`.
pub fn refine_quadrature(f: impl Fn(usize) -> Result<f64>, start: usize, rel_tol: f64) -> Result<f64> {
    let mut n = start;
    let mut prev = f(n)?;
    for _ in 0..12 {
        n *= 2;
        let cur = f(n)?;
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

use serde::{Deserialize, Serialize};

use super::boxes::BoxUnion;
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, mat_from_rows, mat_to_rows, vec_inf_norm, Mat};
use crate::rng::Stream;

/// Built-in vector fields.
#[derive(Clone, Debug, PartialEq)]
pub enum Drift {
    /// f(x, u) = A x + B u.
    Linear { a: Mat, b: Mat },
    /// ẋ₁ = x₂, ẋ₂ = −(g/l) sin x₁ − (k/m) x₂ + u/(m l²).
    Pendulum { g: f64, l: f64, mass: f64, k: f64 },
}

impl Drift {
    pub fn eval(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        match self {
            Drift::Linear { a, b } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for (j, xj) in x.iter().enumerate() {
                        s += a[(i, j)] * xj;
                    }
                    for (j, uj) in u.iter().enumerate() {
                        s += b[(i, j)] * uj;
                    }
                    *o = s;
                }
            }
            Drift::Pendulum { g, l, mass, k } => {
                out[0] = x[1];
                out[1] = -(g / l) * x[0].sin() - (k / mass) * x[1] + u[0] / (mass * l * l);
            }
        }
    }

    /// ∂f/∂x at (z, u).
    pub fn jacobian_x(&self, z: &[f64], _u: &[f64]) -> Mat {
        match self {
            Drift::Linear { a, .. } => a.clone(),
            Drift::Pendulum { g, l, mass, k } => {
                Mat::from_row_slice(2, 2, &[0.0, 1.0, -(g / l) * z[0].cos(), -(k / mass)])
            }
        }
    }

    pub fn linear_parts(&self) -> Option<(&Mat, &Mat)> {
        match self {
            Drift::Linear { a, b } => Some((a, b)),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lipschitz {
    pub lx: f64,
    pub lu: f64,
    pub z: f64,
}

/// Stochastic control system dξ = f(ξ, υ)dt + σ(ξ)dW with linear diffusion σ(x) = [σ₁x … σ_px].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SystemRaw", into = "SystemRaw")]
pub struct SystemSpec {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub drift: Drift,
    pub sigmas: Vec<Mat>,
    pub lipschitz: Lipschitz,
    pub input_set: BoxUnion,
    pub domain: BoxUnion,
}

impl SystemSpec {
    pub fn new(
        drift: Drift,
        sigmas: Vec<Mat>,
        lipschitz: Lipschitz,
        input_set: BoxUnion,
        domain: BoxUnion,
    ) -> Result<Self> {
        let n = domain.dim();
        let m = input_set.dim();
        let bad = |msg: String| Err(Error::InvalidSystem(msg));
        match &drift {
            Drift::Linear { a, b } => {
                if a.shape() != (n, n) || b.shape() != (n, m) {
                    return bad(format!(
                        "A is {:?} and B is {:?}, expected ({n}, {n}) and ({n}, {m})",
                        a.shape(),
                        b.shape()
                    ));
                }
            }
            Drift::Pendulum { g, l, mass, k } => {
                if n != 2 || m != 1 {
                    return bad("pendulum needs a 2-D domain and a 1-D input set".into());
                }
                if ![*g, *l, *mass, *k].iter().all(|v| v.is_finite()) || *l <= 0.0 || *mass <= 0.0 {
                    return bad("pendulum needs finite parameters with l, mass > 0".into());
                }
            }
        }
        if sigmas.iter().any(|s| s.shape() != (n, n)) {
            return bad(format!("every diffusion matrix must be {n}×{n}"));
        }
        let Lipschitz { lx, lu, z } = lipschitz;
        if ![lx, lu, z].iter().all(|v| *v >= 0.0 && v.is_finite()) {
            return bad("Lipschitz constants must be finite and nonnegative".into());
        }
        let sys = SystemSpec { n, m, p: sigmas.len(), drift, sigmas, lipschitz, input_set, domain };
        let mut f0 = vec![0.0; n];
        sys.drift.eval(&vec![0.0; n], &vec![0.0; m], &mut f0);
        if vec_inf_norm(&f0) != 0.0 {
            return bad("drift must vanish at the origin".into());
        }
        Ok(sys)
    }

    pub fn drift(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        self.drift.eval(x, u, out)
    }

    pub fn has_noise(&self) -> bool {
        self.sigmas.iter().any(|s| s.iter().any(|v| *v != 0.0))
    }

    /// σ(x) as an n×p matrix.
    pub fn diffusion(&self, x: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.n, self.p);
        for (k, s) in self.sigmas.iter().enumerate() {
            for i in 0..self.n {
                out[(i, k)] = (0..self.n).map(|j| s[(i, j)] * x[j]).sum();
            }
        }
        out
    }

    /// out += σ(x)·dw.
    pub fn add_diffusion(&self, x: &[f64], dw: &[f64], out: &mut [f64]) {
        for (s, w) in self.sigmas.iter().zip(dw) {
            for (i, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, xj) in x.iter().enumerate() {
                    acc += s[(i, j)] * xj;
                }
                *o += acc * w;
            }
        }
    }

    /// Finite-difference estimates of (L_x, L_u, Z) from random pairs in domain × input set.
    pub fn lipschitz_probe(&self, samples: usize, seed: u64) -> Lipschitz {
        let mut rng = Stream::new(seed, 0);
        let mut est = Lipschitz { lx: 0.0, lu: 0.0, z: 0.0 };
        let (mut f1, mut f2) = (vec![0.0; self.n], vec![0.0; self.n]);
        for _ in 0..samples {
            let x = sample_in(&self.domain, &mut rng);
            let y = sample_in(&self.domain, &mut rng);
            let u = sample_in(&self.input_set, &mut rng);
            let v = sample_in(&self.input_set, &mut rng);
            let dx = vec_inf_norm(&diff(&x, &y));
            let du = vec_inf_norm(&diff(&u, &v));
            if dx > 0.0 {
                self.drift(&x, &u, &mut f1);
                self.drift(&y, &u, &mut f2);
                est.lx = est.lx.max(vec_inf_norm(&diff(&f1, &f2)) / dx);
                est.z = est.z.max(inf_norm(&(self.diffusion(&x) - self.diffusion(&y))) / dx);
            }
            if du > 0.0 {
                self.drift(&x, &u, &mut f1);
                self.drift(&x, &v, &mut f2);
                est.lu = est.lu.max(vec_inf_norm(&diff(&f1, &f2)) / du);
            }
        }
        est
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Uniform sample from a box chosen uniformly among the union's boxes.
pub fn sample_in(bu: &BoxUnion, rng: &mut Stream) -> Vec<f64> {
    let b = &bu.boxes()[rng.below(bu.boxes().len())];
    b.iter().map(|&[lo, hi]| rng.uniform_in(lo, hi)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DriftRaw {
    Linear { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    Pendulum { g: f64, l: f64, mass: f64, k: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemRaw {
    drift: DriftRaw,
    diffusion: Vec<Vec<Vec<f64>>>,
    lipschitz: Lipschitz,
    input_set: BoxUnion,
    domain: BoxUnion,
}

impl TryFrom<SystemRaw> for SystemSpec {
    type Error = Error;

    fn try_from(raw: SystemRaw) -> Result<Self> {
        let drift = match raw.drift {
            DriftRaw::Linear { a, b } => Drift::Linear { a: mat_from_rows(&a)?, b: mat_from_rows(&b)? },
            DriftRaw::Pendulum { g, l, mass, k } => Drift::Pendulum { g, l, mass, k },
        };
        let sigmas = raw.diffusion.iter().map(|s| mat_from_rows(s)).collect::<Result<_>>()?;
        SystemSpec::new(drift, sigmas, raw.lipschitz, raw.input_set, raw.domain)
    }
}

impl From<SystemSpec> for SystemRaw {
    fn from(s: SystemSpec) -> Self {
        let drift = match s.drift {
            Drift::Linear { a, b } => DriftRaw::Linear { a: mat_to_rows(&a), b: mat_to_rows(&b) },
            Drift::Pendulum { g, l, mass, k } => DriftRaw::Pendulum { g, l, mass, k },
        };
        SystemRaw {
            drift,
            diffusion: s.sigmas.iter().map(mat_to_rows).collect(),
            lipschitz: s.lipschitz,
            input_set: s.input_set,
            domain: s.domain,
        }
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// r ↦ c·r^p.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainFn {
    pub c: f64,
    pub p: f64,
}

impl GainFn {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite() && p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidGain(format!("need c ≥ 0 and p > 0, got c={c}, p={p}")));
        }
        Ok(GainFn { c, p })
    }

    pub fn linear(c: f64) -> Self {
        GainFn { c, p: 1.0 }
    }

    pub fn zero() -> Self {
        GainFn { c: 0.0, p: 1.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if self.c == 0.0 || r <= 0.0 {
            return 0.0;
        }
        self.c * r.powf(self.p)
    }

    /// Exact inverse (y/c)^{1/p}; requires c > 0.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if self.c <= 0.0 {
            return Err(Error::InvalidGain("cannot invert a zero gain".into()));
        }
        Ok((y.max(0.0) / self.c).powf(1.0 / self.p))
    }

    pub fn is_linear(&self) -> bool {
        self.p == 1.0
    }
}

/// (r, s) ↦ c·r^p·e^{−kappa·s}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KLFn {
    pub c: f64,
    pub p: f64,
    pub kappa: f64,
}

impl KLFn {
    pub fn new(c: f64, p: f64, kappa: f64) -> Result<Self> {
        GainFn::new(c, p)?;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidGain(format!("KL decay must be positive, got {kappa}")));
        }
        Ok(KLFn { c, p, kappa })
    }

    pub fn eval(&self, r: f64, s: f64) -> f64 {
        GainFn { c: self.c, p: self.p }.eval(r) * (-self.kappa * s).exp()
    }
}

fn power(p: f64) -> String {
    if p == 1.0 {
        "r".into()
    } else {
        format!("r^{p}")
    }
}

impl fmt::Display for GainFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} {}", self.c, power(self.p))
    }
}

impl fmt::Display for KLFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} {} e^(-{:.6} s)", self.c, power(self.p), self.kappa)
    }
}

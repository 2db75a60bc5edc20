//! Deterministic finite abstraction: every (lattice state, input) pair is mapped to the
//! lattice point nearest to the endpoint of the nominal (noise-free) flow over one period.

pub(crate) mod format;
mod grid;

use rayon::prelude::*;

pub use format::{FORMAT_VERSION, MAGIC};
pub use grid::{Axis, StateGrid, SINK};

use crate::error::{Error, Result};
use crate::model::{grid_points, SystemSpec};
use crate::quantizer::QuantizationPlan;
use crate::rng::Stream;

/// Fixed-step classic RK4 with reusable buffers.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Rk4 { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }

    /// Integrates x in place over [0, tau] with constant input u.
    pub fn integrate(&mut self, sys: &SystemSpec, x: &mut [f64], u: &[f64], tau: f64, substeps: usize) -> bool {
        let h = tau / substeps as f64;
        let n = x.len();
        for _ in 0..substeps {
            sys.drift(x, u, &mut self.k1);
            for i in 0..n {
                self.tmp[i] = x[i] + 0.5 * h * self.k1[i];
            }
            sys.drift(&self.tmp, u, &mut self.k2);
            for i in 0..n {
                self.tmp[i] = x[i] + 0.5 * h * self.k2[i];
            }
            sys.drift(&self.tmp, u, &mut self.k3);
            for i in 0..n {
                self.tmp[i] = x[i] + h * self.k3[i];
            }
            sys.drift(&self.tmp, u, &mut self.k4);
            for i in 0..n {
                x[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
            }
            if !x.iter().all(|v| v.is_finite()) {
                return false;
            }
        }
        true
    }
}

/// Nominal endpoint ξ̄_{x,u}(τ).
pub fn integrate_nominal(sys: &SystemSpec, x: &[f64], u: &[f64], tau: f64, substeps: usize) -> Result<Vec<f64>> {
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    let mut out = x.to_vec();
    if !Rk4::new(x.len()).integrate(sys, &mut out, u, tau, substeps) {
        return Err(Error::IntegrationDiverged { state: x.to_vec(), input: u.to_vec() });
    }
    Ok(out)
}

/// Smallest power of two s with L_x·τ·(τ/s)⁴ ≤ η/10 and L_x·τ/s ≤ 1.
pub fn default_substeps(lx: f64, tau: f64, eta: f64) -> usize {
    let mut s = 1usize;
    while s < (1 << 20) && (lx * tau * (tau / s as f64).powi(4) > eta / 10.0 || lx * tau / s as f64 > 1.0) {
        s *= 2;
    }
    s
}

/// Input lattice of the system's input set at spacing `mu`.
pub fn input_list(sys: &SystemSpec, mu: f64) -> Result<Vec<Vec<f64>>> {
    Ok(grid_points(&sys.input_set, mu)?.into_iter().map(|p| p.x).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Abstraction {
    pub plan: QuantizationPlan,
    pub grid: StateGrid,
    pub inputs: Vec<Vec<f64>>,
    /// Row-major successor table: entry `s * inputs.len() + i`.
    pub successors: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub substeps: Option<usize>,
    pub calibration_pairs: usize,
    pub calibration_seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { substeps: None, calibration_pairs: 1000, calibration_seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct BuildReport {
    pub substeps: usize,
    pub calibration_checked: usize,
}

const BLOCK: usize = 1024;

impl Abstraction {
    pub fn num_states(&self) -> usize {
        self.grid.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn successor(&self, state: usize, input: usize) -> u32 {
        self.successors[state * self.inputs.len() + input]
    }

    pub fn state_coords(&self, state: usize) -> Vec<f64> {
        self.grid.coords(state)
    }

    /// Builds the table in parallel on the current rayon pool. The result does not
    /// depend on the number of workers.
    pub fn build(
        sys: &SystemSpec,
        plan: QuantizationPlan,
        inputs: Vec<Vec<f64>>,
        opts: &BuildOptions,
    ) -> Result<(Abstraction, BuildReport)> {
        if inputs.is_empty() || inputs.iter().any(|u| u.len() != sys.m) {
            return Err(Error::Dimension(format!("inputs must be non-empty vectors of length {}", sys.m)));
        }
        let grid = StateGrid::new(&sys.domain, plan.eta)?;
        let substeps = opts.substeps.unwrap_or_else(|| default_substeps(sys.lipschitz.lx, plan.tau, plan.eta));
        let checked = calibrate(sys, &grid, &inputs, plan.tau, substeps, opts)?;
        let ni = inputs.len();
        let mut successors = vec![SINK; grid.len() * ni];
        let failures: Vec<Option<Error>> = successors
            .par_chunks_mut(BLOCK * ni)
            .enumerate()
            .map(|(b, chunk)| {
                let mut rk = Rk4::new(sys.n);
                let mut x0 = vec![0.0; sys.n];
                let mut x = vec![0.0; sys.n];
                for (r, row) in chunk.chunks_mut(ni).enumerate() {
                    let s = b * BLOCK + r;
                    if !grid.in_domain(s) {
                        continue;
                    }
                    grid.coords_into(s, &mut x0);
                    for (slot, u) in row.iter_mut().zip(&inputs) {
                        x.copy_from_slice(&x0);
                        if !rk.integrate(sys, &mut x, u, plan.tau, substeps) {
                            return Some(Error::IntegrationDiverged { state: x0.clone(), input: u.clone() });
                        }
                        *slot = grid.snap(&x);
                    }
                }
                None
            })
            .collect();
        if let Some(e) = failures.into_iter().flatten().next() {
            return Err(e);
        }
        Ok((
            Abstraction { plan, grid, inputs, successors },
            BuildReport { substeps, calibration_checked: checked },
        ))
    }

    /// Largest ‖ξ̄(τ) − successor‖∞ over sampled pairs with a non-SINK successor.
    pub fn max_relation_gap(&self, sys: &SystemSpec, samples: usize, substeps: usize, seed: u64) -> Result<f64> {
        let mut rng = Stream::new(seed, 1);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let s = rng.below(self.num_states());
            let i = rng.below(self.num_inputs());
            let t = self.successor(s, i);
            if t == SINK {
                continue;
            }
            let end = integrate_nominal(sys, &self.state_coords(s), &self.inputs[i], self.plan.tau, substeps)?;
            let c = self.state_coords(t as usize);
            worst = worst.max(end.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        Ok(worst)
    }
}

/// Compares successors at `substeps` and twice that on sampled pairs; any change aborts.
fn calibrate(
    sys: &SystemSpec,
    grid: &StateGrid,
    inputs: &[Vec<f64>],
    tau: f64,
    substeps: usize,
    opts: &BuildOptions,
) -> Result<usize> {
    let mut rng = Stream::new(opts.calibration_seed, 0);
    let pairs: Vec<(usize, usize)> = (0..opts.calibration_pairs)
        .map(|_| (rng.below(grid.len()), rng.below(inputs.len())))
        .filter(|&(s, _)| grid.in_domain(s))
        .collect();
    let changed = pairs
        .par_iter()
        .map(|&(s, i)| -> Result<usize> {
            let x = grid.coords(s);
            let a = integrate_nominal(sys, &x, &inputs[i], tau, substeps)?;
            let b = integrate_nominal(sys, &x, &inputs[i], tau, 2 * substeps)?;
            Ok((grid.snap(&a) != grid.snap(&b)) as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    if changed > 0 {
        return Err(Error::InsufficientSubsteps { substeps, changed, checked: pairs.len() });
    }
    Ok(pairs.len())
}

//! SCTL layout (little-endian): magic "SCTL", version u32, τ f64, η f64, ε f64, q u32,
//! n u32, n × (lo f64, hi f64, count u32), domain box count u32, boxes (lo f64, hi f64)…,
//! input count u32, input dim u32, inputs f64…, state count u32, phase count u32, then per
//! phase: winning bitmap, trigger bitmap (LSB-first, ⌈S/8⌉ bytes each) and u16 inputs
//! (0xFFFF where no input is prescribed).

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::solver::NO_INPUT;
use crate::abstraction::format::{read_axes, write_axes, Reader, Writer};
use crate::abstraction::{Abstraction, StateGrid, SINK};
use crate::error::{Error, Result};
use crate::model::BoxUnion;

pub const CONTROLLER_MAGIC: [u8; 4] = *b"SCTL";
pub const CONTROLLER_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub win: Vec<bool>,
    /// States where the phase is complete and control passes to the next phase.
    pub trigger: Vec<bool>,
    pub choice: Vec<u16>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Controller {
    pub tau: f64,
    pub eta: f64,
    pub eps: f64,
    pub q: u32,
    pub grid: StateGrid,
    pub inputs: Vec<Vec<f64>>,
    pub phases: Vec<Phase>,
}

impl Controller {
    pub fn new(a: &Abstraction, phases: Vec<Phase>) -> Self {
        Controller {
            tau: a.plan.tau,
            eta: a.plan.eta,
            eps: a.plan.eps,
            q: a.plan.q,
            grid: a.grid.clone(),
            inputs: a.inputs.clone(),
            phases,
        }
    }

    pub fn winning_counts(&self) -> Vec<usize> {
        self.phases.iter().map(|p| p.win.iter().filter(|&&w| w).count()).collect()
    }

    /// Phase after taking every trigger that fires at state `s`.
    pub fn advance(&self, s: usize, mut phase: usize) -> usize {
        while phase + 1 < self.phases.len() && self.phases[phase].trigger[s] {
            phase += 1;
        }
        phase
    }

    /// Input index for the nearest lattice state of `x`, and the updated phase.
    pub fn refine_index(&self, x: &[f64], phase: usize) -> Result<(usize, usize)> {
        let s = self.grid.snap(x);
        if s == SINK {
            return Err(Error::LeftWinningRegion { phase });
        }
        let s = s as usize;
        let phase = self.advance(s, phase);
        let p = &self.phases[phase];
        if !p.win[s] || p.choice[s] == NO_INPUT {
            return Err(Error::LeftWinningRegion { phase });
        }
        Ok((p.choice[s] as usize, phase))
    }

    pub fn refine(&self, x: &[f64], phase: usize) -> Result<(Vec<f64>, usize)> {
        let (i, phase) = self.refine_index(x, phase)?;
        Ok((self.inputs[i].clone(), phase))
    }

    /// One sweep: every winning, non-triggered state's chosen successor is winning in the same phase.
    pub fn check_closure(&self, a: &Abstraction) -> bool {
        self.phases.iter().enumerate().all(|(k, p)| {
            let last = k + 1 == self.phases.len();
            (0..a.num_states()).all(|s| {
                if !p.win[s] || (!last && p.trigger[s]) {
                    return true;
                }
                if p.choice[s] == NO_INPUT {
                    return false;
                }
                let t = a.successor(s, p.choice[s] as usize);
                t != SINK && p.win[t as usize]
            })
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer(Vec::new());
        w.bytes(&CONTROLLER_MAGIC)?;
        w.u32(CONTROLLER_VERSION)?;
        w.f64(self.tau)?;
        w.f64(self.eta)?;
        w.f64(self.eps)?;
        w.u32(self.q)?;
        w.u32(self.grid.dim() as u32)?;
        write_axes(&mut w, &self.grid)?;
        w.u32(self.grid.domain.boxes().len() as u32)?;
        for b in self.grid.domain.boxes() {
            for &[lo, hi] in b {
                w.f64(lo)?;
                w.f64(hi)?;
            }
        }
        w.u32(self.inputs.len() as u32)?;
        w.u32(self.inputs.first().map_or(0, |u| u.len()) as u32)?;
        for u in &self.inputs {
            for &v in u {
                w.f64(v)?;
            }
        }
        w.u32(self.grid.len() as u32)?;
        w.u32(self.phases.len() as u32)?;
        for p in &self.phases {
            w.bytes(&pack(&p.win))?;
            w.bytes(&pack(&p.trigger))?;
            for &c in &p.choice {
                w.u16(c)?;
            }
        }
        Ok(w.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = BufWriter::new(fs::File::create(path)?);
        f.write_all(&self.to_bytes()?)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.magic(CONTROLLER_MAGIC)?;
        r.version(CONTROLLER_VERSION)?;
        let tau = r.f64("tau")?;
        let eta = r.f64("eta")?;
        let eps = r.f64("eps")?;
        let q = r.u32("q")?;
        let n = r.u32("n")? as usize;
        if !(eta > 0.0) {
            return Err(Error::Malformed(format!("η = {eta}")));
        }
        let axes = read_axes(&mut r, n, eta)?;
        let nb = r.u32("box count")? as usize;
        let mut boxes = Vec::with_capacity(nb);
        for _ in 0..nb {
            boxes.push((0..n).map(|_| Ok([r.f64("box lo")?, r.f64("box hi")?])).collect::<Result<Vec<_>>>()?);
        }
        let grid = StateGrid::from_axes(BoxUnion::new(boxes)?, eta, axes);
        let ni = r.u32("input count")? as usize;
        let m = r.u32("input dim")? as usize;
        let mut inputs = Vec::with_capacity(ni);
        for _ in 0..ni {
            inputs.push((0..m).map(|_| r.f64("input")).collect::<Result<Vec<_>>>()?);
        }
        let ns = r.u32("state count")? as usize;
        if ns != grid.len() {
            return Err(Error::Malformed(format!("state count {ns} does not match the lattice ({})", grid.len())));
        }
        let np = r.u32("phase count")? as usize;
        let mut phases = Vec::with_capacity(np);
        let bytes = ns.div_ceil(8);
        for _ in 0..np {
            let win = unpack(r.take(bytes, "winning bitmap")?, ns);
            let trigger = unpack(r.take(bytes, "trigger bitmap")?, ns);
            let choice = (0..ns).map(|_| r.u16("input index")).collect::<Result<Vec<_>>>()?;
            phases.push(Phase { win, trigger, choice });
        }
        if r.remaining() != 0 {
            return Err(Error::Malformed("trailing bytes after controller".into()));
        }
        Ok(Controller { tau, eta, eps, q, grid, inputs, phases })
    }
}

fn pack(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn unpack(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

//! SSYM binary layout (little-endian):
//! magic "SSYM", version u32, n u32, q u32, τ f64, η f64, ε f64,
//! n × (lo f64, hi f64, count u32), input count u32, input dim u32, inputs f64…,
//! μ f64, h(τ) f64, route u32, domain box count u32, boxes (lo f64, hi f64)…,
//! successor table u32 row-major (state-major, input-minor), SINK = 0xFFFFFFFF.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Abstraction, Axis, StateGrid};
use crate::error::{Error, Result};
use crate::model::BoxUnion;
use crate::quantizer::{QuantizationPlan, Route};

pub const MAGIC: [u8; 4] = *b"SSYM";
pub const FORMAT_VERSION: u32 = 1;

pub(crate) struct Writer<W: Write>(pub W);

impl<W: Write> Writer<W> {
    pub fn u16(&mut self, v: u16) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    pub fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    pub fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        Ok(self.0.write_all(b)?)
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Truncated(format!("{what} at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    pub fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    pub fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
    pub fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.take(4, "magic")?.try_into().unwrap();
        if found != expected {
            return Err(Error::BadMagic { expected, found });
        }
        Ok(())
    }
    pub fn version(&mut self, expected: u32) -> Result<()> {
        let found = self.u32("version")?;
        if found != expected {
            return Err(Error::VersionMismatch { expected, found });
        }
        Ok(())
    }
}

pub(crate) fn write_axes<W: Write>(w: &mut Writer<W>, grid: &StateGrid) -> Result<()> {
    for a in &grid.axes {
        w.f64(a.k0 as f64 * grid.eta)?;
        w.f64((a.k0 + a.count as i64 - 1) as f64 * grid.eta)?;
        w.u32(a.count)?;
    }
    Ok(())
}

pub(crate) fn read_axes(r: &mut Reader, n: usize, eta: f64) -> Result<Vec<Axis>> {
    (0..n)
        .map(|_| {
            let lo = r.f64("axis lo")?;
            let _hi = r.f64("axis hi")?;
            let count = r.u32("axis count")?;
            Ok(Axis { k0: (lo / eta).round() as i64, count })
        })
        .collect()
}

impl Abstraction {
    fn header_bytes(&self) -> Result<Vec<u8>> {
        let g = &self.grid;
        let p = &self.plan;
        let mut w = Writer(Vec::new());
        w.bytes(&MAGIC)?;
        w.u32(FORMAT_VERSION)?;
        w.u32(g.dim() as u32)?;
        w.u32(p.q)?;
        w.f64(p.tau)?;
        w.f64(p.eta)?;
        w.f64(p.eps)?;
        write_axes(&mut w, g)?;
        w.u32(self.inputs.len() as u32)?;
        w.u32(self.inputs.first().map_or(0, |u| u.len()) as u32)?;
        for u in &self.inputs {
            for &v in u {
                w.f64(v)?;
            }
        }
        w.f64(p.mu)?;
        w.f64(p.h_at_tau)?;
        w.u32(p.route.code())?;
        w.u32(g.domain.boxes().len() as u32)?;
        for b in g.domain.boxes() {
            for &[lo, hi] in b {
                w.f64(lo)?;
                w.f64(hi)?;
            }
        }
        Ok(w.0)
    }

    pub fn header_len(&self) -> usize {
        self.header_bytes().map(|h| h.len()).unwrap_or(0)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = self.header_bytes()?;
        out.reserve(self.successors.len() * 4);
        for &s in &self.successors {
            out.extend_from_slice(&s.to_le_bytes());
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        w.write_all(&self.header_bytes()?)?;
        for &s in &self.successors {
            w.write_all(&s.to_le_bytes())?;
        }
        w.flush()?;
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
        r.magic(MAGIC)?;
        r.version(FORMAT_VERSION)?;
        let n = r.u32("n")? as usize;
        let q = r.u32("q")?;
        let tau = r.f64("tau")?;
        let eta = r.f64("eta")?;
        let eps = r.f64("eps")?;
        if !(eta > 0.0) {
            return Err(Error::Malformed(format!("η = {eta}")));
        }
        let axes = read_axes(&mut r, n, eta)?;
        let ni = r.u32("input count")? as usize;
        let m = r.u32("input dim")? as usize;
        let mut inputs = Vec::with_capacity(ni);
        for _ in 0..ni {
            inputs.push((0..m).map(|_| r.f64("input")).collect::<Result<Vec<_>>>()?);
        }
        let mu = r.f64("mu")?;
        let h_at_tau = r.f64("h")?;
        let route = Route::from_code(r.u32("route")?).ok_or_else(|| Error::Malformed("unknown route".into()))?;
        let nb = r.u32("box count")? as usize;
        let mut boxes = Vec::with_capacity(nb);
        for _ in 0..nb {
            boxes.push((0..n).map(|_| Ok([r.f64("box lo")?, r.f64("box hi")?])).collect::<Result<Vec<_>>>()?);
        }
        let domain = BoxUnion::new(boxes)?;
        let grid = StateGrid::from_axes(domain, eta, axes);
        let cells = grid.len() * ni;
        if r.remaining() < cells * 4 {
            return Err(Error::Truncated(format!(
                "successor table needs {} bytes, {} present",
                cells * 4,
                r.remaining()
            )));
        }
        if r.remaining() > cells * 4 {
            return Err(Error::Malformed("trailing bytes after successor table".into()));
        }
        let table = r.take(cells * 4, "table")?;
        let successors = table.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
        let plan = QuantizationPlan { tau, eta, mu, eps, q, route, h_at_tau };
        Ok(Abstraction { plan, grid, inputs, successors })
    }
}

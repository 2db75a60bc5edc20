use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when converting box bounds to integer grid indices, so that
/// e.g. 4.5 / 0.01 = 449.99999999999994 still counts as index 450.
pub const INDEX_TOL: f64 = 1e-9;

/// Finite union of closed axis-aligned boxes, each a list of `[lo, hi]` per dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<[f64; 2]>>", into = "Vec<Vec<[f64; 2]>>")]
pub struct BoxUnion {
    boxes: Vec<Vec<[f64; 2]>>,
}

impl TryFrom<Vec<Vec<[f64; 2]>>> for BoxUnion {
    type Error = Error;

    fn try_from(boxes: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        BoxUnion::new(boxes)
    }
}

impl From<BoxUnion> for Vec<Vec<[f64; 2]>> {
    fn from(b: BoxUnion) -> Self {
        b.boxes
    }
}

impl BoxUnion {
    pub fn new(boxes: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let dim = boxes.first().map_or(0, |b| b.len());
        for b in &boxes {
            if b.len() != dim || dim == 0 {
                return Err(Error::InvalidBox("boxes must share a positive dimension".into()));
            }
            for &[lo, hi] in b {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::InvalidBox(format!("need lo < hi, got [{lo}, {hi}]")));
                }
            }
        }
        Ok(BoxUnion { boxes })
    }

    pub fn single(b: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(vec![b])
    }

    pub fn boxes(&self) -> &[Vec<[f64; 2]>] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.boxes.first().map_or(0, |b| b.len())
    }

    /// Smallest side length over all boxes.
    pub fn span(&self) -> Result<f64> {
        if self.boxes.is_empty() {
            return Err(Error::EmptyBoxUnion);
        }
        Ok(self
            .boxes
            .iter()
            .flat_map(|b| b.iter().map(|[lo, hi]| hi - lo))
            .fold(f64::INFINITY, f64::min))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes
            .iter()
            .any(|b| b.iter().zip(x).all(|(&[lo, hi], &xi)| lo <= xi && xi <= hi))
    }

    /// Infinity-norm distance from `x` to the union; zero inside.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.boxes
            .iter()
            .map(|b| {
                b.iter()
                    .zip(x)
                    .map(|(&[lo, hi], &xi)| (lo - xi).max(xi - hi).max(0.0))
                    .fold(0.0, f64::max)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Infinity-norm distance from `x` to the complement of the union, zero outside.
    /// Only exact for disjoint or nested boxes; used for shrink labelling.
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.boxes
            .iter()
            .map(|b| {
                b.iter()
                    .zip(x)
                    .map(|(&[lo, hi], &xi)| (xi - lo).min(hi - xi))
                    .fold(f64::INFINITY, f64::min)
                    .max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// Bounding box of the union.
    pub fn hull(&self) -> Vec<[f64; 2]> {
        let mut out = vec![[f64::INFINITY, f64::NEG_INFINITY]; self.dim()];
        for b in &self.boxes {
            for (o, &[lo, hi]) in out.iter_mut().zip(b) {
                o[0] = o[0].min(lo);
                o[1] = o[1].max(hi);
            }
        }
        out
    }

    /// sup over the union of the infinity norm.
    pub fn sup_norm(&self) -> f64 {
        self.boxes
            .iter()
            .flat_map(|b| b.iter().map(|[lo, hi]| lo.abs().max(hi.abs())))
            .fold(0.0, f64::max)
    }

    /// Infinity-norm diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.hull().iter().map(|[lo, hi]| hi - lo).fold(0.0, f64::max)
    }

    /// All vertices of every box.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for b in &self.boxes {
            let n = b.len();
            for mask in 0..(1usize << n) {
                out.push((0..n).map(|i| b[i][(mask >> i) & 1]).collect());
            }
        }
        out
    }

    /// Integer index range `[k_lo, k_hi]` per axis of every box at `spacing`.
    pub fn index_ranges(&self, spacing: f64) -> Vec<Vec<(i64, i64)>> {
        self.boxes
            .iter()
            .map(|b| b.iter().map(|&[lo, hi]| axis_range(lo, hi, spacing)).collect())
            .collect()
    }

    pub fn contains_index(&self, k: &[i64], spacing: f64) -> bool {
        self.index_ranges(spacing)
            .iter()
            .any(|r| r.iter().zip(k).all(|(&(a, b), &ki)| a <= ki && ki <= b))
    }
}

pub fn axis_range(lo: f64, hi: f64, spacing: f64) -> (i64, i64) {
    ((lo / spacing - INDEX_TOL).ceil() as i64, (hi / spacing + INDEX_TOL).floor() as i64)
}

/// Point of the lattice spacing·ℤⁿ.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub k: Vec<i64>,
    pub x: Vec<f64>,
}

impl GridPoint {
    pub fn from_index(k: Vec<i64>, spacing: f64) -> Self {
        let x = k.iter().map(|&ki| ki as f64 * spacing).collect();
        GridPoint { k, x }
    }
}

/// Odometer step over an integer box, last axis fastest.
pub(crate) fn advance(k: &mut [i64], ranges: &[(i64, i64)]) -> bool {
    for d in (0..k.len()).rev() {
        if k[d] < ranges[d].1 {
            k[d] += 1;
            return true;
        }
        k[d] = ranges[d].0;
    }
    false
}

/// Lattice points of the union, deduplicated, in lexicographic index order.
pub fn grid_points(bu: &BoxUnion, spacing: f64) -> Result<Vec<GridPoint>> {
    let span = bu.span()?;
    if !(spacing > 0.0) || spacing > span * (1.0 + INDEX_TOL) {
        return Err(Error::SpacingExceedsSpan { spacing, span });
    }
    let mut set = BTreeSet::new();
    for ranges in bu.index_ranges(spacing) {
        let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        if ranges.iter().any(|r| r.0 > r.1) {
            continue;
        }
        loop {
            set.insert(k.clone());
            if !advance(&mut k, &ranges) {
                break;
            }
        }
    }
    Ok(set.into_iter().map(|k| GridPoint::from_index(k, spacing)).collect())
}

/// Index of the nearest lattice point; exact halves round toward −∞.
pub fn nearest_index(x: &[f64], spacing: f64) -> Vec<i64> {
    x.iter().map(|&xi| (xi / spacing - 0.5).ceil() as i64).collect()
}

pub fn nearest_grid_point(x: &[f64], spacing: f64) -> GridPoint {
    GridPoint::from_index(nearest_index(x, spacing), spacing)
}

pub fn distance_to_set(x: &[f64], bu: &BoxUnion) -> f64 {
    bu.distance(x)
}

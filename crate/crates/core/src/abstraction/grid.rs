use crate::error::{Error, Result};
use crate::model::boxes::{axis_range, nearest_index};
use crate::model::BoxUnion;

pub const SINK: u32 = u32::MAX;

/// One lattice axis: indices k0, k0+1, …, k0+count−1, coordinate k·η.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Axis {
    pub k0: i64,
    pub count: u32,
}

/// Product lattice over the bounding box of the domain, flattened row-major
/// (first axis slowest). Points outside the domain union are marked.
#[derive(Clone, Debug, PartialEq)]
pub struct StateGrid {
    pub eta: f64,
    pub axes: Vec<Axis>,
    pub domain: BoxUnion,
    ranges: Vec<Vec<(i64, i64)>>,
    single_box: bool,
}

impl StateGrid {
    pub fn new(domain: &BoxUnion, eta: f64) -> Result<Self> {
        let span = domain.span()?;
        if !(eta > 0.0) || eta > span * (1.0 + 1e-9) {
            return Err(Error::SpacingExceedsSpan { spacing: eta, span });
        }
        let axes: Vec<Axis> = domain
            .hull()
            .iter()
            .map(|&[lo, hi]| {
                let (a, b) = axis_range(lo, hi, eta);
                Axis { k0: a, count: (b - a + 1) as u32 }
            })
            .collect();
        let total: u128 = axes.iter().map(|a| a.count as u128).product();
        if total >= SINK as u128 {
            return Err(Error::GridTooLarge(format!("{total} states do not fit 32-bit indices")));
        }
        Ok(Self::from_axes(domain.clone(), eta, axes))
    }

    pub fn from_axes(domain: BoxUnion, eta: f64, axes: Vec<Axis>) -> Self {
        let ranges = domain.index_ranges(eta);
        let single_box = domain.boxes().len() == 1;
        StateGrid { eta, axes, domain, ranges, single_box }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<i64> {
        let mut k = vec![0; self.dim()];
        for d in (0..self.dim()).rev() {
            let c = self.axes[d].count as usize;
            k[d] = self.axes[d].k0 + (idx % c) as i64;
            idx /= c;
        }
        k
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).iter().map(|&k| k as f64 * self.eta).collect()
    }

    pub fn coords_into(&self, mut idx: usize, out: &mut [f64]) {
        for d in (0..self.dim()).rev() {
            let c = self.axes[d].count as usize;
            out[d] = (self.axes[d].k0 + (idx % c) as i64) as f64 * self.eta;
            idx /= c;
        }
    }

    pub fn in_domain_k(&self, k: &[i64]) -> bool {
        self.ranges
            .iter()
            .any(|r| r.iter().zip(k).all(|(&(a, b), &ki)| a <= ki && ki <= b))
    }

    pub fn in_domain(&self, idx: usize) -> bool {
        self.single_box || self.in_domain_k(&self.multi_index(idx))
    }

    /// Flat index of a multi-index, if on the lattice.
    pub fn flat(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (a, &ki) in self.axes.iter().zip(k) {
            let off = ki - a.k0;
            if off < 0 || off >= a.count as i64 {
                return None;
            }
            idx = idx * a.count as usize + off as usize;
        }
        Some(idx)
    }

    /// Nearest lattice state of `x`, or SINK when it falls outside the domain.
    pub fn snap(&self, x: &[f64]) -> u32 {
        let k = nearest_index(x, self.eta);
        match self.flat(&k) {
            Some(i) if self.single_box || self.in_domain_k(&k) => i as u32,
            _ => SINK,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> StateGrid {
        StateGrid::new(&BoxUnion::single(vec![[-1.0, 1.0], [0.0, 0.5]]).unwrap(), 0.25).unwrap()
    }

    #[test]
    fn counts_and_coords() {
        let g = grid();
        assert_eq!(g.axes, vec![Axis { k0: -4, count: 9 }, Axis { k0: 0, count: 3 }]);
        assert_eq!(g.len(), 27);
        assert_eq!(g.coords(0), vec![-1.0, 0.0]);
        assert_eq!(g.coords(26), vec![1.0, 0.5]);
        assert_eq!(g.coords(4), vec![-0.75, 0.25]);
    }

    #[test]
    fn snap_and_sink() {
        let g = grid();
        assert_eq!(g.snap(&[-1.0, 0.0]), 0);
        assert_eq!(g.snap(&[-1.2, 0.0]), SINK);
        assert_eq!(g.coords(g.snap(&[0.0, 0.6]) as usize), vec![0.0, 0.5]);
        assert_eq!(g.snap(&[0.0, 0.63]), SINK);
        assert_eq!(g.coords(g.snap(&[0.13, 0.37]) as usize), vec![0.25, 0.25]);
    }

    #[test]
    fn union_domain_marks_holes() {
        let d = BoxUnion::new(vec![vec![[0.0, 1.0], [0.0, 1.0]], vec![[2.0, 3.0], [0.0, 1.0]]]).unwrap();
        let g = StateGrid::new(&d, 0.5).unwrap();
        assert_eq!(g.len(), 7 * 3);
        let hole = g.flat(&[3, 0]).unwrap();
        assert!(!g.in_domain(hole));
        assert_eq!(g.snap(&[1.5, 0.0]), SINK);
        assert!(g.in_domain(g.flat(&[4, 2]).unwrap()));
    }

    #[test]
    fn exhaustive_flat_roundtrip() {
        let g = grid();
        for i in 0..g.len() {
            assert_eq!(g.flat(&g.multi_index(i)), Some(i));
        }
    }

    proptest! {
        #[test]
        fn covering(x in -1.0f64..1.0, y in 0.0f64..0.5) {
            let g = grid();
            let s = g.snap(&[x, y]);
            prop_assert_ne!(s, SINK);
            let c = g.coords(s as usize);
            prop_assert!((c[0] - x).abs() <= 0.125 + 1e-12 && (c[1] - y).abs() <= 0.125 + 1e-12);
        }
    }
}

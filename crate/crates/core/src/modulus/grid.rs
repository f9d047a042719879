//! Uniform node grids over boxes, the Kuhn subdivision of their cells, and field export.

use std::fmt;
use std::io::Write;

use crate::error::{invalid, Result};

/// A box `lo + [0, dims_k h]` sampled at `(dims_k + 1)` nodes per axis. Node indices are
/// row-major: the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub h: f64,
    pub dims: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, h: f64, dims: Vec<usize>) -> Result<Self> {
        if lo.len() != dims.len() || lo.is_empty() {
            return invalid("grid corner and cell counts must have the same nonzero length");
        }
        if !(h > 0.0 && h.is_finite()) {
            return invalid(format!("grid step must be positive, got {h}"));
        }
        if dims.iter().any(|&d| d == 0) {
            return invalid("every axis needs at least one cell");
        }
        let nodes: u128 = dims.iter().map(|&d| d as u128 + 1).product();
        if nodes >= u32::MAX as u128 {
            return invalid(format!("grid with {nodes} nodes is too large"));
        }
        Ok(GridSpec { lo, h, dims })
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().map(|d| d + 1).product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.n();
        let mut s = vec![1; n];
        for k in (0..n - 1).rev() {
            s[k] = s[k + 1] * (self.dims[k + 1] + 1);
        }
        s
    }

    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.n()).rev() {
            let m = self.dims[k] + 1;
            out[k] = idx % m;
            idx /= m;
        }
    }

    pub fn node_coords(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        for k in (0..self.n()).rev() {
            let m = self.dims[k] + 1;
            out[k] = self.lo[k] + (rem % m) as f64 * self.h;
            rem /= m;
        }
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        multi.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    /// Nearest node to `x`, if `x` lies within half a cell of the box.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let mut idx = 0;
        for (k, s) in self.strides().into_iter().enumerate() {
            let t = ((x[k] - self.lo[k]) / self.h).round();
            if !(t >= 0.0 && t <= self.dims[k] as f64) {
                return None;
            }
            idx += t as usize * s;
        }
        Some(idx)
    }

    /// Lower corner of the closed cell containing `x`.
    pub fn cell_containing(&self, x: &[f64]) -> Option<Vec<usize>> {
        let mut out = Vec::with_capacity(self.n());
        for k in 0..self.n() {
            let t = ((x[k] - self.lo[k]) / self.h).floor();
            if !(t >= 0.0 && t <= self.dims[k] as f64) {
                return None;
            }
            out.push((t as usize).min(self.dims[k] - 1));
        }
        Some(out)
    }

    /// The grid with half as many cells per axis over the same box.
    pub fn coarsen(&self) -> Option<GridSpec> {
        if self.dims.iter().all(|&d| d % 2 == 0 && d / 2 >= 16) {
            Some(GridSpec { lo: self.lo.clone(), h: 2.0 * self.h, dims: self.dims.iter().map(|d| d / 2).collect() })
        } else {
            None
        }
    }

    /// Multilinear prolongation of a field on `self.coarsen()` to this grid.
    pub(crate) fn prolongate(&self, coarse: &GridSpec, values: &[f64]) -> Vec<f64> {
        let n = self.n();
        let cs = coarse.strides();
        let mut out = vec![0.0; self.node_count()];
        let mut mi = vec![0; n];
        for (idx, slot) in out.iter_mut().enumerate() {
            self.multi_index(idx, &mut mi);
            let odd: Vec<usize> = (0..n).filter(|&k| mi[k] % 2 == 1).collect();
            let base: usize = (0..n).map(|k| (mi[k] / 2) * cs[k]).sum();
            let mut acc = 0.0;
            for mask in 0..(1usize << odd.len()) {
                let mut j = base;
                for (b, &k) in odd.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        j += cs[k];
                    }
                }
                acc += values[j];
            }
            *slot = acc / (1usize << odd.len()) as f64;
        }
        out
    }
}

/// Cell topology of the Kuhn (Freudenthal) subdivision: every cube splits into `n!`
/// simplices, one per ordering of the axes, each walking from the lower to the upper
/// corner along cube edges.
#[derive(Debug, Clone)]
pub(crate) struct KuhnTopology {
    pub corner_offsets: Vec<usize>,
    /// `(from, to)` corners of each cube edge.
    pub edges: Vec<(usize, usize)>,
    /// Edge ids walked by each simplex.
    pub simplices: Vec<Vec<usize>>,
    /// Corners of each simplex.
    pub simplex_corners: Vec<Vec<usize>>,
}

impl KuhnTopology {
    pub fn new(spec: &GridSpec) -> Self {
        let n = spec.n();
        let strides = spec.strides();
        let corners = 1usize << n;
        let corner_offsets =
            (0..corners).map(|c| (0..n).filter(|&k| c >> k & 1 == 1).map(|k| strides[k]).sum()).collect();
        let mut edges = Vec::new();
        let mut edge_id = vec![vec![usize::MAX; n]; corners];
        for (a, ids) in edge_id.iter_mut().enumerate() {
            for (k, id) in ids.iter_mut().enumerate() {
                if a >> k & 1 == 0 {
                    *id = edges.len();
                    edges.push((a, a | 1 << k));
                }
            }
        }
        let mut simplices = Vec::new();
        let mut simplex_corners = Vec::new();
        for perm in permutations(n) {
            let mut c = 0usize;
            let mut es = Vec::with_capacity(n);
            let mut cs = vec![0];
            for &k in &perm {
                es.push(edge_id[c][k]);
                c |= 1 << k;
                cs.push(c);
            }
            simplices.push(es);
            simplex_corners.push(cs);
        }
        KuhnTopology { corner_offsets, edges, simplices, simplex_corners }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// A nodal field on a grid, e.g. the minimizing potential of a capacity solve.
#[derive(Clone, PartialEq)]
pub struct GridField {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl fmt::Debug for GridField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridField").field("spec", &self.spec).field("len", &self.values.len()).finish()
    }
}

impl GridField {
    /// Multilinear interpolation; `None` outside the grid box.
    pub fn sample(&self, x: &[f64]) -> Option<f64> {
        let n = self.spec.n();
        if x.len() != n {
            return None;
        }
        let strides = self.spec.strides();
        let mut base = 0;
        let mut frac = vec![0.0; n];
        for k in 0..n {
            let t = (x[k] - self.spec.lo[k]) / self.spec.h;
            if !(t >= 0.0 && t <= self.spec.dims[k] as f64) {
                return None;
            }
            let i = (t.floor() as usize).min(self.spec.dims[k] - 1);
            frac[k] = t - i as f64;
            base += i * strides[k];
        }
        let mut acc = 0.0;
        for c in 0..(1usize << n) {
            let mut w = 1.0;
            let mut j = base;
            for k in 0..n {
                if c >> k & 1 == 1 {
                    w *= frac[k];
                    j += strides[k];
                } else {
                    w *= 1.0 - frac[k];
                }
            }
            if w != 0.0 {
                acc += w * self.values[j];
            }
        }
        Some(acc)
    }

    /// CSV export: a `#` header with the grid geometry, then one line per run of the
    /// last axis in row-major order.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let dims: Vec<String> = self.spec.dims.iter().map(|d| (d + 1).to_string()).collect();
        let lo: Vec<String> = self.spec.lo.iter().map(|v| v.to_string()).collect();
        writeln!(w, "# n={} dims={} lo={} h={}", self.spec.n(), dims.join("x"), lo.join(","), self.spec.h)?;
        let row = self.spec.dims[self.spec.n() - 1] + 1;
        for chunk in self.values.chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Flat little-endian binary: `u32 n`, `n × u64` nodes per axis, `n × f64` lower
    /// corner, `f64` step, then the values in row-major order.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&(self.spec.n() as u32).to_le_bytes())?;
        for d in &self.spec.dims {
            w.write_all(&(*d as u64 + 1).to_le_bytes())?;
        }
        for v in &self.spec.lo {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.spec.h.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indexing_roundtrip() {
        let g = GridSpec::new(vec![-1.0, 0.0, 2.0], 0.5, vec![3, 4, 2]).unwrap();
        assert_eq!(g.node_count(), 4 * 5 * 3);
        assert_eq!(g.strides(), vec![15, 3, 1]);
        let mut mi = [0; 3];
        let mut x = [0.0; 3];
        for idx in 0..g.node_count() {
            g.multi_index(idx, &mut mi);
            assert_eq!(g.index_of(&mi), idx);
            g.node_coords(idx, &mut x);
            assert_eq!(g.nearest_node(&x), Some(idx));
        }
        assert_eq!(g.nearest_node(&[-1.3, 0.0, 2.0]), None);
        assert_eq!(g.cell_containing(&[0.5, 2.0, 3.0]), Some(vec![2, 3, 1]));
    }

    #[test]
    fn kuhn_simplices_tile_the_cube() {
        for n in 2..=4 {
            let g = GridSpec::new(vec![0.0; n], 1.0, vec![2; n]).unwrap();
            let t = KuhnTopology::new(&g);
            let fact: usize = (1..=n).product();
            assert_eq!(t.simplices.len(), fact);
            assert_eq!(t.edges.len(), n << (n - 1));
            // every simplex runs from corner 0 to the far corner along distinct axes
            for cs in &t.simplex_corners {
                assert_eq!(cs[0], 0);
                assert_eq!(cs[n], (1 << n) - 1);
            }
            // a random interior point lies in exactly one simplex: coordinates sorted descending
            // along the simplex's axis order
            let x = [0.71, 0.13, 0.52, 0.94];
            let inside = t
                .simplex_corners
                .iter()
                .filter(|cs| {
                    (1..=n).all(|j| {
                        let k = (cs[j] ^ cs[j - 1]).trailing_zeros() as usize;
                        (j + 1..=n).all(|l| x[k] > x[(cs[l] ^ cs[l - 1]).trailing_zeros() as usize])
                    })
                })
                .count();
            assert_eq!(inside, 1);
        }
    }

    #[test]
    fn prolongation_reproduces_multilinear_functions() {
        let fine = GridSpec::new(vec![0.0, 0.0], 0.25, vec![32, 32]).unwrap();
        let coarse = fine.coarsen().unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[1];
        let mut x = [0.0; 2];
        let cv: Vec<f64> = (0..coarse.node_count()).map(|i| {
            coarse.node_coords(i, &mut x);
            f(&x)
        }).collect();
        let pv = fine.prolongate(&coarse, &cv);
        for (i, v) in pv.iter().enumerate() {
            fine.node_coords(i, &mut x);
            assert!((v - f(&x)).abs() < 1e-12);
        }
        assert!(coarse.coarsen().is_none());
    }

    #[test]
    fn field_sampling_and_export() {
        let spec = GridSpec::new(vec![0.0, 0.0], 0.5, vec![2, 2]).unwrap();
        let mut x = [0.0; 2];
        let values = (0..9).map(|i| {
            spec.node_coords(i, &mut x);
            x[0] + 10.0 * x[1]
        }).collect();
        let field = GridField { spec, values };
        assert!((field.sample(&[0.3, 0.7]).unwrap() - 7.3).abs() < 1e-12);
        assert!(field.sample(&[1.2, 0.0]).is_none());
        let mut csv = Vec::new();
        field.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("# n=2 dims=3x3 lo=0,0 h=0.5\n"));
        assert_eq!(text.lines().count(), 4);
        let mut bin = Vec::new();
        field.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 4 + 2 * 8 + 2 * 8 + 8 + 9 * 8);
    }
}

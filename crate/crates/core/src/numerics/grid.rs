use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::halfspace::Dim;

/// Largest dimension accepted by grid operations.
pub const MAX_GRID_DIM: usize = 7;
/// Minimum number of interior points along every axis.
pub const MIN_INTERIOR: usize = 8;

/// Uniform lattice on a box in the closed half-space `y^n ≥ 0`.
///
/// Node `k` along axis `i` sits at `origin[i] + k·h`. The last axis is the
/// normal direction and varies fastest in the linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfGrid {
    dim: Dim,
    h: f64,
    origin: Vec<f64>,
    counts: Vec<usize>,
}

impl HalfGrid {
    /// Box `[−L, L]^{n−1} × [0, L]` with spacing `h`; `L/h` must be an integer.
    pub fn new(dim: Dim, h: f64, extent: f64) -> Result<Self> {
        let n = dim.n;
        if n > MAX_GRID_DIM {
            return Err(Error::config(format!("grid operations support n <= {MAX_GRID_DIM}, got {n}")));
        }
        if !(h > 0.0) || !(extent > 0.0) || !h.is_finite() || !extent.is_finite() {
            return Err(Error::config("grid spacing and extent must be positive"));
        }
        let cells = extent / h;
        let k = cells.round();
        if (cells - k).abs() > 1e-9 * cells.max(1.0) {
            return Err(Error::config(format!("extent {extent} is not a multiple of h = {h}")));
        }
        let k = k as usize;
        let mut counts = vec![2 * k + 1; n];
        counts[n - 1] = k + 1;
        let mut origin = vec![-(k as f64) * h; n];
        origin[n - 1] = 0.0;
        let grid = HalfGrid { dim, h, origin, counts };
        grid.check_size()?;
        Ok(grid)
    }

    fn check_size(&self) -> Result<()> {
        let n = self.dim.n;
        for (i, &c) in self.counts.iter().enumerate() {
            // Normal axis: the boundary row counts as a stencil row, not an interior one.
            let interior = if i == n - 1 { c.saturating_sub(1) } else { c.saturating_sub(2) };
            if interior < MIN_INTERIOR {
                return Err(Error::config(format!(
                    "grid axis {i} has {interior} interior points, need at least {MIN_INTERIOR}"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn strides(&self) -> Vec<usize> {
        let n = self.dim.n;
        let mut s = vec![1; n];
        for i in (0..n - 1).rev() {
            s[i] = s[i + 1] * self.counts[i + 1];
        }
        s
    }

    pub fn multi_index(&self, mut lin: usize) -> Vec<usize> {
        let n = self.dim.n;
        let mut idx = vec![0; n];
        for i in (0..n).rev() {
            idx[i] = lin % self.counts[i];
            lin /= self.counts[i];
        }
        idx
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (i, c)| acc * c + i)
    }

    pub fn point(&self, lin: usize) -> Vec<f64> {
        self.multi_index(lin)
            .iter()
            .zip(&self.origin)
            .map(|(&k, o)| o + k as f64 * self.h)
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Whether node `lin` lies on the plane `y^n = 0`.
    pub fn on_boundary(&self, lin: usize) -> bool {
        self.origin[self.dim.n - 1] == 0.0 && lin % self.counts[self.dim.n - 1] == 0
    }

    /// Node at physical location `y`, if `y` is a lattice point of this grid.
    pub fn locate(&self, y: &[f64]) -> Option<usize> {
        let mut idx = Vec::with_capacity(y.len());
        for ((x, o), &c) in y.iter().zip(&self.origin).zip(&self.counts) {
            let t = (x - o) / self.h;
            let k = t.round();
            if (t - k).abs() > 1e-6 || k < 0.0 || k as usize >= c {
                return None;
            }
            idx.push(k as usize);
        }
        Some(self.linear_index(&idx))
    }

    /// The grid on which finite-difference derivatives are returned: one
    /// cell removed at every lateral face and at the top face.
    pub fn cropped(&self) -> Result<HalfGrid> {
        let n = self.dim.n;
        let mut origin = self.origin.clone();
        let mut counts = self.counts.clone();
        for i in 0..n - 1 {
            origin[i] += self.h;
            counts[i] = counts[i]
                .checked_sub(2)
                .ok_or_else(|| Error::config("grid too small for stencil"))?;
        }
        counts[n - 1] = counts[n - 1]
            .checked_sub(1)
            .ok_or_else(|| Error::config("grid too small for stencil"))?;
        if counts.iter().any(|&c| c < 4) {
            return Err(Error::config("grid too small for stencil"));
        }
        Ok(HalfGrid {
            dim: self.dim,
            h: self.h,
            origin,
            counts,
        })
    }
}

/// Tensor rank of a grid field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
    /// Symmetric 2-tensor, upper triangle stored row by row.
    SymMatrix,
    /// Full 3-tensor `T_{ij,k}` with index `(i·n + j)·n + k`.
    Three,
}

impl Rank {
    pub fn components(self, n: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => n,
            Rank::SymMatrix => n * (n + 1) / 2,
            Rank::Three => n * n * n,
        }
    }
}

/// Packed position of `(i, j)` in an upper-triangle symmetric store.
pub fn sym_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Samples of a tensor field on a [`HalfGrid`], stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    grid: HalfGrid,
    rank: Rank,
    data: Vec<f64>,
}

impl TensorField {
    pub fn zeros(grid: HalfGrid, rank: Rank) -> Self {
        let len = grid.len() * rank.components(grid.dim().n);
        TensorField {
            grid,
            rank,
            data: vec![0.0; len],
        }
    }

    /// Samples `f(y, out)` at every node; `out` holds one slot per component.
    pub fn from_fn(grid: HalfGrid, rank: Rank, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut field = Self::zeros(grid, rank);
        let nc = field.components();
        let np = field.grid.len();
        let mut out = vec![0.0; nc];
        for p in 0..np {
            let y = field.grid.point(p);
            out.iter_mut().for_each(|v| *v = 0.0);
            f(&y, &mut out);
            for (c, v) in out.iter().enumerate() {
                field.data[c * np + p] = *v;
            }
        }
        field
    }

    /// Parallel [`TensorField::from_fn`]; the result does not depend on the thread count.
    pub fn from_fn_par(grid: HalfGrid, rank: Rank, f: impl Fn(&[f64], &mut [f64]) + Sync) -> Self {
        let nc = rank.components(grid.dim().n);
        let np = grid.len();
        let mut nodes = vec![0.0; np * nc];
        nodes.par_chunks_mut(nc).enumerate().for_each(|(p, out)| {
            f(&grid.point(p), out);
        });
        let mut field = Self::zeros(grid, rank);
        for p in 0..np {
            for c in 0..nc {
                field.data[c * np + p] = nodes[p * nc + c];
            }
        }
        field
    }

    pub fn grid(&self) -> &HalfGrid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn components(&self) -> usize {
        self.rank.components(self.grid.dim().n)
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let np = self.grid.len();
        &self.data[c * np..(c + 1) * np]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let np = self.grid.len();
        &mut self.data[c * np..(c + 1) * np]
    }

    /// Value of component `c` at node `p`.
    pub fn at(&self, c: usize, p: usize) -> f64 {
        self.data[c * self.grid.len() + p]
    }

    /// Symmetric component `(i, j)` at node `p`.
    pub fn sym(&self, i: usize, j: usize, p: usize) -> f64 {
        debug_assert_eq!(self.rank, Rank::SymMatrix);
        self.at(sym_index(self.grid.dim().n, i, j), p)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One-dimensional stencil: offsets and weights (already divided by `h^order`).
fn stencil(order: usize, at_boundary: bool, h: f64) -> Vec<(isize, f64)> {
    match (order, at_boundary) {
        (0, _) => vec![(0, 1.0)],
        (1, false) => vec![(-1, -0.5 / h), (1, 0.5 / h)],
        (1, true) => vec![(0, -1.5 / h), (1, 2.0 / h), (2, -0.5 / h)],
        (2, false) => {
            let c = 1.0 / (h * h);
            vec![(-1, c), (0, -2.0 * c), (1, c)]
        }
        (2, true) => {
            let c = 1.0 / (h * h);
            vec![(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)]
        }
        _ => unreachable!("derivative order checked by caller"),
    }
}

/// Finite-difference partial derivative `∂^α` of every component of `field`.
///
/// Centered second-order stencils in the interior and second-order one-sided
/// stencils on `y^n = 0`. The result lives on [`HalfGrid::cropped`].
pub fn fd_derivatives(field: &TensorField, alpha: &[usize]) -> Result<TensorField> {
    let grid = field.grid();
    let n = grid.dim().n;
    if alpha.len() != n {
        return Err(Error::config(format!("multi-index has length {}, expected {n}", alpha.len())));
    }
    if alpha.iter().sum::<usize>() > 2 {
        return Err(Error::config("finite differences support total order <= 2"));
    }
    let out_grid = grid.cropped()?;
    let strides = grid.strides();
    let h = grid.spacing();
    let boundary_grid = grid.origin()[n - 1] == 0.0;

    // Tensor-product stencils, one for nodes off the boundary and one on it.
    let build = |at_boundary: bool| -> Vec<(isize, f64)> {
        let mut acc: Vec<(isize, f64)> = vec![(0, 1.0)];
        for (i, &a) in alpha.iter().enumerate() {
            if a == 0 {
                continue;
            }
            let s = stencil(a, at_boundary && i == n - 1, h);
            let mut next = Vec::with_capacity(acc.len() * s.len());
            for &(off, w) in &acc {
                for &(o, v) in &s {
                    next.push((off + o * strides[i] as isize, w * v));
                }
            }
            acc = next;
        }
        acc
    };
    let interior = build(false);
    let boundary = build(true);

    let nc = field.components();
    let mut out = TensorField::zeros(out_grid.clone(), field.rank());
    let np_out = out_grid.len();
    let mut src_idx = vec![0usize; n];
    for p in 0..np_out {
        let idx = out_grid.multi_index(p);
        for i in 0..n - 1 {
            src_idx[i] = idx[i] + 1;
        }
        src_idx[n - 1] = idx[n - 1];
        let base = grid.linear_index(&src_idx) as isize;
        let st = if boundary_grid && idx[n - 1] == 0 { &boundary } else { &interior };
        for c in 0..nc {
            let src = field.component(c);
            let v: f64 = st.iter().map(|&(off, w)| w * src[(base + off) as usize]).sum();
            out.data[c * np_out + p] = v;
        }
    }
    Ok(out)
}

/// `α = e_i` (+ `e_j`) as a multi-index of length `n`.
pub fn multi_index(n: usize, axes: &[usize]) -> Vec<usize> {
    let mut a = vec![0; n];
    for &i in axes {
        a[i] += 1;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3(h: f64) -> HalfGrid {
        HalfGrid::new(Dim::new(3).unwrap(), h, 1.0).unwrap()
    }

    #[test]
    fn shapes_and_indexing() {
        let g = grid3(0.1);
        assert_eq!(g.counts(), &[21, 21, 11]);
        let p = g.locate(&[0.3, -0.5, 0.2]).unwrap();
        let y = g.point(p);
        assert!((y[0] - 0.3).abs() < 1e-12 && (y[1] + 0.5).abs() < 1e-12 && (y[2] - 0.2).abs() < 1e-12);
        assert!(g.on_boundary(g.locate(&[0.0, 0.0, 0.0]).unwrap()));
        let c = g.cropped().unwrap();
        assert_eq!(c.counts(), &[19, 19, 10]);
        assert!((c.origin()[0] + 0.9).abs() < 1e-12 && c.origin()[2] == 0.0);
        assert_eq!(sym_index(3, 2, 1), sym_index(3, 1, 2));
        assert_eq!(sym_index(3, 2, 2), 5);
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            HalfGrid::new(Dim::new(3).unwrap(), 0.25, 1.0),
            Err(Error::Config(_))
        ));
        assert!(HalfGrid::new(Dim::new(8).unwrap(), 0.1, 1.0).is_err());
    }

    #[test]
    fn exact_on_quadratics() {
        let g = grid3(0.1);
        let f = TensorField::from_fn(g.clone(), Rank::Scalar, |y, o| o[0] = y[0]);
        let d = fd_derivatives(&f, &[1, 0, 0]).unwrap();
        assert!(d.component(0).iter().all(|v| (v - 1.0).abs() < 1e-12));

        let r2 = TensorField::from_fn(g.clone(), Rank::Scalar, |y, o| o[0] = y.iter().map(|v| v * v).sum());
        let mut lap = vec![0.0; g.cropped().unwrap().len()];
        for i in 0..3 {
            let d = fd_derivatives(&r2, &multi_index(3, &[i, i])).unwrap();
            lap.iter_mut().zip(d.component(0)).for_each(|(l, v)| *l += v);
        }
        assert!(lap.iter().all(|v| (v - 6.0).abs() < 1e-9));

        let yn2 = TensorField::from_fn(g.clone(), Rank::Scalar, |y, o| o[0] = y[2] * y[2]);
        let d = fd_derivatives(&yn2, &[0, 0, 1]).unwrap();
        let cg = d.grid().clone();
        for p in 0..cg.len() {
            let y = cg.point(p);
            assert!((d.at(0, p) - 2.0 * y[2]).abs() < 1e-11);
        }
    }

    #[test]
    fn mixed_quadratic() {
        let g = grid3(0.1);
        let f = TensorField::from_fn(g, Rank::Vector, |y, o| {
            o[0] = y[0] * y[2];
            o[1] = y[1] * y[1] - y[2] * y[2];
            o[2] = 3.0 * y[0] * y[1];
        });
        let d = fd_derivatives(&f, &[1, 0, 1]).unwrap();
        assert!(d.component(0).iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(d.component(1).iter().all(|v| v.abs() < 1e-10));
        let d = fd_derivatives(&f, &[0, 0, 2]).unwrap();
        assert!(d.component(1).iter().all(|v| (v + 2.0).abs() < 1e-9));
    }
}

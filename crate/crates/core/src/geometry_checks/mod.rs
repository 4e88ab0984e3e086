//! Conformal Killing algebra around the bubble and numerical checks of the
//! linearized curvature identities.
//!
//! Every identity is available in two modes. The analytic mode evaluates all
//! derivatives exactly from polynomial and bubble jets and should vanish to
//! roundoff. The finite-difference mode samples fields on a [`HalfGrid`],
//! differentiates them with second-order stencils, and is judged by its
//! observed convergence order on a refinement ladder. Residuals are divided
//! by `W²` at each probe so that tolerances do not depend on `ε`.

mod fields;
mod pointwise;
mod suite;

use serde::Serialize;

pub use fields::{AdmissibleVectorField, PerturbationTensor, ADMISSIBLE_TOL};
pub use pointwise::{einstein_residual, HInput, LocalJets, PsiMode};
pub use suite::{run_identity, CaseResult, Identity, IdentityReport, LadderResult, SuiteOptions, BUBBLE_TOL, MAX_SUITE_DIM};

use crate::error::{Error, Result};
use crate::halfspace::{Bubble, Dim};
use crate::numerics::grid::{fd_derivatives, multi_index, sym_index, HalfGrid, Rank, TensorField};
use crate::numerics::order::Convergence;
use pointwise::{xi_generic, XiInputs};

/// Analytic residuals must lie below this.
pub const ANALYTIC_TOL: f64 = 1e-8;
/// Accepted band for the observed finite-difference order.
pub const ORDER_BAND: (f64, f64) = (1.8, 2.2);
/// Hypothesis residuals (e.g. `T` divergence condition) are accepted up to this.
pub const PRECONDITION_TOL: f64 = 1e-8;

/// Refinement ladder `h0, h0/2, …` on the box `[−L, L]^{n−1} × [0, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ladder {
    pub h0: f64,
    pub levels: usize,
    pub extent: f64,
}

impl Default for Ladder {
    fn default() -> Self {
        Ladder {
            h0: 0.1,
            levels: 3,
            extent: 1.0,
        }
    }
}

impl Ladder {
    pub fn spacings(&self) -> Vec<f64> {
        (0..self.levels).map(|k| self.h0 / f64::powi(2.0, k as i32)).collect()
    }

    pub fn grid(&self, dim: Dim, level: usize) -> Result<HalfGrid> {
        HalfGrid::new(dim, self.spacings()[level], self.extent)
    }

    fn check(&self) -> Result<()> {
        if self.levels < 2 {
            return Err(Error::config("a refinement ladder needs at least two levels"));
        }
        Ok(())
    }

    /// Nodes of the coarsest lattice with `|y^a| ≤ 0.8L` and, in the
    /// interior case, `0.2L ≤ y^n ≤ 0.8L`; boundary probes have `y^n = 0`.
    pub fn probes(&self, dim: Dim, interior: bool) -> Vec<Vec<f64>> {
        let n = dim.n;
        let k_lat = (0.8 * self.extent / self.h0 + 1e-9).floor() as i64;
        let lateral: Vec<f64> = (-k_lat..=k_lat).map(|k| k as f64 * self.h0).collect();
        let normal: Vec<f64> = if interior {
            let lo = (0.2 * self.extent / self.h0 - 1e-9).ceil() as i64;
            let hi = (0.8 * self.extent / self.h0 + 1e-9).floor() as i64;
            (lo..=hi).map(|k| k as f64 * self.h0).collect()
        } else {
            vec![0.0]
        };
        let mut out = vec![Vec::with_capacity(n)];
        for axis in 0..n {
            let vals = if axis == n - 1 { &normal } else { &lateral };
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// `S`, `T = H − S` and `ψ` sampled on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KillingPair {
    pub s: TensorField,
    pub t: TensorField,
    pub psi: TensorField,
}

fn check_dims(v: &AdmissibleVectorField, bubble: &Bubble) -> Result<()> {
    if v.dim() != bubble.dim {
        return Err(Error::domain(format!(
            "vector field lives in dimension {} but the bubble in {}",
            v.dim().n,
            bubble.dim.n
        )));
    }
    Ok(())
}

fn h_dim_check(hin: HInput, dim: Dim) -> Result<()> {
    if let HInput::Tensor(t) = hin {
        if t.dim() != dim {
            return Err(Error::domain("perturbation tensor has the wrong dimension"));
        }
    }
    Ok(())
}

/// Conformal Killing tensor `S_ij = ∂_iV_j + ∂_jV_i − (2/n) div V δ_ij` on `grid`.
pub fn conformal_killing(v: &AdmissibleVectorField, grid: &HalfGrid) -> Result<TensorField> {
    let n = grid.dim().n;
    if v.dim() != grid.dim() {
        return Err(Error::domain("vector field and grid dimensions differ"));
    }
    Ok(TensorField::from_fn_par(grid.clone(), Rank::SymMatrix, |y, out| {
        let j = v.jet(y, 1);
        let div: f64 = (0..n).map(|m| j.d1[m * n + m]).sum();
        for i in 0..n {
            for k in i..n {
                let d = if i == k { 2.0 * div / n as f64 } else { 0.0 };
                out[sym_index(n, i, k)] = j.d1[k * n + i] + j.d1[i * n + k] - d;
            }
        }
    }))
}

/// Correction term `ψ` on `grid`.
pub fn correction_psi(
    v: &AdmissibleVectorField,
    bubble: &Bubble,
    grid: &HalfGrid,
    mode: PsiMode,
) -> Result<TensorField> {
    check_dims(v, bubble)?;
    let n = bubble.dim.n;
    let c0 = (n as f64 - 2.0) / (2.0 * n as f64);
    Ok(TensorField::from_fn_par(grid.clone(), Rank::Scalar, |y, out| {
        if mode == PsiMode::Zero {
            return;
        }
        let w = bubble.jet(y, 1);
        let j = v.jet(y, 1);
        let div: f64 = (0..n).map(|m| j.d1[m * n + m]).sum();
        out[0] = (0..n).map(|k| w.grad[k] * j.value[k]).sum::<f64>() + c0 * w.value * div;
    }))
}

/// `S`, `T` and `ψ` on one grid.
pub fn killing_pair(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    grid: &HalfGrid,
    mode: PsiMode,
) -> Result<KillingPair> {
    check_dims(v, bubble)?;
    h_dim_check(hin, bubble.dim)?;
    let n = bubble.dim.n;
    let s = conformal_killing(v, grid)?;
    let t = match hin {
        HInput::KillingOfV => TensorField::zeros(grid.clone(), Rank::SymMatrix),
        HInput::Tensor(h) => {
            let mut t = TensorField::from_fn_par(grid.clone(), Rank::SymMatrix, |y, out| {
                let j = h.jet(y, 0);
                for i in 0..n {
                    for k in i..n {
                        out[sym_index(n, i, k)] = j.value[i * n + k];
                    }
                }
            });
            for c in 0..t.components() {
                let sc = s.component(c).to_vec();
                for (x, sv) in t.component_mut(c).iter_mut().zip(sc) {
                    *x -= sv;
                }
            }
            t
        }
    };
    let psi = correction_psi(v, bubble, grid, mode)?;
    Ok(KillingPair { s, t, psi })
}

/// All first derivatives `∂_k` of a field, indexed by `k`.
fn gradients(field: &TensorField) -> Result<Vec<TensorField>> {
    let n = field.grid().dim().n;
    (0..n).map(|k| fd_derivatives(field, &multi_index(n, &[k]))).collect()
}

/// `Q_{ij,k}` from a sampled trace-free `T`, with finite differences on `T`.
/// The result lives on the cropped grid.
pub fn q_tensor(t: &TensorField, bubble: &Bubble) -> Result<TensorField> {
    if t.rank() != Rank::SymMatrix || t.grid().dim() != bubble.dim {
        return Err(Error::domain("q_tensor expects a symmetric 2-tensor in the bubble's dimension"));
    }
    let n = bubble.dim.n;
    let c = 2.0 / (n as f64 - 2.0);
    let dt = gradients(t)?;
    let out_grid = dt[0].grid().clone();
    let src = t.grid();
    let mut q = TensorField::zeros(out_grid.clone(), Rank::Three);
    for p in 0..out_grid.len() {
        let y = out_grid.point(p);
        let ps = src.locate(&y).expect("cropped grid nodes belong to the source grid");
        let w = bubble.jet(&y, 1);
        let tv = |i: usize, j: usize| t.sym(i, j, ps);
        for i in 0..n {
            for j in 0..n {
                let gi: f64 = (0..n).map(|l| w.grad[l] * tv(i, l)).sum();
                let gj: f64 = (0..n).map(|l| w.grad[l] * tv(j, l)).sum();
                for k in 0..n {
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let djk = if j == k { 1.0 } else { 0.0 };
                    let val = w.value * dt[k].sym(i, j, p)
                        + c * (gi * djk + gj * dik - w.grad[i] * tv(j, k) - w.grad[j] * tv(i, k));
                    q.component_mut((i * n + j) * n + k)[p] = val;
                }
            }
        }
    }
    Ok(q)
}

/// The vector field `ξ` from sampled `H`, `S` and `ψ`, with finite
/// differences for their first derivatives. The result lives on the cropped grid.
pub fn xi_field(h: &TensorField, s: &TensorField, psi: &TensorField, bubble: &Bubble) -> Result<TensorField> {
    if h.grid() != s.grid() || h.grid() != psi.grid() {
        return Err(Error::config("xi_field inputs must share one grid"));
    }
    if h.rank() != Rank::SymMatrix || s.rank() != Rank::SymMatrix || psi.rank() != Rank::Scalar {
        return Err(Error::domain("xi_field expects H, S symmetric and ψ scalar"));
    }
    let n = bubble.dim.n;
    if h.grid().dim() != bubble.dim {
        return Err(Error::domain("grid and bubble dimensions differ"));
    }
    let dh = gradients(h)?;
    let ds = gradients(s)?;
    let dpsi = gradients(psi)?;
    let out_grid = dh[0].grid().clone();
    let src = h.grid();
    let mut xi = TensorField::zeros(out_grid.clone(), Rank::Vector);
    for p in 0..out_grid.len() {
        let y = out_grid.point(p);
        let ps = src.locate(&y).expect("cropped grid nodes belong to the source grid");
        let w = bubble.jet(&y, 1);
        let full = |f: &TensorField, at: usize| -> Vec<f64> {
            (0..n * n).map(|ij| f.sym(ij / n, ij % n, at)).collect()
        };
        let deriv = |d: &[TensorField]| -> Vec<f64> {
            (0..n * n * n).map(|idx| d[idx % n].sym(idx / (n * n), (idx / n) % n, p)).collect()
        };
        let inputs = XiInputs {
            n,
            w: w.value,
            dw: w.grad.clone(),
            psi: psi.at(0, ps),
            dpsi: (0..n).map(|k| dpsi[k].at(0, p)).collect(),
            h: full(h, ps),
            dh: deriv(&dh),
            s: full(s, ps),
            ds: deriv(&ds),
        };
        for (i, v) in xi_generic(&inputs).into_iter().enumerate() {
            xi.component_mut(i)[p] = v;
        }
    }
    Ok(xi)
}

/// Max over `points` of the relative Einstein-identity residual.
pub fn verify_einstein_identity(bubble: &Bubble, points: &[Vec<f64>]) -> f64 {
    points.iter().map(|y| einstein_residual(bubble, y)).fold(0.0, f64::max)
}

fn local(bubble: &Bubble, v: &AdmissibleVectorField, hin: HInput, y: &[f64]) -> LocalJets {
    LocalJets::new(bubble, v, hin, PsiMode::Formula, y)
}

fn max_rel(points: &[Vec<f64>], f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    points.par_iter().map(|y| f(y)).reduce(|| 0.0, f64::max)
}

/// Fully analytic residual of the linearized scalar-curvature equation.
pub fn linearized_scalar_residual(v: &AdmissibleVectorField, bubble: &Bubble, points: &[Vec<f64>]) -> Result<f64> {
    check_dims(v, bubble)?;
    Ok(max_rel(points, |y| {
        let j = local(bubble, v, HInput::KillingOfV, y);
        let (l, r) = j.linearized_scalar();
        (l - r).abs() / j.w.value.powi(2)
    }))
}

/// Fully analytic residual of the linearized mean-curvature equation at boundary points.
pub fn linearized_mean_residual(v: &AdmissibleVectorField, bubble: &Bubble, points: &[Vec<f64>]) -> Result<f64> {
    check_dims(v, bubble)?;
    boundary_points_only(points)?;
    Ok(max_rel(points, |y| {
        let j = local(bubble, v, HInput::KillingOfV, y);
        let (l, r) = j.linearized_mean();
        (l - r).abs() / j.w.value.powi(2)
    }))
}

fn boundary_points_only(points: &[Vec<f64>]) -> Result<()> {
    if points.iter().any(|y| y.last().copied() != Some(0.0)) {
        return Err(Error::domain("boundary identities need points with y^n = 0"));
    }
    Ok(())
}

/// Residuals of the boundary relations for `S` and `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StBoundaryReport {
    /// `max |S_an|`.
    pub s_an: f64,
    /// `max |T_an|`.
    pub t_an: f64,
    /// `∂_n S_nn + (2n/(n−2)) W⁻¹∂_nW S_nn`, one entry per ladder level (or one analytic value).
    pub normal_nn: Convergence,
    /// `∂_n S_ab + (1/(n−1)) ∂_n S_nn δ_ab`.
    pub normal_ab: Convergence,
}

impl StBoundaryReport {
    pub fn passes(&self) -> bool {
        self.s_an <= ANALYTIC_TOL
            && self.t_an <= ANALYTIC_TOL
            && passes_band(&self.normal_nn)
            && passes_band(&self.normal_ab)
    }
}

/// Either every residual is below [`ANALYTIC_TOL`] or every order lies in [`ORDER_BAND`].
pub fn passes_band(c: &Convergence) -> bool {
    c.residuals.iter().all(|r| *r <= ANALYTIC_TOL) || c.passes(ORDER_BAND.0, ORDER_BAND.1)
}

/// Analytic residuals of the boundary relations: `[S_an, T_an, nn-relation, ab-relation]`.
pub fn st_boundary_residuals(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    points: &[Vec<f64>],
) -> Result<[f64; 4]> {
    check_dims(v, bubble)?;
    h_dim_check(hin, bubble.dim)?;
    boundary_points_only(points)?;
    let mut worst = [0.0f64; 4];
    for y in points {
        let j = local(bubble, v, hin, y);
        let r = j.st_boundary();
        let w2 = j.w.value.powi(2);
        for k in 0..4 {
            worst[k] = worst[k].max(r[k] / w2);
        }
    }
    Ok(worst)
}

/// Evaluates `level_residual(grid, probes)` over the ladder.
fn ladder_run(
    ladder: &Ladder,
    dim: Dim,
    interior: bool,
    level_residual: impl Fn(&HalfGrid, &[Vec<f64>]) -> Result<f64>,
) -> Result<Convergence> {
    ladder.check()?;
    let probes = ladder.probes(dim, interior);
    let mut residuals = Vec::with_capacity(ladder.levels);
    for level in 0..ladder.levels {
        let grid = ladder.grid(dim, level)?;
        residuals.push(level_residual(&grid, &probes)?);
    }
    Ok(Convergence::from_ladder(ladder.spacings(), residuals))
}

/// Node of a derivative field (on the cropped grid) at physical point `y`.
fn node(field: &TensorField, y: &[f64]) -> Result<usize> {
    field
        .grid()
        .locate(y)
        .ok_or_else(|| Error::config(format!("probe {y:?} is not a node of the derivative grid")))
}

/// Linearized scalar-curvature equation with `Δψ`, `∂_i∂_jS_ij` and
/// `∂_i(∂_jW S_ij)` by finite differences.
pub fn verify_linearized_scalar(v: &AdmissibleVectorField, bubble: &Bubble, ladder: &Ladder) -> Result<Convergence> {
    check_dims(v, bubble)?;
    let dim = bubble.dim;
    let n = dim.n;
    let nf = dim.nf();
    ladder_run(ladder, dim, true, |grid, probes| {
        let psi = correction_psi(v, bubble, grid, PsiMode::Formula)?;
        let s = conformal_killing(v, grid)?;
        let flux = TensorField::from_fn_par(grid.clone(), Rank::Vector, |y, out| {
            let w = bubble.jet(y, 1);
            let j = v.jet(y, 1);
            let div: f64 = (0..n).map(|m| j.d1[m * n + m]).sum();
            for i in 0..n {
                out[i] = (0..n)
                    .map(|k| {
                        let d = if i == k { 2.0 * div / nf } else { 0.0 };
                        w.grad[k] * (j.d1[k * n + i] + j.d1[i * n + k] - d)
                    })
                    .sum();
            }
        });
        let lap: Vec<TensorField> =
            (0..n).map(|i| fd_derivatives(&psi, &multi_index(n, &[i, i]))).collect::<Result<_>>()?;
        let mut dds = Vec::with_capacity(n * n);
        for i in 0..n {
            for k in 0..n {
                dds.push(fd_derivatives(&s, &multi_index(n, &[i, k]))?);
            }
        }
        let dflux = gradients(&flux)?;
        let mut worst = 0.0f64;
        for y in probes {
            let p = node(&lap[0], y)?;
            let ps = grid.locate(y).expect("probe lies on the grid");
            let w = bubble.value(y);
            let lap_psi: f64 = (0..n).map(|i| lap[i].at(0, p)).sum();
            let lhs = lap_psi + nf * (nf + 2.0) * w.powf(4.0 / (nf - 2.0)) * psi.at(0, ps);
            let dd: f64 = (0..n)
                .flat_map(|i| (0..n).map(move |k| (i, k)))
                .map(|(i, k)| dds[i * n + k].sym(i, k, p))
                .sum();
            let div_flux: f64 = (0..n).map(|i| dflux[i].at(i, p)).sum();
            let rhs = (nf - 2.0) / (4.0 * (nf - 1.0)) * w * dd + div_flux;
            worst = worst.max((lhs - rhs).abs() / (w * w));
        }
        Ok(worst)
    })
}

/// Linearized mean-curvature equation with `∂_nψ` and `∂_nS_nn` by one-sided differences.
pub fn verify_linearized_mean(v: &AdmissibleVectorField, bubble: &Bubble, ladder: &Ladder) -> Result<Convergence> {
    check_dims(v, bubble)?;
    let dim = bubble.dim;
    let n = dim.n;
    let nf = dim.nf();
    let nn = sym_index(n, n - 1, n - 1);
    ladder_run(ladder, dim, false, |grid, probes| {
        let psi = correction_psi(v, bubble, grid, PsiMode::Formula)?;
        let s = conformal_killing(v, grid)?;
        let en = multi_index(n, &[n - 1]);
        let dpsi = fd_derivatives(&psi, &en)?;
        let ds = fd_derivatives(&s, &en)?;
        let mut worst = 0.0f64;
        for y in probes {
            let p = node(&dpsi, y)?;
            let ps = grid.locate(y).expect("probe lies on the grid");
            let w = bubble.jet(y, 1);
            let dnw = w.grad[n - 1];
            let lhs = dpsi.at(0, p) - nf / (nf - 2.0) * dnw / w.value * psi.at(0, ps);
            let rhs = 0.5 * dnw * s.at(nn, ps) + (nf - 2.0) / (4.0 * (nf - 1.0)) * w.value * ds.at(nn, p);
            worst = worst.max((lhs - rhs).abs() / (w.value * w.value));
        }
        Ok(worst)
    })
}

/// Boundary relations for `S` and `T` with normal derivatives by one-sided differences.
pub fn verify_st_boundary(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    ladder: &Ladder,
) -> Result<StBoundaryReport> {
    check_dims(v, bubble)?;
    h_dim_check(hin, bubble.dim)?;
    let dim = bubble.dim;
    let n = dim.n;
    let nf = dim.nf();
    let probes = ladder.probes(dim, false);
    let [s_an, t_an, _, _] = st_boundary_residuals(v, hin, bubble, &probes)?;
    let mut nn_res = Vec::new();
    let mut ab_res = Vec::new();
    ladder.check()?;
    for level in 0..ladder.levels {
        let grid = ladder.grid(dim, level)?;
        let s = conformal_killing(v, &grid)?;
        let ds = fd_derivatives(&s, &multi_index(n, &[n - 1]))?;
        let nn = sym_index(n, n - 1, n - 1);
        let (mut r_nn, mut r_ab) = (0.0f64, 0.0f64);
        for y in &probes {
            let p = node(&ds, y)?;
            let ps = grid.locate(y).expect("probe lies on the grid");
            let w = bubble.jet(y, 1);
            let w2 = w.value * w.value;
            let dn_snn = ds.at(nn, p);
            let rel = dn_snn + 2.0 * nf / (nf - 2.0) * w.grad[n - 1] / w.value * s.at(nn, ps);
            r_nn = r_nn.max(rel.abs() / w2);
            for a in 0..n - 1 {
                for b in a..n - 1 {
                    let d = if a == b { 1.0 } else { 0.0 };
                    let rel = ds.sym(a, b, p) + dn_snn * d / (nf - 1.0);
                    r_ab = r_ab.max(rel.abs() / w2);
                }
            }
        }
        nn_res.push(r_nn);
        ab_res.push(r_ab);
    }
    Ok(StBoundaryReport {
        s_an,
        t_an,
        normal_nn: Convergence::from_ladder(ladder.spacings(), nn_res),
        normal_ab: Convergence::from_ladder(ladder.spacings(), ab_res),
    })
}

fn check_divergence_condition(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    points: &[Vec<f64>],
) -> Result<()> {
    if matches!(hin, HInput::KillingOfV) {
        return Ok(());
    }
    let worst = max_rel(points, |y| {
        let j = local(bubble, v, hin, y);
        let w2 = j.w.value.powi(2);
        j.divergence_condition().iter().fold(0.0, |m, r| m.max(r.abs() / w2))
    });
    if worst > PRECONDITION_TOL {
        return Err(Error::Precondition {
            what: "T = H − S must satisfy W ∂_j T_ij + (2n/(n−2)) ∂_j W T_ij = 0".into(),
            residual: worst,
        });
    }
    Ok(())
}

/// Fully analytic residual of the second-variation identity, `div ξ` by exact differentiation.
pub fn second_variation_residual(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    points: &[Vec<f64>],
) -> Result<f64> {
    check_dims(v, bubble)?;
    h_dim_check(hin, bubble.dim)?;
    check_divergence_condition(v, hin, bubble, points)?;
    Ok(max_rel(points, |y| {
        let j = local(bubble, v, hin, y);
        let r = j.second_variation_lhs() - j.second_variation_rhs_local() - j.div_xi();
        r.abs() / j.w.value.powi(2)
    }))
}

/// Second-variation identity with `div ξ` by finite differences of the sampled `ξ`.
///
/// `T = H − S` must satisfy the divergence condition; otherwise a
/// precondition error carries the worst residual.
pub fn verify_second_variation(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    ladder: &Ladder,
) -> Result<Convergence> {
    check_dims(v, bubble)?;
    h_dim_check(hin, bubble.dim)?;
    let dim = bubble.dim;
    let n = dim.n;
    let probes = ladder.probes(dim, true);
    check_divergence_condition(v, hin, bubble, &probes)?;
    let local_parts: Vec<(f64, f64)> = probes
        .iter()
        .map(|y| {
            let j = local(bubble, v, hin, y);
            (j.second_variation_lhs() - j.second_variation_rhs_local(), j.w.value.powi(2))
        })
        .collect();
    ladder_run(ladder, dim, true, |grid, probes| {
        let xi = TensorField::from_fn_par(grid.clone(), Rank::Vector, |y, out| {
            out.copy_from_slice(&local(bubble, v, hin, y).xi());
        });
        let dxi = gradients(&xi)?;
        let mut worst = 0.0f64;
        for (y, (part, w2)) in probes.iter().zip(&local_parts) {
            let p = node(&dxi[0], y)?;
            let div: f64 = (0..n).map(|i| dxi[i].at(i, p)).sum();
            worst = worst.max((part - div).abs() / w2);
        }
        Ok(worst)
    })
}

/// Max relative gap between `ξ_n` and its closed boundary form.
pub fn xi_boundary_residual(
    v: &AdmissibleVectorField,
    hin: HInput,
    bubble: &Bubble,
    points: &[Vec<f64>],
) -> Result<f64> {
    check_dims(v, bubble)?;
    h_dim_check(hin, bubble.dim)?;
    boundary_points_only(points)?;
    let n = bubble.dim.n;
    Ok(max_rel(points, |y| {
        let j = local(bubble, v, hin, y);
        (j.xi()[n - 1] - j.xi_normal_boundary()).abs() / j.w.value.powi(2)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_lie_on_every_level() {
        let dim = Dim::new(3).unwrap();
        let ladder = Ladder::default();
        let probes = ladder.probes(dim, true);
        assert_eq!(probes.len(), 17 * 17 * 7);
        for level in 0..ladder.levels {
            let g = ladder.grid(dim, level).unwrap().cropped().unwrap();
            assert!(probes.iter().all(|y| g.locate(y).is_some()));
        }
        assert_eq!(ladder.probes(dim, false).len(), 17 * 17);
    }
}

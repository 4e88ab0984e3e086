//! The flat half-space `ℝⁿ₊ = {y^n ≥ 0}`: spherical-cap parametrization of
//! the extremal metrics, the invariant `Y_{a,b}(ℝⁿ₊, ℝⁿ⁻¹)`, and the bubble
//! `W_ε(y) = (ε / (ε² + |y − T_c ε e_n|²))^{(n−2)/2}`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::quadrature::{adaptive_simpson, GaussLegendre};
use crate::numerics::HalfGrid;

/// Ambient dimension `n` together with `d = ⌊(n−2)/2⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Dim {
    pub n: usize,
    pub d: usize,
}

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("n must be ≥ 3, got {n}")));
        }
        Ok(Dim { n, d: (n - 2) / 2 })
    }

    pub fn nf(self) -> f64 {
        self.n as f64
    }

    /// `(n+2)/(n−2)`.
    pub fn critical_exponent(self) -> f64 {
        (self.nf() + 2.0) / (self.nf() - 2.0)
    }
}

/// Normalization weights `(a, b)`: `a` on the volume term, `b` on the boundary term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Weights {
    pub a: f64,
    pub b: f64,
}

impl Weights {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
            return Err(Error::domain(format!("weights must be finite and nonnegative, got a={a}, b={b}")));
        }
        if a == 0.0 && b == 0.0 {
            return Err(Error::domain("weights a and b cannot both vanish"));
        }
        Ok(Weights { a, b })
    }
}

/// Measure of the unit sphere `S^m`, `2π^{(m+1)/2} / Γ((m+1)/2)`.
pub fn sphere_volume(m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::domain(format!("sphere dimension must be ≥ 1, got {m}")));
    }
    let s = (m + 1) as f64 / 2.0;
    Ok(2.0 * PI.powf(s) / gamma_half_integer(m + 1))
}

/// `Γ(k/2)` for a positive integer `k`.
fn gamma_half_integer(k: usize) -> f64 {
    // Γ(1) = 1, Γ(1/2) = √π, Γ(x + 1) = xΓ(x).
    let (mut x, mut g) = if k % 2 == 0 { (1.0, 1.0) } else { (0.5, PI.sqrt()) };
    let target = k as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

fn check_angle(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= FRAC_PI_2) {
        return Err(Error::domain(format!("cap angle must lie in (0, π/2], got {r}")));
    }
    Ok(())
}

/// Relative tolerance used for the quadrature in [`cap_a`].
pub const CAP_QUAD_TOL: f64 = 1e-14;

/// `A(r) = 2^{−n} ω_{n−1} ∫₀^r sin^{n−1}τ dτ`.
pub fn cap_a(r: f64, dim: Dim) -> Result<f64> {
    check_angle(r)?;
    let n = dim.n;
    let integral = adaptive_simpson(|t| t.sin().powi(n as i32 - 1), 0.0, r, CAP_QUAD_TOL);
    Ok(sphere_volume(n - 1)? * integral / 2f64.powi(n as i32))
}

/// `B(r) = 2^{1−n} ω_{n−1} sin^{n−1} r`.
pub fn cap_b(r: f64, dim: Dim) -> Result<f64> {
    check_angle(r)?;
    let n = dim.n as i32;
    Ok(sphere_volume(dim.n - 1)? * r.sin().powi(n - 1) / 2f64.powi(n - 1))
}

/// Cap angle, boundary constant and the invariant for positive weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapSolution {
    pub r: f64,
    #[serde(rename = "T_c")]
    pub t_c: f64,
    #[serde(rename = "A")]
    pub a_cap: f64,
    #[serde(rename = "B")]
    pub b_cap: f64,
    #[serde(rename = "Y")]
    pub y: f64,
}

impl CapSolution {
    /// Relative residual of `−a A^{−2/n} T_c = 2n(n−1) b B^{−1/(n−1)}`.
    pub fn balance_residual(&self, w: Weights, dim: Dim) -> f64 {
        let n = dim.nf();
        let lhs = -w.a * self.a_cap.powf(-2.0 / n) * self.t_c;
        let rhs = 2.0 * n * (n - 1.0) * w.b * self.b_cap.powf(-1.0 / (n - 1.0));
        rel_diff(lhs, rhs)
    }

    /// Relative gap between the volume and boundary expressions for `Y`.
    pub fn formula_gap(&self, w: Weights, dim: Dim) -> f64 {
        let (y1, y2) = two_formulas(self, w, dim);
        rel_diff(y1, y2)
    }
}

fn rel_diff(x: f64, y: f64) -> f64 {
    let s = x.abs().max(y.abs());
    if s == 0.0 {
        0.0
    } else {
        (x - y).abs() / s
    }
}

fn two_formulas(c: &CapSolution, w: Weights, dim: Dim) -> (f64, f64) {
    let n = dim.nf();
    let y1 = 4.0 * n * (n - 1.0) * c.a_cap.powf(2.0 / n) / w.a;
    let y2 = -2.0 * c.t_c * c.b_cap.powf(1.0 / (n - 1.0)) / w.b;
    (y1, y2)
}

/// `f(r) = 2n(n−1) b A^{2/n} B^{−1/(n−1)} − a cot r`, strictly increasing on `(0, π/2)`.
pub fn cap_balance(r: f64, w: Weights, dim: Dim) -> Result<f64> {
    let n = dim.nf();
    let a = cap_a(r, dim)?;
    let b = cap_b(r, dim)?;
    Ok(2.0 * n * (n - 1.0) * w.b * a.powf(2.0 / n) * b.powf(-1.0 / (n - 1.0)) - w.a / r.tan())
}

/// Target for `|f(r)|` at the returned root.
pub const CAP_ROOT_TOL: f64 = 1e-13;

/// Root of [`cap_balance`] for `a, b > 0`.
pub fn solve_cap(w: Weights, dim: Dim) -> Result<CapSolution> {
    if w.a < 0.0 || w.b < 0.0 {
        return Err(Error::domain("weights must be nonnegative"));
    }
    if w.a == 0.0 {
        return Err(Error::EdgeWeight { which: 'a' });
    }
    if w.b == 0.0 {
        return Err(Error::EdgeWeight { which: 'b' });
    }
    let f = |r: f64| cap_balance(r, w, dim);
    let mut hi = FRAC_PI_2;
    let mut lo = FRAC_PI_2 / 2.0;
    while f(lo)? >= 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-150 {
            return Err(Error::Numerical("could not bracket the cap angle".into()));
        }
    }
    // Bisection warm start.
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Safeguarded Newton polish with a central-difference slope.
    let mut r = 0.5 * (lo + hi);
    let mut best = (f64::INFINITY, r);
    for _ in 0..60 {
        let fr = f(r)?;
        if fr.abs() < best.0 {
            best = (fr.abs(), r);
        }
        if fr == 0.0 || best.0 <= 0.1 * CAP_ROOT_TOL {
            break;
        }
        if fr < 0.0 {
            lo = r;
        } else {
            hi = r;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let dr = 1e-6 * r.min(FRAC_PI_2 - r).max(1e-8 * r);
        let slope = (f((r + dr).min(FRAC_PI_2))? - f(r - dr)?) / ((r + dr).min(FRAC_PI_2) - (r - dr));
        let newton = r - fr / slope;
        r = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    for cand in [lo, hi] {
        let fc = f(cand)?.abs();
        if fc < best.0 {
            best = (fc, cand);
        }
    }
    let r = best.1;
    let a_cap = cap_a(r, dim)?;
    let b_cap = cap_b(r, dim)?;
    let t_c = -1.0 / r.tan();
    let mut sol = CapSolution {
        r,
        t_c,
        a_cap,
        b_cap,
        y: 0.0,
    };
    let (y1, y2) = two_formulas(&sol, w, dim);
    if rel_diff(y1, y2) > 1e-10 {
        return Err(Error::Numerical(format!(
            "invariant formulas disagree: {y1} vs {y2}"
        )));
    }
    sol.y = y1;
    Ok(sol)
}

/// Which closed form produced a half-space invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `a, b > 0`: interior root of the cap balance.
    Cap,
    /// `b = 0`: hemisphere, `T_c = 0`.
    MinimalBoundary,
    /// `a = 0`: limit `r → 0`.
    BoundaryOnly,
}

/// `b = 0`: `4n(n−1) a^{−1} A(π/2)^{2/n}`.
fn y_minimal_boundary(a: f64, dim: Dim) -> Result<f64> {
    let n = dim.nf();
    Ok(4.0 * n * (n - 1.0) * cap_a(FRAC_PI_2, dim)?.powf(2.0 / n) / a)
}

/// `a = 0`: `2 b^{−1} (2^{1−n} ω_{n−1})^{1/(n−1)}`.
fn y_boundary_only(b: f64, dim: Dim) -> Result<f64> {
    let n = dim.nf();
    let base = sphere_volume(dim.n - 1)? / 2f64.powi(dim.n as i32 - 1);
    Ok(2.0 * base.powf(1.0 / (n - 1.0)) / b)
}

/// `Y_{a,b}(ℝⁿ₊, ℝⁿ⁻¹)`.
pub fn yamabe_halfspace(w: Weights, dim: Dim) -> Result<f64> {
    let w = Weights::new(w.a, w.b)?;
    if w.b == 0.0 {
        y_minimal_boundary(w.a, dim)
    } else if w.a == 0.0 {
        y_boundary_only(w.b, dim)
    } else {
        Ok(solve_cap(w, dim)?.y)
    }
}

/// Everything known in closed form about the half-space for given weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfspaceSummary {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub branch: Branch,
    /// Absent when `a = 0` (the cap degenerates to a point).
    pub cap: Option<CapSolution>,
    #[serde(rename = "Y")]
    pub y: f64,
    pub balance_residual: Option<f64>,
    pub formula_gap: Option<f64>,
}

pub fn halfspace_summary(w: Weights, dim: Dim) -> Result<HalfspaceSummary> {
    let w = Weights::new(w.a, w.b)?;
    let base = |branch, cap: Option<CapSolution>, y, res: Option<(f64, f64)>| HalfspaceSummary {
        n: dim.n,
        a: w.a,
        b: w.b,
        branch,
        cap,
        y,
        balance_residual: res.map(|r| r.0),
        formula_gap: res.map(|r| r.1),
    };
    if w.b == 0.0 {
        let y = y_minimal_boundary(w.a, dim)?;
        let cap = CapSolution {
            r: FRAC_PI_2,
            t_c: 0.0,
            a_cap: cap_a(FRAC_PI_2, dim)?,
            b_cap: cap_b(FRAC_PI_2, dim)?,
            y,
        };
        Ok(base(Branch::MinimalBoundary, Some(cap), y, None))
    } else if w.a == 0.0 {
        Ok(base(Branch::BoundaryOnly, None, y_boundary_only(w.b, dim)?, None))
    } else {
        let cap = solve_cap(w, dim)?;
        let res = (cap.balance_residual(w, dim), cap.formula_gap(w, dim));
        Ok(base(Branch::Cap, Some(cap), cap.y, Some(res)))
    }
}

/// Boundary constant `T_c` of the extremal bubble; `0` when `b = 0`.
pub fn boundary_constant(w: Weights, dim: Dim) -> Result<f64> {
    let w = Weights::new(w.a, w.b)?;
    if w.b == 0.0 {
        Ok(0.0)
    } else if w.a == 0.0 {
        Err(Error::domain("T_c diverges when a = 0"))
    } else {
        Ok(solve_cap(w, dim)?.t_c)
    }
}

/// The extremal function `W_ε(y) = (ε / (ε² + |y − T_c ε e_n|²))^{(n−2)/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bubble {
    pub eps: f64,
    #[serde(rename = "T_c")]
    pub t_c: f64,
    pub dim: Dim,
}

/// Value and derivatives of a bubble at one point. Index layout is row-major:
/// `hess[i*n + j]`, `third[(i*n + j)*n + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
    pub third: Vec<f64>,
}

impl BubbleJet {
    pub fn laplacian(&self, n: usize) -> f64 {
        (0..n).map(|i| self.hess[i * n + i]).sum()
    }
}

/// `(value, gradient, laplacian)` of a bubble.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub laplacian: f64,
}

impl Bubble {
    pub fn new(eps: f64, t_c: f64, dim: Dim) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::domain(format!("bubble scale must be positive, got {eps}")));
        }
        if !(t_c <= 0.0) || !t_c.is_finite() {
            return Err(Error::domain(format!("T_c must be finite and nonpositive, got {t_c}")));
        }
        Ok(Bubble { eps, t_c, dim })
    }

    /// Bubble whose boundary constant matches the weights.
    pub fn for_weights(w: Weights, dim: Dim, eps: f64) -> Result<Self> {
        Self::new(eps, boundary_constant(w, dim)?, dim)
    }

    fn center_offset(&self, y: &[f64]) -> (Vec<f64>, f64) {
        let n = self.dim.n;
        let mut z = y[..n].to_vec();
        z[n - 1] -= self.t_c * self.eps;
        let phi = self.eps * self.eps + z.iter().map(|v| v * v).sum::<f64>();
        (z, phi)
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        let k = (self.dim.nf() - 2.0) / 2.0;
        let (_, phi) = self.center_offset(y);
        (self.eps / phi).powf(k)
    }

    /// Derivatives up to `order ≤ 3`; unused slots are left empty.
    pub fn jet(&self, y: &[f64], order: usize) -> BubbleJet {
        let n = self.dim.n;
        let k = (self.dim.nf() - 2.0) / 2.0;
        let (z, phi) = self.center_offset(y);
        // W = g(φ) with g = ε^k φ^{−k}, φ = ε² + |z|².
        let g0 = (self.eps / phi).powf(k);
        let g1 = -k * g0 / phi;
        let g2 = -(k + 1.0) * g1 / phi;
        let g3 = -(k + 2.0) * g2 / phi;
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let grad = if order >= 1 {
            z.iter().map(|zi| 2.0 * g1 * zi).collect()
        } else {
            Vec::new()
        };
        let mut hess = Vec::new();
        if order >= 2 {
            hess = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    hess[i * n + j] = 4.0 * g2 * z[i] * z[j] + 2.0 * g1 * delta(i, j);
                }
            }
        }
        let mut third = Vec::new();
        if order >= 3 {
            third = vec![0.0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        third[(i * n + j) * n + l] = 8.0 * g3 * z[i] * z[j] * z[l]
                            + 4.0 * g2 * (delta(i, l) * z[j] + delta(j, l) * z[i] + delta(i, j) * z[l]);
                    }
                }
            }
        }
        BubbleJet {
            value: g0,
            grad,
            hess,
            third,
        }
    }
}

pub fn bubble_eval(bub: &Bubble, y: &[f64]) -> BubbleEval {
    let jet = bub.jet(y, 2);
    let laplacian = jet.laplacian(bub.dim.n);
    BubbleEval {
        value: jet.value,
        gradient: jet.grad,
        laplacian,
    }
}

/// Maximum residuals of the half-space problem for a bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BubblePdeReport {
    /// `max |−ΔW − n(n−2)W^{(n+2)/(n−2)}|` over interior nodes, divided by `max(1, max|ΔW|)`.
    pub interior_residual: f64,
    /// `max |∂_n W − (n−2)T_c W^{n/(n−2)}|` on `y^n = 0`, divided by `max(1, max|∂_n W|)`.
    pub boundary_residual: f64,
}

/// Residuals of the interior equation and of the boundary condition with
/// constant `boundary_t_c`, at every node of `grid`.
pub fn verify_bubble_pde(bub: &Bubble, boundary_t_c: f64, grid: &HalfGrid) -> BubblePdeReport {
    let n = bub.dim.n;
    let nf = bub.dim.nf();
    let (mut int_res, mut int_scale) = (0.0f64, 1.0f64);
    let (mut bdy_res, mut bdy_scale) = (0.0f64, 1.0f64);
    for p in 0..grid.len() {
        let y = grid.point(p);
        let e = bubble_eval(bub, &y);
        if y[n - 1] > 0.0 {
            let rhs = nf * (nf - 2.0) * e.value.powf((nf + 2.0) / (nf - 2.0));
            int_res = int_res.max((-e.laplacian - rhs).abs());
            int_scale = int_scale.max(e.laplacian.abs());
        } else {
            let dn = e.gradient[n - 1];
            let rhs = (nf - 2.0) * boundary_t_c * e.value.powf(nf / (nf - 2.0));
            bdy_res = bdy_res.max((dn - rhs).abs());
            bdy_scale = bdy_scale.max(dn.abs());
        }
    }
    BubblePdeReport {
        interior_residual: int_res / int_scale,
        boundary_residual: bdy_res / bdy_scale,
    }
}

/// Cap angle of a boundary constant: `T_c = −cot r`.
pub fn cap_angle(t_c: f64) -> f64 {
    (1.0f64).atan2(-t_c)
}

/// `∫_{ℝⁿ₊} |∇W_ε|² = n(n−2)A − (n−2)T_c B` at the cap angle of `T_c`.
pub fn bubble_energy(bub: &Bubble) -> Result<f64> {
    let dim = bub.dim;
    let nf = dim.nf();
    let r = cap_angle(bub.t_c);
    Ok(nf * (nf - 2.0) * cap_a(r, dim)? - (nf - 2.0) * bub.t_c * cap_b(r, dim)?)
}

/// Direct quadrature of `∫_{ℝⁿ₊} |∇W_ε|²` in spherical shells about the bubble
/// center, truncated at radius `truncation·ε` with the tail added analytically.
pub fn bubble_energy_quadrature(bub: &Bubble, truncation: f64) -> Result<f64> {
    let dim = bub.dim;
    let n = dim.n;
    let nf = dim.nf();
    let eps = bub.eps;
    let d = -bub.t_c * eps;
    let s_max = truncation * eps.max(d);
    let omega_inner = sphere_volume(n - 2)?;
    let gl = GaussLegendre::new(16);
    let gl_theta = GaussLegendre::new(24);
    // |∇W|² = (n−2)² ε^{n−2} s² / (ε² + s²)^n at distance s from the center.
    let integrand = |s: f64| (nf - 2.0).powi(2) * eps.powi(n as i32 - 2) * s * s / (eps * eps + s * s).powi(n as i32);
    // Measure of {|z| = s, z_n ≥ d}.
    let cap_measure = |s: f64| {
        let theta_max = if d == 0.0 { FRAC_PI_2 } else { (d / s).min(1.0).acos() };
        s.powi(n as i32 - 1) * omega_inner * gl_theta.integrate(0.0, theta_max, |t| t.sin().powi(n as i32 - 2))
    };
    // s = d + u² removes the square-root onset of the cap measure at s = d.
    let u_max = (s_max - d).sqrt();
    let panels = 400usize;
    let mut total = 0.0;
    let grade = |t: f64| u_max * t * t;
    for p in 0..panels {
        let u0 = grade(p as f64 / panels as f64);
        let u1 = grade((p + 1) as f64 / panels as f64);
        total += gl.integrate(u0, u1, |u| {
            let s = d + u * u;
            2.0 * u * integrand(s) * cap_measure(s)
        });
    }
    // Tail: |∇W|² ≈ (n−2)² ε^{n−2} s^{2−2n} over a half-sphere.
    let tail = (nf - 2.0) * eps.powi(n as i32 - 2) * sphere_volume(n - 1)? / 2.0 * s_max.powf(2.0 - nf);
    Ok(total + tail)
}

/// Inverse stereographic lift of the half-space onto the unit sphere `Sⁿ ⊂ ℝ^{n+1}`.
pub fn stereo_lift(y: &[f64], t_c: f64) -> Vec<f64> {
    let n = y.len();
    let mut shifted = y.to_vec();
    shifted[n - 1] -= t_c;
    let t: f64 = shifted.iter().map(|v| v * v).sum();
    let mut xi: Vec<f64> = shifted.iter().map(|v| 2.0 * v / (1.0 + t)).collect();
    xi.push((t - 1.0) / (1.0 + t));
    xi
}

/// Max entry of `JᵀJ − (2/(1+|y−T_c e_n|²))² Id` with a central-difference Jacobian of step `h`.
pub fn stereo_conformal_defect(y: &[f64], t_c: f64, h: f64) -> f64 {
    let n = y.len();
    let mut jac = vec![vec![0.0; n + 1]; n];
    for (i, col) in jac.iter_mut().enumerate() {
        let mut yp = y.to_vec();
        let mut ym = y.to_vec();
        yp[i] += h;
        ym[i] -= h;
        let xp = stereo_lift(&yp, t_c);
        let xm = stereo_lift(&ym, t_c);
        for (c, (a, b)) in col.iter_mut().zip(xp.iter().zip(&xm)) {
            *c = (a - b) / (2.0 * h);
        }
    }
    let mut shifted = y.to_vec();
    shifted[n - 1] -= t_c;
    let t: f64 = shifted.iter().map(|v| v * v).sum();
    let lambda2 = (2.0 / (1.0 + t)).powi(2);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let g: f64 = jac[i].iter().zip(&jac[j]).map(|(a, b)| a * b).sum();
            let target = if i == j { lambda2 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

/// Reproducible sample points in `[−L, L]^{n−1} × [0, L]`, with `y^n > 0` when `interior`.
pub fn sample_points(dim: Dim, count: usize, extent: f64, interior: bool, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = dim.n;
    (0..count)
        .map(|_| {
            let mut y: Vec<f64> = (0..n).map(|_| rng.gen_range(-extent..extent)).collect();
            y[n - 1] = if interior {
                rng.gen_range(0.01 * extent..extent)
            } else {
                0.0
            };
            y
        })
        .collect()
}

//! Pointwise evaluation of the tensors and identities from analytic jets.

use std::ops::{Add, Mul, Neg, Sub};

use super::fields::{AdmissibleVectorField, PerturbationTensor};
use crate::halfspace::{Bubble, BubbleJet};
use crate::numerics::grid::MAX_GRID_DIM;

/// Choice of `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PsiMode {
    /// `ψ = ∂_iW V_i + ((n−2)/(2n)) W div V`.
    #[default]
    Formula,
    /// `ψ ≡ 0`, the convention used in dimension three.
    Zero,
}

/// Which tensor plays the role of `H`.
#[derive(Debug, Clone, Copy)]
pub enum HInput<'a> {
    /// `H = S`, so that `T = 0`.
    KillingOfV,
    Tensor(&'a PerturbationTensor),
}

/// Arithmetic needed by the generic formulas below.
pub(crate) trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
}

/// Forward-mode dual number carrying a gradient in up to `MAX_GRID_DIM` variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual {
    pub v: f64,
    pub d: [f64; MAX_GRID_DIM],
}

impl Dual {
    pub fn new(v: f64, grad: &[f64]) -> Self {
        let mut d = [0.0; MAX_GRID_DIM];
        d[..grad.len()].copy_from_slice(grad);
        Dual { v, d }
    }
}

impl Scalar for Dual {
    fn cst(v: f64) -> Self {
        Dual { v, d: [0.0; MAX_GRID_DIM] }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(mut self, o: Dual) -> Dual {
        self.v += o.v;
        for (a, b) in self.d.iter_mut().zip(o.d) {
            *a += b;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(mut self, o: Dual) -> Dual {
        self.v -= o.v;
        for (a, b) in self.d.iter_mut().zip(o.d) {
            *a -= b;
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        let mut d = [0.0; MAX_GRID_DIM];
        for (k, x) in d.iter_mut().enumerate() {
            *x = self.v * o.d[k] + o.v * self.d[k];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::cst(0.0) - self
    }
}

/// Inputs of `ξ` at one point. Matrices are full `n × n` row-major;
/// `dx[(i*n + k)*n + l] = ∂_l X_ik`.
pub(crate) struct XiInputs<T> {
    pub n: usize,
    pub w: T,
    pub dw: Vec<T>,
    pub psi: T,
    pub dpsi: Vec<T>,
    pub h: Vec<T>,
    pub dh: Vec<T>,
    pub s: Vec<T>,
    pub ds: Vec<T>,
}

/// The vector field `ξ` of the second-variation identity.
pub(crate) fn xi_generic<T: Scalar>(x: &XiInputs<T>) -> Vec<T> {
    let n = x.n;
    let nf = n as f64;
    let c = T::cst(4.0 * (nf - 1.0) / (nf - 2.0));
    let half = T::cst(0.5);
    let quarter = T::cst(0.25);
    let two = T::cst(2.0);
    let w = x.w;
    let w2 = w * w;
    let m = |a: &[T], i: usize, k: usize| a[i * n + k];
    let d = |a: &[T], i: usize, k: usize, l: usize| a[(i * n + k) * n + l];
    let t = |i: usize, k: usize| m(&x.h, i, k) - m(&x.s, i, k);
    let zero = T::cst(0.0);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut xi = zero;
        for k in 0..n {
            let h_ik = m(&x.h, i, k);
            let s_ik = m(&x.s, i, k);
            xi = xi + two * w * x.psi * d(&x.dh, i, k, k);
            xi = xi - two * w * x.dpsi[k] * h_ik;
            xi = xi - two * x.dw[k] * x.psi * h_ik;
            xi = xi - w * x.psi * d(&x.ds, i, k, k);
            xi = xi + w * x.dpsi[k] * s_ik;
            xi = xi + x.dw[k] * x.psi * s_ik;
            xi = xi - c * x.dw[k] * x.psi * s_ik;
            for l in 0..n {
                let s_kl = m(&x.s, k, l);
                xi = xi - half * w2 * d(&x.ds, l, k, i) * m(&x.h, l, k);
                xi = xi + w2 * d(&x.ds, k, l, l) * h_ik;
                xi = xi + two * w * x.dw[l] * s_kl * h_ik;
                xi = xi + quarter * w2 * d(&x.ds, l, k, i) * m(&x.s, l, k);
                xi = xi - half * w2 * d(&x.ds, k, l, l) * s_ik;
                xi = xi - w * x.dw[l] * s_kl * s_ik;
                xi = xi - T::cst(2.0 / (nf - 2.0)) * w * x.dw[k] * t(l, k) * t(i, l);
            }
        }
        xi = xi + c * x.psi * x.dpsi[i];
        out.push(xi);
    }
    out
}

/// Jets of `W`, `ψ`, `S` and `H` at one point.
///
/// Layouts: matrices `m[i*n + j]`; first derivatives `d[(i*n + j)*n + k] = ∂_k M_ij`;
/// second derivatives `dd[((i*n + j)*n + k)*n + l] = ∂_k∂_l M_ij`.
#[derive(Debug, Clone)]
pub struct LocalJets {
    pub n: usize,
    pub w: BubbleJet,
    pub psi: f64,
    pub dpsi: Vec<f64>,
    pub d2psi: Vec<f64>,
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
    pub d2s: Vec<f64>,
    pub h: Vec<f64>,
    pub dh: Vec<f64>,
    pub d2h: Vec<f64>,
}

impl LocalJets {
    pub fn new(bubble: &Bubble, v: &AdmissibleVectorField, hin: HInput, psi_mode: PsiMode, y: &[f64]) -> Self {
        let n = bubble.dim.n;
        let w = bubble.jet(y, 3);
        let vj = v.jet(y, 3);
        let delta = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let two_n = 2.0 / n as f64;
        // ∂_j V_c = d1[c*n + j], and so on.
        let div: f64 = (0..n).map(|m| vj.d1[m * n + m]).sum();
        let ddiv: Vec<f64> = (0..n).map(|k| (0..n).map(|m| vj.d2[(m * n + m) * n + k]).sum()).collect();
        let d2div: Vec<f64> = (0..n * n)
            .map(|kl| (0..n).map(|m| vj.d3[(m * n + m) * n * n + kl]).sum())
            .collect();

        let mut s = vec![0.0; n * n];
        let mut ds = vec![0.0; n * n * n];
        let mut d2s = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                s[i * n + j] = vj.d1[j * n + i] + vj.d1[i * n + j] - two_n * div * delta(i, j);
                for k in 0..n {
                    ds[(i * n + j) * n + k] = vj.d2[(j * n + i) * n + k] + vj.d2[(i * n + j) * n + k]
                        - two_n * ddiv[k] * delta(i, j);
                    for l in 0..n {
                        d2s[((i * n + j) * n + k) * n + l] = vj.d3[((j * n + i) * n + k) * n + l]
                            + vj.d3[((i * n + j) * n + k) * n + l]
                            - two_n * d2div[k * n + l] * delta(i, j);
                    }
                }
            }
        }

        let (psi, dpsi, d2psi) = match psi_mode {
            PsiMode::Zero => (0.0, vec![0.0; n], vec![0.0; n * n]),
            PsiMode::Formula => {
                let c0 = (n as f64 - 2.0) / (2.0 * n as f64);
                let mut psi = c0 * w.value * div;
                let mut dpsi = vec![0.0; n];
                let mut d2psi = vec![0.0; n * n];
                for k in 0..n {
                    psi += w.grad[k] * vj.value[k];
                }
                for i in 0..n {
                    let mut acc = c0 * (w.grad[i] * div + w.value * ddiv[i]);
                    for k in 0..n {
                        acc += w.hess[i * n + k] * vj.value[k] + w.grad[k] * vj.d1[k * n + i];
                    }
                    dpsi[i] = acc;
                    for j in 0..n {
                        let mut acc = c0
                            * (w.hess[i * n + j] * div
                                + w.grad[i] * ddiv[j]
                                + w.grad[j] * ddiv[i]
                                + w.value * d2div[i * n + j]);
                        for k in 0..n {
                            acc += w.third[(i * n + j) * n + k] * vj.value[k]
                                + w.hess[i * n + k] * vj.d1[k * n + j]
                                + w.hess[j * n + k] * vj.d1[k * n + i]
                                + w.grad[k] * vj.d2[(k * n + i) * n + j];
                        }
                        d2psi[i * n + j] = acc;
                    }
                }
                (psi, dpsi, d2psi)
            }
        };

        let (h, dh, d2h) = match hin {
            HInput::KillingOfV => (s.clone(), ds.clone(), d2s.clone()),
            HInput::Tensor(t) => {
                let j = t.jet(y, 2);
                (j.value, j.d1, j.d2)
            }
        };
        LocalJets {
            n,
            w,
            psi,
            dpsi,
            d2psi,
            s,
            ds,
            d2s,
            h,
            dh,
            d2h,
        }
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn t(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.n + j] - self.s[i * self.n + j]
    }

    /// `∂_k T_ij`.
    pub fn dt(&self, i: usize, j: usize, k: usize) -> f64 {
        let idx = (i * self.n + j) * self.n + k;
        self.dh[idx] - self.ds[idx]
    }

    pub fn trace_s(&self) -> f64 {
        (0..self.n).map(|i| self.s[i * self.n + i]).sum()
    }

    /// Both sides of the linearized scalar-curvature equation.
    pub fn linearized_scalar(&self) -> (f64, f64) {
        let n = self.n;
        let nf = self.nf();
        let w = &self.w;
        let lap: f64 = (0..n).map(|i| self.d2psi[i * n + i]).sum();
        let lhs = lap + nf * (nf + 2.0) * w.value.powf(4.0 / (nf - 2.0)) * self.psi;
        let mut dd_s = 0.0;
        let mut div_term = 0.0;
        for i in 0..n {
            for j in 0..n {
                dd_s += self.d2s[((i * n + j) * n + i) * n + j];
                div_term += w.hess[i * n + j] * self.s[i * n + j] + w.grad[j] * self.ds[(i * n + j) * n + i];
            }
        }
        let rhs = (nf - 2.0) / (4.0 * (nf - 1.0)) * w.value * dd_s + div_term;
        (lhs, rhs)
    }

    /// Both sides of the linearized mean-curvature equation (meaningful on `y^n = 0`).
    pub fn linearized_mean(&self) -> (f64, f64) {
        let n = self.n;
        let nf = self.nf();
        let w = &self.w;
        let nn = (n - 1) * n + n - 1;
        let dnw = w.grad[n - 1];
        let lhs = self.dpsi[n - 1] - nf / (nf - 2.0) * dnw / w.value * self.psi;
        let rhs = 0.5 * dnw * self.s[nn] + (nf - 2.0) / (4.0 * (nf - 1.0)) * w.value * self.ds[nn * n + n - 1];
        (lhs, rhs)
    }

    /// Residuals of the boundary relations for `S` and `T` on `y^n = 0`:
    /// `(max|S_an|, max|T_an|, normal relation for S_nn, normal relation for S_ab)`.
    pub fn st_boundary(&self) -> [f64; 4] {
        let n = self.n;
        let nf = self.nf();
        let nn = (n - 1) * n + n - 1;
        let mut s_an = 0.0f64;
        let mut t_an = 0.0f64;
        for a in 0..n - 1 {
            s_an = s_an.max(self.s[a * n + n - 1].abs());
            t_an = t_an.max(self.t(a, n - 1).abs());
        }
        let dn_snn = self.ds[nn * n + n - 1];
        let rel_nn = (dn_snn + 2.0 * nf / (nf - 2.0) * self.w.grad[n - 1] / self.w.value * self.s[nn]).abs();
        let mut rel_ab = 0.0f64;
        for a in 0..n - 1 {
            for b in 0..n - 1 {
                let d = if a == b { 1.0 } else { 0.0 };
                let r = self.ds[(a * n + b) * n + n - 1] + dn_snn * d / (nf - 1.0);
                rel_ab = rel_ab.max(r.abs());
            }
        }
        [s_an, t_an, rel_nn, rel_ab]
    }

    /// `Q_{ij,k}` with index `(i*n + j)*n + k`.
    pub fn q_tensor(&self) -> Vec<f64> {
        let n = self.n;
        let c = 2.0 / (self.nf() - 2.0);
        let w = &self.w;
        let mut q = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                let gi: f64 = (0..n).map(|l| w.grad[l] * self.t(i, l)).sum();
                let gj: f64 = (0..n).map(|l| w.grad[l] * self.t(j, l)).sum();
                for k in 0..n {
                    let dik = if i == k { 1.0 } else { 0.0 };
                    let djk = if j == k { 1.0 } else { 0.0 };
                    q[(i * n + j) * n + k] = w.value * self.dt(i, j, k)
                        + c * (gi * djk + gj * dik - w.grad[i] * self.t(j, k) - w.grad[j] * self.t(i, k));
                }
            }
        }
        q
    }

    /// Residual vector of `W ∂_j T_ij + (2n/(n−2)) ∂_j W T_ij`.
    pub fn divergence_condition(&self) -> Vec<f64> {
        let n = self.n;
        let c = 2.0 * self.nf() / (self.nf() - 2.0);
        (0..n)
            .map(|i| (0..n).map(|j| self.w.value * self.dt(i, j, j) + c * self.w.grad[j] * self.t(i, j)).sum())
            .collect()
    }

    fn xi_inputs_f64(&self) -> XiInputs<f64> {
        XiInputs {
            n: self.n,
            w: self.w.value,
            dw: self.w.grad.clone(),
            psi: self.psi,
            dpsi: self.dpsi.clone(),
            h: self.h.clone(),
            dh: self.dh.clone(),
            s: self.s.clone(),
            ds: self.ds.clone(),
        }
    }

    fn xi_inputs_dual(&self) -> XiInputs<Dual> {
        let n = self.n;
        let lift = |vals: &[f64], ders: &[f64]| -> Vec<Dual> {
            vals.iter()
                .enumerate()
                .map(|(c, &v)| Dual::new(v, &ders[c * n..(c + 1) * n]))
                .collect()
        };
        XiInputs {
            n,
            w: Dual::new(self.w.value, &self.w.grad),
            dw: lift(&self.w.grad, &self.w.hess),
            psi: Dual::new(self.psi, &self.dpsi),
            dpsi: lift(&self.dpsi, &self.d2psi),
            h: lift(&self.h, &self.dh),
            dh: lift(&self.dh, &self.d2h),
            s: lift(&self.s, &self.ds),
            ds: lift(&self.ds, &self.d2s),
        }
    }

    pub fn xi(&self) -> Vec<f64> {
        xi_generic(&self.xi_inputs_f64())
    }

    /// `div ξ` by exact differentiation of the jets.
    pub fn div_xi(&self) -> f64 {
        let xi = xi_generic(&self.xi_inputs_dual());
        xi.iter().enumerate().map(|(i, x)| x.d[i]).sum()
    }

    /// Closed form of `ξ_n` on `y^n = 0`.
    pub fn xi_normal_boundary(&self) -> f64 {
        let n = self.n;
        let nf = self.nf();
        let w = self.w.value;
        let dnw = self.w.grad[n - 1];
        let snn = self.s[(n - 1) * n + n - 1];
        -(nf + 2.0) / (2.0 * (nf - 2.0)) * w * dnw * snn * snn
            + 4.0 * nf * (nf - 1.0) / ((nf - 2.0) * (nf - 2.0)) * dnw / w * self.psi * self.psi
    }

    /// Left side of the second-variation identity.
    pub fn second_variation_lhs(&self) -> f64 {
        let n = self.n;
        let q = self.q_tensor();
        let qi = |i: usize, j: usize, k: usize| q[(i * n + j) * n + k];
        let mut quad = 0.0;
        for x in &q {
            quad += x * x;
        }
        let mut trace_part = 0.0;
        for i in 0..n {
            let v: f64 = (0..n).map(|k| qi(k, i, k)).sum();
            trace_part += v * v;
        }
        let tt: f64 = (0..n).flat_map(|i| (0..n).map(move |k| (i, k))).map(|(i, k)| self.t(i, k).powi(2)).sum();
        let nf = self.nf();
        0.25 * quad - 0.5 * trace_part + 2.0 * self.w.value.powf(2.0 * nf / (nf - 2.0)) * tt
    }

    /// Right side of the second-variation identity without `div ξ`.
    pub fn second_variation_rhs_local(&self) -> f64 {
        let n = self.n;
        let nf = self.nf();
        let c = 4.0 * (nf - 1.0) / (nf - 2.0);
        let w = self.w.value;
        let dw = &self.w.grad;
        let h = |i: usize, k: usize| self.h[i * n + k];
        let dh = |i: usize, k: usize, l: usize| self.dh[(i * n + k) * n + l];
        let mut acc = 0.0;
        // Divergence of H: div_h[i] = ∂_k H_ik.
        let div_h: Vec<f64> = (0..n).map(|i| (0..n).map(|k| dh(i, k, k)).sum()).collect();
        for x in &self.dh {
            acc += 0.25 * w * w * x * x;
        }
        for i in 0..n {
            let a: f64 = (0..n).map(|k| dw[k] * h(i, k)).sum();
            acc -= 0.5 * c * a * a;
            acc -= 2.0 * w * a * div_h[i];
            acc -= 0.5 * w * w * div_h[i] * div_h[i];
            for k in 0..n {
                acc += 2.0 * c * dw[i] * self.dpsi[k] * h(i, k);
                acc -= 2.0 * w * self.psi * self.d2h[((i * n + k) * n + i) * n + k];
            }
        }
        let grad_psi2: f64 = self.dpsi.iter().map(|v| v * v).sum();
        acc -= c * grad_psi2;
        acc += c * nf * (nf + 2.0) * w.powf(4.0 / (nf - 2.0)) * self.psi * self.psi;
        acc
    }
}

/// Componentwise residual of the bubble's Einstein-type identity at one point,
/// relative to `W²`.
pub fn einstein_residual(bubble: &Bubble, y: &[f64]) -> f64 {
    let n = bubble.dim.n;
    let nf = bubble.dim.nf();
    let j = bubble.jet(y, 2);
    let c = nf / (nf - 2.0);
    let grad2: f64 = j.grad.iter().map(|g| g * g).sum();
    let trace = (j.value * j.laplacian(n) - c * grad2) / nf;
    let mut worst = 0.0f64;
    for i in 0..n {
        for k in 0..n {
            let lhs = j.value * j.hess[i * n + k] - c * j.grad[i] * j.grad[k];
            let rhs = if i == k { trace } else { 0.0 };
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst / (j.value * j.value)
}

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SubcriticalProblem;
use crate::error::{Error, Result};
use crate::numerics::{DiscreteField, RadialMesh};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeOptions {
    /// Stop once [`el_residual`] is at or below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step reduction factor in the backtracking line search.
    pub backtrack: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            tol: 1e-6,
            max_iter: 50_000,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizerResult {
    /// Positive minimizer normalized by `N_q[u] = 1`.
    pub u: DiscreteField,
    /// `μ_q = E[u]` under the normalization.
    pub mu: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub alpha_q: f64,
    pub beta_q: f64,
    /// Exponent the result was computed at.
    pub q: f64,
    pub converged: bool,
    /// `|N_q[u] − 1|`.
    pub normalization_residual: f64,
    /// `E[u_k]` after every accepted step, starting with the initial iterate.
    pub energy_history: Vec<f64>,
}

/// Smooth positive start `1 + Σ_j c_j cos(jπ s)/j` with `s` the normalized radius and `|c_j| ≤ 0.05`.
pub fn initial_guess(mesh: Arc<RadialMesh>, seed: u64) -> DiscreteField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.05..0.05)).collect();
    let nodes = mesh.nodes();
    let (r0, r1) = (nodes[0], nodes[nodes.len() - 1]);
    let values = nodes
        .iter()
        .map(|&r| {
            let s = (r - r0) / (r1 - r0);
            1.0 + coeffs
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * s).cos() / (j + 1) as f64)
                .sum::<f64>()
        })
        .collect();
    DiscreteField::new(mesh, values).expect("finite by construction")
}

/// Symmetric tridiagonal matrix factored once for repeated solves.
struct Tridiagonal {
    /// Modified diagonal from the forward sweep.
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn factor(diag: Vec<f64>, off: Vec<f64>) -> Self {
        let mut d = diag;
        for k in 1..d.len() {
            d[k] -= off[k - 1] * off[k - 1] / d[k - 1];
        }
        Tridiagonal { diag: d, off }
    }

    fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        out.copy_from_slice(rhs);
        for k in 1..n {
            out[k] -= self.off[k - 1] / self.diag[k - 1] * out[k - 1];
        }
        out[n - 1] /= self.diag[n - 1];
        for k in (0..n - 1).rev() {
            out[k] = (out[k] - self.off[k] * out[k + 1]) / self.diag[k];
        }
    }
}

/// `H¹`-type metric `2(c_n·stiffness + lumped mass)` used to precondition gradients.
fn sobolev_metric(prob: &SubcriticalProblem) -> Tridiagonal {
    let mesh = &prob.geometry.mesh;
    let c = prob.geometry.gradient_constant();
    let nodes = mesh.nodes();
    let mut diag: Vec<f64> = mesh.volume_weights().iter().map(|w| 2.0 * w).collect();
    let mut off = vec![0.0; nodes.len() - 1];
    for (k, vol) in mesh.element_volumes().iter().enumerate() {
        let len = nodes[k + 1] - nodes[k];
        let s = 2.0 * c * vol / (len * len);
        diag[k] += s;
        diag[k + 1] += s;
        off[k] = -s;
    }
    Tridiagonal::factor(diag, off)
}

/// Residual vector `K u − μ(a α W u^q + 2(n−1) b β S u^{(q+1)/2})`, with `W`
/// the volume weights and `S` the boundary areas.
fn residual_vector(prob: &SubcriticalProblem, u: &[f64], ku: &[f64], mu: f64, out: &mut [f64]) {
    let (alpha, beta) = prob.alpha_beta(u);
    let q = prob.q;
    let n = prob.dim().nf();
    let mesh = &prob.geometry.mesh;
    let a = prob.weights.a;
    let b = prob.weights.b;
    for ((o, (k, w)), v) in out.iter_mut().zip(ku.iter().zip(mesh.volume_weights())).zip(u) {
        *o = *k;
        if a > 0.0 {
            *o -= mu * a * alpha * w * v.abs().powf(q);
        }
    }
    if b > 0.0 {
        for s in mesh.boundaries() {
            out[s.node] -= mu * 2.0 * (n - 1.0) * b * beta * s.area * u[s.node].abs().powf(0.5 * (q + 1.0));
        }
    }
}

/// Size of a residual vector: the largest interior entry per unit radial
/// length and per unit sphere measure, plus the largest boundary entry per
/// `2(n−1)·area`.
fn residual_norm(prob: &SubcriticalProblem, res: &[f64]) -> f64 {
    let mesh = &prob.geometry.mesh;
    let nodes = mesh.nodes();
    let n = prob.dim().nf();
    let omega = crate::halfspace::sphere_volume(prob.dim().n - 1).expect("n >= 3");
    let last = nodes.len() - 1;
    let is_boundary = |k: usize| mesh.boundaries().iter().any(|b| b.node == k);
    let mut interior = 0.0f64;
    for (k, r) in res.iter().enumerate() {
        if is_boundary(k) {
            continue;
        }
        let left = if k > 0 { nodes[k] - nodes[k - 1] } else { 0.0 };
        let right = if k < last { nodes[k + 1] - nodes[k] } else { 0.0 };
        interior = interior.max(r.abs() / (omega * 0.5 * (left + right)));
    }
    let boundary = mesh
        .boundaries()
        .iter()
        .map(|b| res[b.node].abs() / (2.0 * (n - 1.0) * b.area))
        .fold(0.0f64, f64::max);
    interior + boundary
}

/// Discrete Euler–Lagrange residual of `u` with multiplier `mu`.
///
/// Interior rows are the weak residual against each hat function divided by
/// `ω_{n−1}` times the local mesh length, i.e. the strong residual weighted by
/// `r^{n−1}`. Boundary rows are divided by `2(n−1)|∂B|`, which recovers the
/// defect in `(2/(n−2))∂_ν u + h u = μ b β u^{(q+1)/2}`.
pub fn el_residual(u: &DiscreteField, prob: &SubcriticalProblem, mu: f64) -> f64 {
    let v = u.values();
    let mut ku = vec![0.0; v.len()];
    prob.geometry.apply_energy(v, &mut ku);
    let mut res = vec![0.0; v.len()];
    residual_vector(prob, v, &ku, mu, &mut res);
    residual_norm(prob, &res)
}

/// Projected descent for `min E[u]` subject to `N_q[u] = 1`.
pub fn minimize_subcritical(prob: &SubcriticalProblem, init: &DiscreteField, opts: &MinimizeOptions) -> Result<MinimizerResult> {
    let q_crit = prob.dim().critical_exponent();
    if prob.q >= q_crit {
        return Err(Error::domain(format!(
            "minimize_subcritical needs q < {q_crit}; the critical exponent is reached only by extrapolation"
        )));
    }
    if !init.same_mesh(&prob.geometry.mesh) {
        return Err(Error::config("initial field lives on a different mesh"));
    }
    if init.values().iter().any(|&v| !(v > 0.0)) {
        return Err(Error::domain("initial field must be strictly positive"));
    }
    if !(opts.tol > 0.0) || !(opts.backtrack > 0.0 && opts.backtrack < 1.0) || !(opts.armijo > 0.0 && opts.armijo < 1.0) {
        return Err(Error::config("invalid minimizer options"));
    }

    let len = init.values().len();
    let mut u = init.values().to_vec();
    project(prob, &mut u)?;

    let metric = sobolev_metric(prob);
    let mut ku = vec![0.0; len];
    let mut grad = vec![0.0; len];
    let mut dir = vec![0.0; len];
    let mut trial = vec![0.0; len];
    let mut history = Vec::new();
    let mut step = 1.0f64;
    let mut iterations = 0;
    let mut converged = false;
    let mut residual;

    prob.geometry.apply_energy(&u, &mut ku);
    let mut mu: f64 = u.iter().zip(&ku).map(|(a, b)| a * b).sum();
    history.push(mu);
    loop {
        residual_vector(prob, &u, &ku, mu, &mut grad);
        residual = residual_norm(prob, &grad);
        if residual <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        // ∇E − μ∇N = 2·(residual vector).
        grad.iter_mut().for_each(|g| *g *= 2.0);
        metric.solve(&grad, &mut dir);
        dir.iter_mut().for_each(|d| *d = -*d);
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        if !(slope < 0.0) {
            break;
        }
        let mut t = (2.0 * step).min(1.0);
        let accepted = loop {
            for ((x, u0), d) in trial.iter_mut().zip(&u).zip(&dir) {
                *x = (u0 + t * d).abs();
            }
            if project(prob, &mut trial).is_ok() {
                let e = prob.geometry.energy_values(&trial);
                if e <= mu + opts.armijo * t * slope {
                    break Some(e);
                }
            }
            t *= opts.backtrack;
            if t < 1e-16 {
                break None;
            }
        };
        let Some(e) = accepted else {
            // Line search exhausted: the iterate is stationary to roundoff.
            break;
        };
        step = t;
        std::mem::swap(&mut u, &mut trial);
        prob.geometry.apply_energy(&u, &mut ku);
        mu = e;
        history.push(mu);
        iterations += 1;
    }

    if u.iter().any(|&v| !(v > 0.0)) {
        converged = false;
    }
    let (alpha_q, beta_q) = prob.alpha_beta(&u);
    let normalization_residual = (prob.constraint_values(&u) - 1.0).abs();
    Ok(MinimizerResult {
        u: DiscreteField::new(prob.geometry.mesh.clone(), u)?,
        mu,
        el_residual: residual,
        iterations,
        alpha_q,
        beta_q,
        q: prob.q,
        converged,
        normalization_residual,
        energy_history: history,
    })
}

/// Rescale to `N_q[u] = 1`; the constraint is homogeneous of degree 2.
fn project(prob: &SubcriticalProblem, u: &mut [f64]) -> Result<()> {
    let nval = prob.constraint_values(u);
    if !(nval > 0.0) || !nval.is_finite() {
        return Err(Error::domain("cannot normalize a field with vanishing constraint functional"));
    }
    let s = 1.0 / nval.sqrt();
    u.iter_mut().for_each(|v| *v *= s);
    Ok(())
}

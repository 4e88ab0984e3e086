//! Subcritical approximation of the two-weight boundary Yamabe problem on
//! rotationally symmetric model manifolds.
//!
//! For `1 < q ≤ (n+2)/(n−2)` the quotient is
//! `Q^q[u] = E[u] / N_q[u]` with
//! `E[u] = ∫ (4(n−1)/(n−2)|∇u|² + R u²) + 2(n−1)∫_∂ h u²` and
//! `N_q[u] = a(∫|u|^{q+1})^{2/(q+1)} + 2(n−1) b (∫_∂|u|^{(q+3)/2})^{4/(q+3)}`.

mod limit;
mod minimize;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::halfspace::{Dim, Weights};
use crate::numerics::{DiscreteField, RadialMesh};

pub use limit::{
    conformal_curvatures, continuity_check, critical_limit, default_schedule, sweep_ab, ConformalCurvatures,
    ContinuityReport, CriticalLimit, LimitStep, MonotonicityReport, SweepCell, SweepTable,
};
pub use minimize::{el_residual, initial_guess, minimize_subcritical, MinimizeOptions, MinimizerResult};

/// Background metric data on a radial mesh.
#[derive(Debug, Clone)]
pub struct BackgroundGeometry {
    pub mesh: Arc<RadialMesh>,
    pub scalar_curvature: DiscreteField,
    /// One entry per boundary sphere of the mesh, same order.
    pub boundary_mean_curvatures: Vec<f64>,
}

impl BackgroundGeometry {
    /// Flat metric: `R = 0`, boundary spheres with their Euclidean mean curvatures.
    pub fn flat(mesh: Arc<RadialMesh>) -> Result<Self> {
        let scalar_curvature = DiscreteField::constant(mesh.clone(), 0.0)?;
        let boundary_mean_curvatures = mesh.boundaries().iter().map(|b| b.mean_curvature).collect();
        Ok(BackgroundGeometry {
            mesh,
            scalar_curvature,
            boundary_mean_curvatures,
        })
    }

    pub fn new(mesh: Arc<RadialMesh>, scalar_curvature: DiscreteField, boundary_mean_curvatures: Vec<f64>) -> Result<Self> {
        if !scalar_curvature.same_mesh(&mesh) {
            return Err(Error::config("scalar curvature lives on a different mesh"));
        }
        if boundary_mean_curvatures.len() != mesh.boundaries().len() {
            return Err(Error::config("one mean curvature per boundary sphere is required"));
        }
        Ok(BackgroundGeometry {
            mesh,
            scalar_curvature,
            boundary_mean_curvatures,
        })
    }

    pub fn dim(&self) -> Dim {
        self.mesh.dim()
    }

    /// Whether this is the flat unit ball.
    pub fn is_unit_ball(&self) -> bool {
        let b = self.mesh.boundaries();
        b.len() == 1
            && b[0].radius == 1.0
            && self.mesh.nodes()[0] == 0.0
            && self.boundary_mean_curvatures == [1.0]
            && self.scalar_curvature.values().iter().all(|&r| r == 0.0)
    }

    /// `4(n−1)/(n−2)`.
    pub fn gradient_constant(&self) -> f64 {
        let n = self.dim().nf();
        4.0 * (n - 1.0) / (n - 2.0)
    }

    fn check(&self, u: &DiscreteField) -> Result<()> {
        if !u.same_mesh(&self.mesh) {
            return Err(Error::config("field and geometry live on different meshes"));
        }
        Ok(())
    }

    /// `E[u]` for nodal values.
    pub(crate) fn energy_values(&self, u: &[f64]) -> f64 {
        let c = self.gradient_constant();
        let n = self.dim().nf();
        let nodes = self.mesh.nodes();
        let mut e = 0.0;
        for (k, vol) in self.mesh.element_volumes().iter().enumerate() {
            let len = nodes[k + 1] - nodes[k];
            let du = u[k + 1] - u[k];
            e += c * vol * du * du / (len * len);
        }
        for ((w, r), v) in self.mesh.volume_weights().iter().zip(self.scalar_curvature.values()).zip(u) {
            e += w * r * v * v;
        }
        for (b, h) in self.mesh.boundaries().iter().zip(&self.boundary_mean_curvatures) {
            e += 2.0 * (n - 1.0) * h * b.area * u[b.node] * u[b.node];
        }
        e
    }

    /// `K u` where `E[u] = uᵀ K u`.
    pub(crate) fn apply_energy(&self, u: &[f64], out: &mut [f64]) {
        let c = self.gradient_constant();
        let n = self.dim().nf();
        let nodes = self.mesh.nodes();
        for ((o, w), (r, v)) in out
            .iter_mut()
            .zip(self.mesh.volume_weights())
            .zip(self.scalar_curvature.values().iter().zip(u))
        {
            *o = w * r * v;
        }
        for (k, vol) in self.mesh.element_volumes().iter().enumerate() {
            let len = nodes[k + 1] - nodes[k];
            let flux = c * vol / (len * len) * (u[k + 1] - u[k]);
            out[k] -= flux;
            out[k + 1] += flux;
        }
        for (b, h) in self.mesh.boundaries().iter().zip(&self.boundary_mean_curvatures) {
            out[b.node] += 2.0 * (n - 1.0) * h * b.area * u[b.node];
        }
    }
}

/// `E[u]`.
pub fn energy(u: &DiscreteField, geom: &BackgroundGeometry) -> Result<f64> {
    geom.check(u)?;
    Ok(geom.energy_values(u.values()))
}

/// A subcritical minimization problem.
#[derive(Debug, Clone)]
pub struct SubcriticalProblem {
    pub geometry: BackgroundGeometry,
    pub weights: Weights,
    pub q: f64,
}

impl SubcriticalProblem {
    pub fn new(geometry: BackgroundGeometry, weights: Weights, q: f64) -> Result<Self> {
        let weights = Weights::new(weights.a, weights.b)?;
        let q_crit = geometry.dim().critical_exponent();
        if !(q > 1.0 && q <= q_crit) {
            return Err(Error::domain(format!("exponent q must lie in (1, {q_crit}], got {q}")));
        }
        Ok(SubcriticalProblem { geometry, weights, q })
    }

    pub fn dim(&self) -> Dim {
        self.geometry.dim()
    }

    /// `(∫|u|^{q+1}, ∫_∂|u|^{(q+3)/2})`.
    pub(crate) fn norms(&self, u: &[f64]) -> (f64, f64) {
        let m = &self.geometry.mesh;
        (
            m.integrate_pow(u, self.q + 1.0),
            m.boundary_integrate_pow(u, 0.5 * (self.q + 3.0)),
        )
    }

    /// `N_q[u]`, homogeneous of degree 2.
    pub(crate) fn constraint_values(&self, u: &[f64]) -> f64 {
        let (vol, bdy) = self.norms(u);
        let n = self.dim().nf();
        let q = self.q;
        let mut v = 0.0;
        if self.weights.a > 0.0 {
            v += self.weights.a * vol.powf(2.0 / (q + 1.0));
        }
        if self.weights.b > 0.0 {
            v += 2.0 * (n - 1.0) * self.weights.b * bdy.powf(4.0 / (q + 3.0));
        }
        v
    }

    /// `α_q = (∫u^{q+1})^{(1−q)/(1+q)}` and `β_q = (∫_∂u^{(q+3)/2})^{(1−q)/(q+3)}`.
    pub(crate) fn alpha_beta(&self, u: &[f64]) -> (f64, f64) {
        let (vol, bdy) = self.norms(u);
        let q = self.q;
        (vol.powf((1.0 - q) / (1.0 + q)), bdy.powf((1.0 - q) / (q + 3.0)))
    }
}

/// `Q^q_{a,b}[u]`.
pub fn quotient_q(u: &DiscreteField, prob: &SubcriticalProblem) -> Result<f64> {
    prob.geometry.check(u)?;
    if u.values().iter().all(|&v| v == 0.0) {
        return Err(Error::domain("quotient undefined for u ≡ 0"));
    }
    let den = prob.constraint_values(u.values());
    if !(den > 0.0) {
        return Err(Error::domain("normalization functional vanishes for this field"));
    }
    Ok(prob.geometry.energy_values(u.values()) / den)
}

/// `N_q[u]`, the left side of the normalization `N_q[u] = 1`.
pub fn normalization(u: &DiscreteField, prob: &SubcriticalProblem) -> Result<f64> {
    prob.geometry.check(u)?;
    Ok(prob.constraint_values(u.values()))
}

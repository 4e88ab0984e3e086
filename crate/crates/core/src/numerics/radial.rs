use std::sync::Arc;

use crate::error::{Error, Result};
use crate::halfspace::{sphere_volume, Dim};
use crate::numerics::quadrature::GaussLegendre;

/// A boundary sphere `{|x| = radius}` of a radial model manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySphere {
    /// Index of the mesh node sitting on this sphere.
    pub node: usize,
    pub radius: f64,
    /// `ω_{n-1} radius^{n-1}`.
    pub area: f64,
    /// Mean curvature of the sphere as the boundary of the flat domain.
    pub mean_curvature: f64,
}

/// One-dimensional mesh in the radial variable of a rotationally symmetric domain.
///
/// Fields are piecewise linear in `r`. Volume weights integrate such fields
/// exactly against `ω_{n-1} r^{n-1} dr`, which is the trapezoid rule for the
/// weighted measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialMesh {
    dim: Dim,
    nodes: Vec<f64>,
    volume_weights: Vec<f64>,
    element_volumes: Vec<f64>,
    boundaries: Vec<BoundarySphere>,
}

pub const MIN_ELEMENTS: usize = 16;

impl RadialMesh {
    fn build(dim: Dim, nodes: Vec<f64>, boundary_nodes: &[(usize, f64)]) -> Result<Self> {
        if nodes.len() < MIN_ELEMENTS + 1 {
            return Err(Error::config(format!(
                "radial mesh needs at least {MIN_ELEMENTS} elements, got {}",
                nodes.len().saturating_sub(1)
            )));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes[0] < 0.0 {
            return Err(Error::config("radial nodes must be nonnegative and strictly increasing"));
        }
        let n = dim.n;
        let omega = sphere_volume(n - 1)?;
        let gl = GaussLegendre::new(n / 2 + 2);
        let mut volume_weights = vec![0.0; nodes.len()];
        let mut element_volumes = Vec::with_capacity(nodes.len() - 1);
        for (k, w) in nodes.windows(2).enumerate() {
            let (ra, rb) = (w[0], w[1]);
            let len = rb - ra;
            let (mut left, mut right) = (0.0, 0.0);
            for (r, wt) in gl.on(ra, rb) {
                let m = wt * r.powi(n as i32 - 1);
                left += m * (rb - r) / len;
                right += m * (r - ra) / len;
            }
            volume_weights[k] += omega * left;
            volume_weights[k + 1] += omega * right;
            element_volumes.push(omega * (left + right));
        }
        let boundaries = boundary_nodes
            .iter()
            .map(|&(node, h)| BoundarySphere {
                node,
                radius: nodes[node],
                area: omega * nodes[node].powi(n as i32 - 1),
                mean_curvature: h,
            })
            .collect();
        Ok(RadialMesh {
            dim,
            nodes,
            volume_weights,
            element_volumes,
            boundaries,
        })
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn volume_weights(&self) -> &[f64] {
        &self.volume_weights
    }

    /// `ω_{n-1} ∫_{r_k}^{r_{k+1}} r^{n-1} dr` for each element.
    pub fn element_volumes(&self) -> &[f64] {
        &self.element_volumes
    }

    pub fn boundaries(&self) -> &[BoundarySphere] {
        &self.boundaries
    }

    pub fn volume(&self) -> f64 {
        self.volume_weights.iter().sum()
    }

    /// `∫ |u|^p dμ` under the lumped weights.
    pub fn integrate_pow(&self, u: &[f64], p: f64) -> f64 {
        self.volume_weights
            .iter()
            .zip(u)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum()
    }

    /// `∫_{∂M} |u|^p dσ` summed over the boundary spheres.
    pub fn boundary_integrate_pow(&self, u: &[f64], p: f64) -> f64 {
        self.boundaries
            .iter()
            .map(|b| b.area * u[b.node].abs().powf(p))
            .sum()
    }

    /// `∫ f(|x|) dx` over the domain, Gauss–Legendre on every element.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.dim.n as i32;
        let omega = sphere_volume(self.dim.n - 1).expect("n >= 3");
        let gl = GaussLegendre::new(8);
        omega
            * self
                .nodes
                .windows(2)
                .map(|w| gl.integrate(w[0], w[1], |r| f(r) * r.powi(n - 1)))
                .sum::<f64>()
    }

    pub fn boundary_area(&self) -> f64 {
        self.boundaries.iter().map(|b| b.area).sum()
    }
}

/// Unit ball with nodes `r_k = 1 − (1 − k/M)^grading`, clustered at the boundary.
pub fn make_ball_mesh(m: usize, dim: Dim, grading: f64) -> Result<Arc<RadialMesh>> {
    if m < MIN_ELEMENTS {
        return Err(Error::config(format!("M must be at least {MIN_ELEMENTS}, got {m}")));
    }
    if !(grading >= 1.0) || !grading.is_finite() {
        return Err(Error::config(format!("grading must be >= 1, got {grading}")));
    }
    let mf = m as f64;
    let mut nodes: Vec<f64> = (0..=m)
        .map(|k| 1.0 - (1.0 - k as f64 / mf).powf(grading))
        .collect();
    nodes[0] = 0.0;
    nodes[m] = 1.0;
    RadialMesh::build(dim, nodes, &[(m, 1.0)]).map(Arc::new)
}

/// Uniform annulus `r_in ≤ r ≤ r_out`; the inner sphere has mean curvature `−1/r_in`.
pub fn make_annulus_mesh(m: usize, dim: Dim, r_in: f64, r_out: f64) -> Result<Arc<RadialMesh>> {
    if m < MIN_ELEMENTS {
        return Err(Error::config(format!("M must be at least {MIN_ELEMENTS}, got {m}")));
    }
    if !(r_in > 0.0) || !(r_in < r_out) || !r_out.is_finite() {
        return Err(Error::config(format!(
            "annulus needs 0 < r_in < r_out, got r_in={r_in}, r_out={r_out}"
        )));
    }
    let mf = m as f64;
    let mut nodes: Vec<f64> = (0..=m)
        .map(|k| r_in + (r_out - r_in) * k as f64 / mf)
        .collect();
    nodes[m] = r_out;
    RadialMesh::build(dim, nodes, &[(0, -1.0 / r_in), (m, 1.0 / r_out)]).map(Arc::new)
}

/// Nodal values of a radial function on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    mesh: Arc<RadialMesh>,
    values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: Arc<RadialMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::config(format!(
                "field has {} values but mesh has {} nodes",
                values.len(),
                mesh.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("field value {v} is not finite")));
        }
        Ok(DiscreteField { mesh, values })
    }

    pub fn from_fn(mesh: Arc<RadialMesh>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = mesh.nodes().iter().map(|&r| f(r)).collect();
        Self::new(mesh, values)
    }

    pub fn constant(mesh: Arc<RadialMesh>, c: f64) -> Result<Self> {
        Self::from_fn(mesh, |_| c)
    }

    pub fn mesh(&self) -> &Arc<RadialMesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        DiscreteField {
            mesh: self.mesh.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn same_mesh(&self, mesh: &RadialMesh) -> bool {
        std::ptr::eq(self.mesh.as_ref(), mesh) || self.mesh.nodes() == mesh.nodes()
    }
}

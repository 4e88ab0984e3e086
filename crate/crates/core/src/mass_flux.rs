//! Mass of asymptotically flat half-space metrics and the flux integral
//! around a boundary point, by product quadrature on hemispheres.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry_checks::PerturbationTensor;
use crate::halfspace::{sphere_volume, Dim};
use crate::numerics::quadrature::{equator_rule, hemisphere_rule, SphereRule};

/// Default angular resolution of the hemisphere rules.
pub const DEFAULT_RESOLUTION: usize = 24;
/// Smallest admissible sphere radius.
pub const MIN_RADIUS: f64 = 2.0;
/// Flux sequences whose spread is below this (relative to `max(1, |flux|)`) count as converged.
pub const FLAT_TOL: f64 = 1e-12;

/// A metric on `{|y| ≥ 1, y^n ≥ 0}` with its first derivatives.
pub trait AsymptoticMetric: Sync {
    fn dim(&self) -> Dim;
    /// Claimed decay order `p` of `g − δ`.
    fn decay_order(&self) -> f64;
    /// `g_ij(y)` into `out[i*n + j]`.
    fn metric(&self, y: &[f64], out: &mut [f64]);
    /// `∂_k g_ij(y)` into `out[(i*n + j)*n + k]`.
    fn derivatives(&self, y: &[f64], out: &mut [f64]);
}

fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn identity(n: usize, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
}

/// The Euclidean metric.
#[derive(Debug, Clone, Copy)]
pub struct FlatMetric {
    pub dim: Dim,
}

impl AsymptoticMetric for FlatMetric {
    fn dim(&self) -> Dim {
        self.dim
    }
    fn decay_order(&self) -> f64 {
        f64::INFINITY
    }
    fn metric(&self, _: &[f64], out: &mut [f64]) {
        identity(self.dim.n, out);
    }
    fn derivatives(&self, _: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// `g = (1 + m|y|^{2−n})^{4/(n−2)} δ`.
#[derive(Debug, Clone, Copy)]
pub struct ConformallyFlatMetric {
    pub dim: Dim,
    pub m: f64,
}

impl ConformallyFlatMetric {
    fn factor(&self, r: f64) -> (f64, f64) {
        let nf = self.dim.nf();
        let u = 1.0 + self.m * r.powf(2.0 - nf);
        let du = self.m * (2.0 - nf) * r.powf(1.0 - nf);
        let e = 4.0 / (nf - 2.0);
        (u.powf(e), e * u.powf(e - 1.0) * du)
    }
}

impl AsymptoticMetric for ConformallyFlatMetric {
    fn dim(&self) -> Dim {
        self.dim
    }
    fn decay_order(&self) -> f64 {
        self.dim.nf() - 2.0
    }
    fn metric(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dim.n;
        let (f, _) = self.factor(norm(y));
        identity(n, out);
        out.iter_mut().for_each(|v| *v *= f);
    }
    fn derivatives(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dim.n;
        let r = norm(y);
        let (_, df) = self.factor(r);
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for k in 0..n {
                out[(i * n + i) * n + k] = df * y[k] / r;
            }
        }
    }
}

/// `g_na = g_an = c y^a / |y|^{n−1}`, Euclidean otherwise.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryTwistMetric {
    pub dim: Dim,
    pub c: f64,
}

impl AsymptoticMetric for BoundaryTwistMetric {
    fn dim(&self) -> Dim {
        self.dim
    }
    fn decay_order(&self) -> f64 {
        self.dim.nf() - 2.0
    }
    fn metric(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dim.n;
        let r = norm(y);
        identity(n, out);
        for a in 0..n - 1 {
            let v = self.c * y[a] * r.powf(1.0 - n as f64);
            out[a * n + n - 1] = v;
            out[(n - 1) * n + a] = v;
        }
    }
    fn derivatives(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dim.n;
        let nf = n as f64;
        let r = norm(y);
        out.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..n - 1 {
            for k in 0..n {
                let d = if a == k { r.powf(1.0 - nf) } else { 0.0 };
                let v = self.c * (d + (1.0 - nf) * y[a] * y[k] * r.powf(-nf - 1.0));
                out[(a * n + n - 1) * n + k] = v;
                out[((n - 1) * n + a) * n + k] = v;
            }
        }
    }
}

/// Names accepted by [`builtin_metric`].
pub const BUILTIN_METRICS: [&str; 3] = ["flat", "conformal", "twist"];

/// A named metric: `flat`, `conformal` (parameter `m`) or `twist` (parameter `c`).
pub fn builtin_metric(name: &str, params: &BTreeMap<String, f64>, dim: Dim) -> Result<Box<dyn AsymptoticMetric>> {
    let get = |key: &str| -> Result<f64> {
        params
            .get(key)
            .copied()
            .ok_or_else(|| Error::config(format!("metric '{name}' needs parameter '{key}'")))
    };
    match name {
        "flat" => Ok(Box::new(FlatMetric { dim })),
        "conformal" => Ok(Box::new(ConformallyFlatMetric { dim, m: get("m")? })),
        "twist" => Ok(Box::new(BoundaryTwistMetric { dim, c: get("c")? })),
        other => Err(Error::config(format!(
            "unknown metric '{other}', expected one of {}",
            BUILTIN_METRICS.join(", ")
        ))),
    }
}

/// How the flux sequence was turned into a mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxStatus {
    /// All fluxes agree to roundoff; the last one is reported.
    Converged,
    /// Three-radius fit `m + c R^{−κ}` with shrinking differences.
    Extrapolated,
    /// Differences do not shrink monotonically; no mass is reported.
    NotConvergent,
    /// Fewer than three radii and no roundoff agreement.
    TooFewRadii,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxResult {
    pub radii: Vec<f64>,
    pub flux_values: Vec<f64>,
    /// Hemisphere part of each flux.
    pub interior_terms: Vec<f64>,
    /// Equatorial part of each flux.
    pub boundary_terms: Vec<f64>,
    pub extrapolated_mass: Option<f64>,
    /// Fitted decay rate `κ` of the flux sequence.
    pub rate: Option<f64>,
    pub status: FluxStatus,
}

impl FluxResult {
    pub fn converged(&self) -> bool {
        matches!(self.status, FluxStatus::Converged | FluxStatus::Extrapolated)
    }
}

fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::config("at least one radius is required"));
    }
    if radii.iter().any(|r| !r.is_finite()) {
        return Err(Error::config("radii must be finite"));
    }
    if radii[0] < MIN_RADIUS {
        return Err(Error::config(format!("radii must be >= {MIN_RADIUS}, got {}", radii[0])));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config("radii must be strictly increasing"));
    }
    Ok(())
}

/// `max |g_ij − δ_ij| · R^p` over the hemisphere nodes at radius `R`.
fn decay_constant(g: &dyn AsymptoticMetric, rule: &SphereRule, r: f64) -> f64 {
    let n = g.dim().n;
    let p = g.decay_order();
    let mut buf = vec![0.0; n * n];
    let mut worst = 0.0f64;
    for u in &rule.points {
        let y: Vec<f64> = u.iter().map(|v| v * r).collect();
        g.metric(&y, &mut buf);
        for i in 0..n {
            for j in 0..n {
                let d = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((buf[i * n + j] - d).abs());
            }
        }
    }
    if p.is_finite() {
        worst * r.powf(p)
    } else {
        worst
    }
}

/// The two surface integrals of the mass at radius `r`.
fn flux_at(g: &dyn AsymptoticMetric, hemi: &SphereRule, equator: &SphereRule, r: f64) -> (f64, f64) {
    let n = g.dim().n;
    let nf = n as f64;
    let mut dg = vec![0.0; n * n * n];
    let interior = hemi.integrate(|u| {
        let y: Vec<f64> = u.iter().map(|v| v * r).collect();
        g.derivatives(&y, &mut dg);
        let mut acc = 0.0;
        for i in 0..n {
            let mut t = 0.0;
            for j in 0..n {
                t += dg[(i * n + j) * n + j] - dg[(j * n + j) * n + i];
            }
            acc += t * u[i];
        }
        acc
    }) * r.powf(nf - 1.0);
    let mut gm = vec![0.0; n * n];
    let boundary = equator.integrate(|u| {
        let y: Vec<f64> = u.iter().map(|v| v * r).collect();
        g.metric(&y, &mut gm);
        (0..n - 1).map(|a| gm[(n - 1) * n + a] * u[a]).sum()
    }) * r.powf(nf - 2.0);
    (interior, boundary)
}

/// Largest `κ` considered by the rate fit.
const MAX_RATE: f64 = 40.0;

/// Fit `f = m + c R^{−κ}` through the last three points; `None` unless the
/// differences shrink with a consistent sign.
fn fit_rate(radii: &[f64], f: &[f64]) -> Option<(f64, f64)> {
    let k = radii.len();
    let (r1, r2, r3) = (radii[k - 3], radii[k - 2], radii[k - 1]);
    let (d1, d2) = (f[k - 3] - f[k - 2], f[k - 2] - f[k - 1]);
    if d1 == 0.0 || d1 * d2 <= 0.0 || d2.abs() >= d1.abs() {
        return None;
    }
    let target = d1 / d2;
    let ratio = |kappa: f64| (r1.powf(-kappa) - r2.powf(-kappa)) / (r2.powf(-kappa) - r3.powf(-kappa));
    // `ratio` increases from its κ→0 limit to ∞.
    let (mut lo, mut hi) = (1e-8, MAX_RATE);
    if !(ratio(lo) < target && ratio(hi) > target) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = 0.5 * (lo + hi);
    let c = d2 / (r2.powf(-kappa) - r3.powf(-kappa));
    Some((f[k - 1] - c * r3.powf(-kappa), kappa))
}

/// Mass flux at each radius and its extrapolation to `R → ∞`.
pub fn mass(g: &dyn AsymptoticMetric, radii: &[f64], resolution: usize) -> Result<FluxResult> {
    check_radii(radii)?;
    let dim = g.dim();
    let n = dim.n;
    let p = g.decay_order();
    if !(p > (n as f64 - 2.0) / 2.0) {
        return Err(Error::domain(format!("decay order {p} must exceed (n−2)/2")));
    }
    let hemi = hemisphere_rule(n, resolution);
    let equator = equator_rule(n, resolution);
    let consts: Vec<f64> = radii.iter().map(|&r| decay_constant(g, &hemi, r)).collect();
    if p.is_finite() && consts[consts.len() - 1] > 10.0 * consts[0] + FLAT_TOL {
        return Err(Error::domain(format!(
            "|g − δ|·R^p grows from {:.3e} to {:.3e}: the metric does not decay at order {p}",
            consts[0],
            consts[consts.len() - 1]
        )));
    }
    let parts: Vec<(f64, f64)> = radii.par_iter().map(|&r| flux_at(g, &hemi, &equator, r)).collect();
    let flux_values: Vec<f64> = parts.iter().map(|(a, b)| a + b).collect();
    let scale = flux_values.iter().fold(1.0, |m: f64, v| m.max(v.abs()));
    let spread = flux_values.iter().fold(0.0, |m: f64, v| m.max((v - flux_values[0]).abs()));
    let (status, extrapolated_mass, rate) = if spread <= FLAT_TOL * scale {
        (FluxStatus::Converged, Some(flux_values[flux_values.len() - 1]), None)
    } else if radii.len() < 3 {
        (FluxStatus::TooFewRadii, None, None)
    } else {
        let shrinking = flux_values
            .windows(3)
            .all(|w| (w[0] - w[1]) * (w[1] - w[2]) > 0.0 && (w[1] - w[2]).abs() < (w[0] - w[1]).abs());
        match fit_rate(radii, &flux_values) {
            Some((m, kappa)) if shrinking => (FluxStatus::Extrapolated, Some(m), Some(kappa)),
            _ => (FluxStatus::NotConvergent, None, None),
        }
    };
    Ok(FluxResult {
        radii: radii.to_vec(),
        flux_values,
        interior_terms: parts.iter().map(|p| p.0).collect(),
        boundary_terms: parts.iter().map(|p| p.1).collect(),
        extrapolated_mass,
        rate,
        status,
    })
}

/// Mass of the conformally flat metric with parameter `m`: `2(n−1) ω_{n−1} m`.
pub fn conformal_mass_closed_form(dim: Dim, m: f64) -> Result<f64> {
    Ok(2.0 * (dim.nf() - 1.0) * sphere_volume(dim.n - 1)? * m)
}

/// A symmetric 2-tensor field with first derivatives.
pub trait SymmetricTensorField: Sync {
    fn dim(&self) -> Dim;
    /// `h_ij(y)` into `out[i*n + j]`.
    fn value(&self, y: &[f64], out: &mut [f64]);
    /// `∂_k h_ij(y)` into `out[(i*n + j)*n + k]`.
    fn derivatives(&self, y: &[f64], out: &mut [f64]);
}

impl SymmetricTensorField for PerturbationTensor {
    fn dim(&self) -> Dim {
        PerturbationTensor::dim(self)
    }
    fn value(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.jet(y, 0).value);
    }
    fn derivatives(&self, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.jet(y, 1).d1);
    }
}

/// A radial function `r ↦ (f(r), f′(r))`.
#[derive(Clone)]
pub struct RadialFn {
    f: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
}

impl std::fmt::Debug for RadialFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RadialFn")
    }
}

fn fundamental_pair(n: usize, r: f64) -> (f64, f64) {
    let nf = n as f64;
    (r.powf(2.0 - nf), (2.0 - nf) * r.powf(1.0 - nf))
}

impl RadialFn {
    pub fn new(f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        RadialFn { f: Arc::new(f) }
    }

    /// `|y|^{2−n}`.
    pub fn fundamental(dim: Dim) -> Self {
        let n = dim.n;
        Self::new(move |r| fundamental_pair(n, r))
    }

    /// `|y|^{2−n} + c`.
    pub fn fundamental_plus(dim: Dim, c: f64) -> Self {
        let n = dim.n;
        Self::new(move |r| {
            let (v, d) = fundamental_pair(n, r);
            (v + c, d)
        })
    }

    pub fn eval(&self, r: f64) -> (f64, f64) {
        (self.f)(r)
    }
}

/// `h_ij(y) = χ(|y|) H_ij(y)`.
#[derive(Debug, Clone)]
pub struct ProfiledTensor {
    pub tensor: PerturbationTensor,
    pub profile: RadialFn,
}

impl SymmetricTensorField for ProfiledTensor {
    fn dim(&self) -> Dim {
        self.tensor.dim()
    }
    fn value(&self, y: &[f64], out: &mut [f64]) {
        let (chi, _) = self.profile.eval(norm(y));
        for (o, v) in out.iter_mut().zip(self.tensor.jet(y, 0).value) {
            *o = chi * v;
        }
    }
    fn derivatives(&self, y: &[f64], out: &mut [f64]) {
        let n = self.dim().n;
        let r = norm(y);
        let (chi, dchi) = self.profile.eval(r);
        let jet = self.tensor.jet(y, 1);
        for ij in 0..n * n {
            for k in 0..n {
                let radial = if r > 0.0 { dchi * y[k] / r } else { 0.0 };
                out[ij * n + k] = chi * jet.d1[ij * n + k] + radial * jet.value[ij];
            }
        }
    }
}

/// The two parts of the flux integral and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxI {
    pub perturbation_term: f64,
    pub green_term: f64,
    pub value: f64,
}

/// Flux integral over the upper hemisphere of radius `rho ∈ (0, 1]`.
pub fn flux_i(h: &dyn SymmetricTensorField, green: &RadialFn, rho: f64, resolution: usize) -> Result<FluxI> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::domain(format!("rho must lie in (0, 1], got {rho}")));
    }
    let n = h.dim().n;
    let nf = n as f64;
    let hemi = hemisphere_rule(n, resolution);
    let mut hv = vec![0.0; n * n];
    let mut dh = vec![0.0; n * n * n];
    let pert = hemi.integrate(|u| {
        let y: Vec<f64> = u.iter().map(|v| v * rho).collect();
        h.value(&y, &mut hv);
        h.derivatives(&y, &mut dh);
        let mut acc = 0.0;
        for i in 0..n {
            let mut t = 0.0;
            for j in 0..n {
                t += rho * rho * dh[(i * n + j) * n + j] - 2.0 * nf * y[j] * hv[i * n + j];
            }
            acc += t * u[i];
        }
        acc
    }) * -rho.powf(2.0 - 2.0 * nf)
        * rho.powf(nf - 1.0);
    let green_term = hemi.integrate(|_| {
        let (ry, dry) = fundamental_pair(n, rho);
        let (g, dg) = green.eval(rho);
        ry * dg - g * dry
    }) * 4.0
        * (nf - 1.0)
        / (nf - 2.0)
        * rho.powf(nf - 1.0);
    Ok(FluxI {
        perturbation_term: pert,
        green_term,
        value: pert + green_term,
    })
}

use rayon::prelude::*;
use serde::Serialize;

use super::{minimize_subcritical, BackgroundGeometry, MinimizeOptions, MinimizerResult, SubcriticalProblem};
use crate::error::{Error, Result};
use crate::halfspace::{Dim, Weights};
use crate::variational::initial_guess;

/// `q_k = q_crit − 0.5·2^{−k}` for `k = 0..=6`.
pub fn default_schedule(dim: Dim) -> Vec<f64> {
    let qc = dim.critical_exponent();
    (0..=6).map(|k| qc - 0.5 * 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitStep {
    pub q: f64,
    pub mu: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalLimit {
    pub q_crit: f64,
    pub steps: Vec<LimitStep>,
    /// Polynomial extrapolation of `μ_q` to `q = q_crit` through all converged steps.
    pub y_extrapolated: Option<f64>,
    /// Change of the extrapolate when the step farthest from `q_crit` is dropped.
    pub extrapolation_error: Option<f64>,
    pub all_converged: bool,
    /// Minimizer at the last exponent of the schedule.
    #[serde(skip)]
    pub last: Option<MinimizerResult>,
}

fn check_schedule(schedule: &[f64], q_crit: f64) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::config("q schedule is empty"));
    }
    if schedule.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("q schedule must be strictly increasing"));
    }
    if schedule.iter().any(|&q| !(q > 1.0 && q < q_crit)) {
        return Err(Error::config(format!("every q must lie in (1, {q_crit})")));
    }
    Ok(())
}

/// Value at `x = 0` of the interpolating polynomial through `(xs, ys)` (Neville).
pub fn neville_at_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    let m = xs.len();
    for level in 1..m {
        for i in 0..m - level {
            let (xi, xj) = (xs[i], xs[i + level]);
            p[i] = (xj * p[i] - xi * p[i + 1]) / (xj - xi);
        }
    }
    p[0]
}

/// Runs the subcritical schedule with warm starts and extrapolates to the critical exponent.
pub fn critical_limit(
    geom: &BackgroundGeometry,
    weights: Weights,
    schedule: &[f64],
    opts: &MinimizeOptions,
    seed: u64,
) -> Result<CriticalLimit> {
    let q_crit = geom.dim().critical_exponent();
    check_schedule(schedule, q_crit)?;
    let mut init = initial_guess(geom.mesh.clone(), seed);
    let mut steps = Vec::with_capacity(schedule.len());
    let mut last = None;
    for &q in schedule {
        let prob = SubcriticalProblem::new(geom.clone(), weights, q)?;
        let res = minimize_subcritical(&prob, &init, opts)?;
        steps.push(LimitStep {
            q,
            mu: res.mu,
            el_residual: res.el_residual,
            iterations: res.iterations,
            converged: res.converged,
        });
        if res.u.min() > 0.0 {
            init = res.u.clone();
        }
        last = Some(res);
    }
    let all_converged = steps.iter().all(|s| s.converged);
    let good: Vec<&LimitStep> = steps.iter().filter(|s| s.converged).collect();
    let (y_extrapolated, extrapolation_error) = if good.len() >= 2 {
        let xs: Vec<f64> = good.iter().map(|s| q_crit - s.q).collect();
        let ys: Vec<f64> = good.iter().map(|s| s.mu).collect();
        let full = neville_at_zero(&xs, &ys);
        let reduced = neville_at_zero(&xs[1..], &ys[1..]);
        (Some(full), Some((full - reduced).abs()))
    } else {
        (None, None)
    };
    Ok(CriticalLimit {
        q_crit,
        steps,
        y_extrapolated,
        extrapolation_error,
        all_converged,
        last,
    })
}

/// Curvatures of the metric `u^{4/(n−2)} g₀` built from a near-critical minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConformalCurvatures {
    #[serde(rename = "R_g")]
    pub r_g: f64,
    pub h_g: f64,
    /// Mean curvature after rescaling to `R_g = 1`; absent when `a = 0`.
    pub h_normalized: Option<f64>,
}

/// Constant curvatures `R_g = aμ(∫u^{2n/(n−2)})^{−2/n}`, `h_g = bμ(∫_∂u^{2(n−1)/(n−2)})^{−1/(n−1)}`
/// for `u` rescaled to the critical normalization, and `h_g/√R_g`.
pub fn conformal_curvatures(result: &MinimizerResult, weights: Weights, geom: &BackgroundGeometry) -> Result<ConformalCurvatures> {
    let dim = geom.dim();
    let q_crit = dim.critical_exponent();
    if q_crit - result.q > 1e-2 + 1e-12 {
        return Err(Error::domain(format!(
            "curvatures need a near-critical minimizer (q within 1e-2 of {q_crit}), got q = {}",
            result.q
        )));
    }
    if !result.u.same_mesh(&geom.mesh) {
        return Err(Error::config("minimizer lives on a different mesh"));
    }
    let n = dim.nf();
    let crit = SubcriticalProblem {
        geometry: geom.clone(),
        weights,
        q: q_crit,
    };
    let u = result.u.values();
    let scale = 1.0 / crit.constraint_values(u).sqrt();
    let u: Vec<f64> = u.iter().map(|v| v * scale).collect();
    let vol = geom.mesh.integrate_pow(&u, 2.0 * n / (n - 2.0));
    let bdy = geom.mesh.boundary_integrate_pow(&u, 2.0 * (n - 1.0) / (n - 2.0));
    let mu = result.mu;
    let r_g = weights.a * mu * vol.powf(-2.0 / n);
    let h_g = if weights.b == 0.0 {
        0.0
    } else {
        weights.b * mu * bdy.powf(-1.0 / (n - 1.0))
    };
    let h_normalized = if weights.a > 0.0 && r_g > 0.0 {
        Some(h_g / r_g.sqrt())
    } else {
        None
    };
    Ok(ConformalCurvatures { r_g, h_g, h_normalized })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "Y_estimate")]
    pub y_estimate: Option<f64>,
    #[serde(rename = "R_g")]
    pub r_g: Option<f64>,
    pub h_g: Option<f64>,
    pub h_normalized: Option<f64>,
    pub error: Option<String>,
}

impl SweepCell {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.y_estimate.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub relative_tolerance: f64,
    /// `Y` non-increasing in `a` along every fixed-`b` row.
    pub non_increasing_in_a: bool,
    /// `Y` non-increasing in `b` along every fixed-`a` column.
    pub non_increasing_in_b: bool,
    pub violations: Vec<String>,
    pub cells_ok: usize,
    pub cells_total: usize,
}

/// Results on the grid `a_values × b_values`, row-major in `b` then `a`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub cells: Vec<SweepCell>,
    pub monotonicity: MonotonicityReport,
}

impl SweepTable {
    pub fn cell(&self, ia: usize, ib: usize) -> &SweepCell {
        &self.cells[ib * self.a_values.len() + ia]
    }
}

/// Relative tolerance of the monotonicity checks.
pub const MONOTONE_TOL: f64 = 1e-3;

fn run_cell(geom: &BackgroundGeometry, a: f64, b: f64, schedule: &[f64], opts: &MinimizeOptions, seed: u64) -> SweepCell {
    let mut cell = SweepCell {
        a,
        b,
        y_estimate: None,
        r_g: None,
        h_g: None,
        h_normalized: None,
        error: None,
    };
    let outcome = Weights::new(a, b).and_then(|w| {
        let lim = critical_limit(geom, w, schedule, opts, seed)?;
        let curv = match &lim.last {
            Some(last) => Some(conformal_curvatures(last, w, geom)?),
            None => None,
        };
        Ok((lim, curv))
    });
    match outcome {
        Ok((lim, curv)) => {
            cell.y_estimate = lim.y_extrapolated;
            if let Some(c) = curv {
                cell.r_g = Some(c.r_g);
                cell.h_g = Some(c.h_g);
                cell.h_normalized = c.h_normalized;
            }
            if !lim.all_converged {
                cell.error = Some("minimization did not reach tolerance".into());
            }
        }
        Err(e) => cell.error = Some(e.to_string()),
    }
    cell
}

/// Critical-limit estimates on a weight grid, with monotonicity checks.
///
/// `jobs` bounds the number of worker threads; cell results do not depend on it.
pub fn sweep_ab(
    geom: &BackgroundGeometry,
    a_values: &[f64],
    b_values: &[f64],
    schedule: &[f64],
    opts: &MinimizeOptions,
    seed: u64,
    jobs: usize,
) -> Result<SweepTable> {
    if a_values.is_empty() || b_values.is_empty() {
        return Err(Error::config("weight grid is empty"));
    }
    check_schedule(schedule, geom.dim().critical_exponent())?;
    let pairs: Vec<(f64, f64)> = b_values
        .iter()
        .flat_map(|&b| a_values.iter().map(move |&a| (a, b)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let cells: Vec<SweepCell> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(a, b)| run_cell(geom, a, b, schedule, opts, seed))
            .collect()
    });
    let monotonicity = check_monotone(a_values, b_values, &cells);
    Ok(SweepTable {
        a_values: a_values.to_vec(),
        b_values: b_values.to_vec(),
        cells,
        monotonicity,
    })
}

fn check_monotone(a_values: &[f64], b_values: &[f64], cells: &[SweepCell]) -> MonotonicityReport {
    let na = a_values.len();
    let at = |ia: usize, ib: usize| cells[ib * na + ia].y_estimate.filter(|_| cells[ib * na + ia].ok());
    let mut violations = Vec::new();
    let mut in_a = true;
    let mut in_b = true;
    // Walk each axis in increasing parameter order.
    let order = |vals: &[f64]| {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
        idx
    };
    let oa = order(a_values);
    let ob = order(b_values);
    for &ib in &ob {
        for w in oa.windows(2) {
            if let (Some(y0), Some(y1)) = (at(w[0], ib), at(w[1], ib)) {
                if y1 > y0 + MONOTONE_TOL * y0.abs() {
                    in_a = false;
                    violations.push(format!(
                        "b={}: Y(a={})={} > Y(a={})={}",
                        b_values[ib], a_values[w[1]], y1, a_values[w[0]], y0
                    ));
                }
            }
        }
    }
    for &ia in &oa {
        for w in ob.windows(2) {
            if let (Some(y0), Some(y1)) = (at(ia, w[0]), at(ia, w[1])) {
                if y1 > y0 + MONOTONE_TOL * y0.abs() {
                    in_b = false;
                    violations.push(format!(
                        "a={}: Y(b={})={} > Y(b={})={}",
                        a_values[ia], b_values[w[1]], y1, b_values[w[0]], y0
                    ));
                }
            }
        }
    }
    MonotonicityReport {
        relative_tolerance: MONOTONE_TOL,
        non_increasing_in_a: in_a,
        non_increasing_in_b: in_b,
        violations,
        cells_ok: cells.iter().filter(|c| c.ok()).count(),
        cells_total: cells.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub base: Weights,
    pub deltas: Vec<f64>,
    /// `|Y(a+δ, b) − Y(a, b)|` per delta.
    pub gaps: Vec<f64>,
    /// `gap(δ_k) / gap(δ_{k+1})`.
    pub ratios: Vec<f64>,
}

impl ContinuityReport {
    /// Gaps shrink and, for halving deltas, halve within `[lo, hi]`.
    pub fn halves(&self, lo: f64, hi: f64) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().all(|r| *r >= lo && *r <= hi)
    }
}

/// `|Y(a+δ) − Y(a)|` along a sequence of shifts in `a`.
pub fn continuity_check(
    geom: &BackgroundGeometry,
    base: Weights,
    deltas: &[f64],
    schedule: &[f64],
    opts: &MinimizeOptions,
    seed: u64,
    jobs: usize,
) -> Result<ContinuityReport> {
    if deltas.is_empty() {
        return Err(Error::config("no continuity shifts given"));
    }
    let mut a_values = vec![base.a];
    a_values.extend(deltas.iter().map(|d| base.a + d));
    let table = sweep_ab(geom, &a_values, &[base.b], schedule, opts, seed, jobs)?;
    let y = |i: usize| {
        table.cells[i]
            .y_estimate
            .filter(|_| table.cells[i].ok())
            .ok_or_else(|| Error::Numerical(format!("cell a={} failed", a_values[i])))
    };
    let y0 = y(0)?;
    let gaps = (1..a_values.len()).map(|i| Ok((y(i)? - y0).abs())).collect::<Result<Vec<f64>>>()?;
    let ratios = gaps.windows(2).map(|g| g[0] / g[1]).collect();
    Ok(ContinuityReport {
        base,
        deltas: deltas.to_vec(),
        gaps,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_polynomials() {
        let xs = [0.5, 0.25, 0.125, 0.0625];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x + 0.5 * x * x * x).collect();
        assert!((neville_at_zero(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn schedule_shape() {
        let s = default_schedule(Dim::new(3).unwrap());
        assert_eq!(s.len(), 7);
        assert!((s[0] - 4.5).abs() < 1e-15 && (s[6] - (5.0 - 0.5 / 64.0)).abs() < 1e-15);
        assert!(check_schedule(&[4.0, 3.0], 5.0).is_err());
        assert!(check_schedule(&[4.0, 5.0], 5.0).is_err());
        assert!(check_schedule(&[], 5.0).is_err());
    }
}

//! Machine-readable outputs of the variational runs.
//!
//! Floats are written with Rust's shortest round-trip formatting (scientific
//! outside `[1e-4, 1e16)`), so equal inputs give byte-identical files.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::halfspace::{yamabe_halfspace, Weights};
use crate::variational::{BackgroundGeometry, ConformalCurvatures, CriticalLimit, MonotonicityReport, SweepTable};

pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e16).contains(&a) || !x.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(format!("csv: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Numerical(format!("csv: {e}"))
}

/// One row per exponent of the schedule.
pub fn solve_csv(limit: &CriticalLimit) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["q", "mu_q", "el_residual", "iterations", "converged"]).map_err(csv_err)?;
    for s in &limit.steps {
        w.write_record([
            fmt_f64(s.q),
            fmt_f64(s.mu),
            fmt_f64(s.el_residual),
            s.iterations.to_string(),
            s.converged.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// `|x − y| / |y|`.
fn relative_gap(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSummary {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub geometry: String,
    #[serde(rename = "M")]
    pub elements: usize,
    pub seed: u64,
    #[serde(rename = "Y_extrapolated")]
    pub y_extrapolated: Option<f64>,
    pub extrapolation_error: Option<f64>,
    #[serde(rename = "Y_halfspace")]
    pub y_halfspace: f64,
    /// The half-space value when the geometry is the flat unit ball, where the two coincide.
    #[serde(rename = "Y_closed_form_if_ball")]
    pub y_closed_form_if_ball: Option<f64>,
    pub relative_gap: Option<f64>,
    /// `Y_extrapolated ≤ Y_halfspace` up to the extrapolation error.
    pub below_halfspace: Option<bool>,
    #[serde(rename = "R_g")]
    pub r_g: Option<f64>,
    pub h_g: Option<f64>,
    pub h_normalized: Option<f64>,
    pub all_converged: bool,
}

impl SolveSummary {
    pub fn new(
        limit: &CriticalLimit,
        weights: Weights,
        geom: &BackgroundGeometry,
        geometry: &str,
        curvatures: Option<ConformalCurvatures>,
        seed: u64,
    ) -> Result<Self> {
        let dim = geom.dim();
        let y_half = yamabe_halfspace(weights, dim)?;
        let ball = geom.is_unit_ball().then_some(y_half);
        let relative_gap = match (limit.y_extrapolated, ball) {
            (Some(y), Some(c)) => Some(relative_gap(y, c)),
            _ => None,
        };
        let below = limit
            .y_extrapolated
            .map(|y| y <= y_half + limit.extrapolation_error.unwrap_or(0.0) + 1e-12 * y_half.abs());
        Ok(SolveSummary {
            n: dim.n,
            a: weights.a,
            b: weights.b,
            geometry: geometry.to_string(),
            elements: geom.mesh.elements(),
            seed,
            y_extrapolated: limit.y_extrapolated,
            extrapolation_error: limit.extrapolation_error,
            y_halfspace: y_half,
            y_closed_form_if_ball: ball,
            relative_gap,
            below_halfspace: below,
            r_g: curvatures.map(|c| c.r_g),
            h_g: curvatures.map(|c| c.h_g),
            h_normalized: curvatures.and_then(|c| c.h_normalized),
            all_converged: limit.all_converged,
        })
    }
}

/// Per-cell comparison with the half-space value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGap {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "Y_estimate")]
    pub y_estimate: Option<f64>,
    #[serde(rename = "Y_halfspace")]
    pub y_halfspace: Option<f64>,
    /// Only on the unit ball, where the half-space value is the exact answer.
    pub relative_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub geometry: String,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub seed: u64,
    pub monotonicity: MonotonicityReport,
    pub success_fraction: f64,
    pub cells: Vec<CellGap>,
    /// `h_normalized` strictly increasing in `b` for each fixed `a`, over cells where it exists.
    pub h_normalized_increasing_in_b: bool,
}

fn cell_gaps(table: &SweepTable, geom: &BackgroundGeometry) -> Vec<CellGap> {
    let dim = geom.dim();
    let ball = geom.is_unit_ball();
    table
        .cells
        .iter()
        .map(|c| {
            let y_half = Weights::new(c.a, c.b).and_then(|w| yamabe_halfspace(w, dim)).ok();
            let relative_gap = match (c.y_estimate.filter(|_| c.ok()), y_half) {
                (Some(y), Some(h)) if ball => Some(relative_gap(y, h)),
                _ => None,
            };
            CellGap {
                a: c.a,
                b: c.b,
                y_estimate: c.y_estimate,
                y_halfspace: y_half,
                relative_gap,
            }
        })
        .collect()
}

/// One row per cell, `b`-major, with failures in the `error` column.
pub fn sweep_csv(table: &SweepTable, geom: &BackgroundGeometry) -> Result<String> {
    let gaps = cell_gaps(table, geom);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "a",
        "b",
        "Y_estimate",
        "R_g",
        "h_g",
        "h_normalized",
        "Y_halfspace",
        "relative_gap",
        "error",
    ])
    .map_err(csv_err)?;
    for (c, g) in table.cells.iter().zip(&gaps) {
        w.write_record([
            fmt_f64(c.a),
            fmt_f64(c.b),
            opt(c.y_estimate),
            opt(c.r_g),
            opt(c.h_g),
            opt(c.h_normalized),
            opt(g.y_halfspace),
            opt(g.relative_gap),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

fn h_increasing(table: &SweepTable) -> bool {
    let mut ob: Vec<usize> = (0..table.b_values.len()).collect();
    ob.sort_by(|&i, &j| table.b_values[i].total_cmp(&table.b_values[j]));
    (0..table.a_values.len()).all(|ia| {
        let hs: Vec<f64> = ob
            .iter()
            .filter_map(|&ib| {
                let c = table.cell(ia, ib);
                c.h_normalized.filter(|_| c.ok())
            })
            .collect();
        hs.windows(2).all(|w| w[1] > w[0])
    })
}

impl SweepReport {
    pub fn new(table: &SweepTable, geom: &BackgroundGeometry, geometry: &str, seed: u64) -> Self {
        let m = &table.monotonicity;
        SweepReport {
            n: geom.dim().n,
            geometry: geometry.to_string(),
            a_values: table.a_values.clone(),
            b_values: table.b_values.clone(),
            seed,
            monotonicity: m.clone(),
            success_fraction: m.cells_ok as f64 / m.cells_total.max(1) as f64,
            cells: cell_gaps(table, geom),
            h_normalized_increasing_in_b: h_increasing(table),
        }
    }
}

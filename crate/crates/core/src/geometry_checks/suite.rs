//! Named identity checks with fixed test fields and thresholds.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::*;
use crate::halfspace::{sample_points, verify_bubble_pde, Weights};

/// Bubble equation and Einstein identity residuals must lie below this.
pub const BUBBLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    Bubble,
    Einstein,
    LinScalar,
    LinMean,
    SecondVar,
    StBoundary,
}

impl Identity {
    pub const ALL: [Identity; 6] = [
        Identity::Bubble,
        Identity::Einstein,
        Identity::LinScalar,
        Identity::LinMean,
        Identity::SecondVar,
        Identity::StBoundary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Identity::Bubble => "bubble",
            Identity::Einstein => "einstein",
            Identity::LinScalar => "lin-scalar",
            Identity::LinMean => "lin-mean",
            Identity::SecondVar => "second-var",
            Identity::StBoundary => "st-boundary",
        }
    }

    /// `"all"` expands to every identity.
    pub fn parse_selector(s: &str) -> Result<Vec<Identity>> {
        if s == "all" {
            Ok(Self::ALL.to_vec())
        } else {
            Ok(vec![s.parse()?])
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Identity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|i| i.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|i| i.name()).collect();
            Error::config(format!("unknown identity '{s}', expected one of {} or all", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub dim: Dim,
    pub eps: f64,
    pub weights: Weights,
    /// Used for `n = 3`; other dimensions run analytic checks only.
    pub ladder: Ladder,
    /// Random points for analytic checks when no ladder runs.
    pub samples: usize,
    pub seed: u64,
}

impl SuiteOptions {
    pub fn new(dim: Dim) -> Self {
        SuiteOptions {
            dim,
            eps: 1.0,
            weights: Weights { a: 1.0, b: 1.0 },
            ladder: Ladder::default(),
            samples: 100,
            seed: 0,
        }
    }

    fn finite_differences(&self) -> bool {
        self.dim.n == 3
    }

    fn points(&self, interior: bool) -> Vec<Vec<f64>> {
        if self.finite_differences() {
            self.ladder.probes(self.dim, interior)
        } else {
            sample_points(self.dim, self.samples, self.ladder.extent, interior, self.seed)
        }
    }
}

/// Finite-difference residuals of one relation over the ladder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderResult {
    pub relation: String,
    #[serde(flatten)]
    pub convergence: Convergence,
}

/// One test case of an identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult {
    pub case: String,
    pub analytic_residual: Option<f64>,
    pub ladders: Vec<LadderResult>,
    pub pass: bool,
}

impl CaseResult {
    fn analytic(case: &str, residual: f64, tol: f64) -> Self {
        CaseResult {
            case: case.to_string(),
            analytic_residual: Some(residual),
            ladders: Vec::new(),
            pass: residual <= tol,
        }
    }

    fn with_ladder(mut self, relation: &str, c: Convergence) -> Self {
        self.pass &= passes_band(&c);
        self.ladders.push(LadderResult {
            relation: relation.to_string(),
            convergence: c,
        });
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub identity: Identity,
    /// `"finite_difference"` when a ladder ran, otherwise `"analytic"`.
    pub mode: &'static str,
    pub analytic_tol: f64,
    pub order_band: (f64, f64),
    pub cases: Vec<CaseResult>,
    pub pass: bool,
}

fn standard_fields(dim: Dim, seed: u64) -> Result<Vec<(&'static str, AdmissibleVectorField)>> {
    Ok(vec![
        ("dilation", AdmissibleVectorField::dilation(dim)),
        ("translation", AdmissibleVectorField::translation(dim, 0)?),
        ("random_cubic", AdmissibleVectorField::random_cubic(dim, seed)),
    ])
}

/// Grid for the bubble equation: the finest ladder level for `n = 3`,
/// otherwise the coarsest admissible spacing.
fn bubble_grid(opts: &SuiteOptions) -> Result<HalfGrid> {
    if opts.finite_differences() {
        opts.ladder.grid(opts.dim, opts.ladder.levels - 1)
    } else {
        let l = opts.ladder.extent;
        HalfGrid::new(opts.dim, l / crate::numerics::grid::MIN_INTERIOR as f64, l)
    }
}

/// Largest dimension the suite accepts; the bubble grid has `17^{n−1}·9` nodes.
pub const MAX_SUITE_DIM: usize = 6;

pub fn run_identity(identity: Identity, opts: &SuiteOptions) -> Result<IdentityReport> {
    if opts.dim.n > MAX_SUITE_DIM {
        return Err(Error::config(format!("identity checks support n <= {MAX_SUITE_DIM}")));
    }
    if opts.samples == 0 {
        return Err(Error::config("sample count must be positive"));
    }
    if opts.finite_differences() {
        opts.ladder.check()?;
    }
    let dim = opts.dim;
    let bubble = Bubble::for_weights(opts.weights, dim, opts.eps)?;
    let fd = opts.finite_differences();
    let mut tol = ANALYTIC_TOL;
    let mut cases = Vec::new();
    match identity {
        Identity::Bubble => {
            tol = BUBBLE_TOL;
            let r = verify_bubble_pde(&bubble, bubble.t_c, &bubble_grid(opts)?);
            cases.push(CaseResult::analytic("interior", r.interior_residual, tol));
            cases.push(CaseResult::analytic("boundary", r.boundary_residual, tol));
        }
        Identity::Einstein => {
            tol = BUBBLE_TOL;
            let pts = sample_points(dim, opts.samples, 2.0 * opts.ladder.extent, true, opts.seed);
            cases.push(CaseResult::analytic("random_points", verify_einstein_identity(&bubble, &pts), tol));
        }
        Identity::LinScalar => {
            let pts = opts.points(true);
            for (name, v) in standard_fields(dim, opts.seed)? {
                let mut c = CaseResult::analytic(name, linearized_scalar_residual(&v, &bubble, &pts)?, tol);
                if fd {
                    c = c.with_ladder("scalar", verify_linearized_scalar(&v, &bubble, &opts.ladder)?);
                }
                cases.push(c);
            }
        }
        Identity::LinMean => {
            let pts = opts.points(false);
            for (name, v) in standard_fields(dim, opts.seed)? {
                let mut c = CaseResult::analytic(name, linearized_mean_residual(&v, &bubble, &pts)?, tol);
                if fd {
                    c = c.with_ladder("mean", verify_linearized_mean(&v, &bubble, &opts.ladder)?);
                }
                cases.push(c);
            }
        }
        Identity::SecondVar => {
            let pts = opts.points(true);
            let mut fields = standard_fields(dim, opts.seed)?;
            fields.push(("crafted", AdmissibleVectorField::crafted(&bubble, opts.seed)));
            for (name, v) in &fields {
                let r = second_variation_residual(v, HInput::KillingOfV, &bubble, &pts)?;
                let mut c = CaseResult::analytic(name, r, tol);
                if fd {
                    c = c.with_ladder("div_xi", verify_second_variation(v, HInput::KillingOfV, &bubble, &opts.ladder)?);
                }
                cases.push(c);
            }
            let h0 = PerturbationTensor::zero(dim);
            let bpts = opts.points(false);
            let crafted = &fields[3].1;
            let r = xi_boundary_residual(crafted, HInput::Tensor(&h0), &bubble, &bpts)?;
            cases.push(CaseResult::analytic("xi_normal_boundary", r, tol));
        }
        Identity::StBoundary => {
            let pts = opts.points(false);
            let fields = [
                ("dilation", AdmissibleVectorField::dilation(dim)),
                ("crafted", AdmissibleVectorField::crafted(&bubble, opts.seed)),
            ];
            for (name, v) in &fields {
                let r = st_boundary_residuals(v, HInput::KillingOfV, &bubble, &pts)?;
                let worst = r.iter().copied().fold(0.0, f64::max);
                let mut c = CaseResult::analytic(name, worst, tol);
                if fd {
                    let rep = verify_st_boundary(v, HInput::KillingOfV, &bubble, &opts.ladder)?;
                    c.pass &= rep.passes();
                    c = c.with_ladder("normal_nn", rep.normal_nn).with_ladder("normal_ab", rep.normal_ab);
                }
                cases.push(c);
            }
        }
    }
    let pass = cases.iter().all(|c| c.pass);
    Ok(IdentityReport {
        identity,
        mode: if fd && !matches!(identity, Identity::Bubble | Identity::Einstein) {
            "finite_difference"
        } else {
            "analytic"
        },
        analytic_tol: tol,
        order_band: ORDER_BAND,
        cases,
        pass,
    })
}

use std::collections::BTreeMap;
use std::path::Path;

use byamabe::geometry_checks::{run_identity, Identity, IdentityReport, Ladder, SuiteOptions};
use byamabe::halfspace::{halfspace_summary, Branch, Dim, Weights};
use byamabe::mass_flux::{builtin_metric, conformal_mass_closed_form, mass as flux_mass, FluxResult, FluxStatus, DEFAULT_RESOLUTION};
use byamabe::numerics::{make_annulus_mesh, make_ball_mesh};
use byamabe::report::{solve_csv, sweep_csv, SolveSummary, SweepReport};
use byamabe::variational::{conformal_curvatures, critical_limit, default_schedule, sweep_ab, BackgroundGeometry, MinimizeOptions};
use serde::Serialize;

use crate::config::{CapArgs, Global, MassArgs, MeshArgs, SolveArgs, SweepArgs, VerifyArgs};
use crate::CliError;

/// Fraction of sweep cells that must succeed for exit code 0.
const SWEEP_SUCCESS_FRACTION: f64 = 0.9;

fn dim(n: Option<usize>) -> Result<Dim, CliError> {
    Ok(Dim::new(n.unwrap_or(3))?)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

/// Prints `json` and, when an output directory was given, saves it as `name`.
fn emit(global: &Global, name: &str, json: &str) -> Result<(), CliError> {
    print!("{json}");
    if let Some(dir) = &global.out {
        write(dir, name, json)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CapResiduals {
    balance: Option<f64>,
    formula_gap: Option<f64>,
}

#[derive(Serialize)]
struct CapOutput {
    n: usize,
    a: f64,
    b: f64,
    branch: Branch,
    r: Option<f64>,
    #[serde(rename = "T_c")]
    t_c: Option<f64>,
    #[serde(rename = "A")]
    a_cap: Option<f64>,
    #[serde(rename = "B")]
    b_cap: Option<f64>,
    #[serde(rename = "Y")]
    y: f64,
    identity_residuals: CapResiduals,
}

pub fn cap(args: CapArgs, global: &Global) -> Result<(), CliError> {
    let d = dim(args.n)?;
    let w = Weights::new(args.a.unwrap_or(1.0), args.b.unwrap_or(1.0))?;
    let s = halfspace_summary(w, d)?;
    let out = CapOutput {
        n: s.n,
        a: s.a,
        b: s.b,
        branch: s.branch,
        r: s.cap.map(|c| c.r),
        t_c: s.cap.map(|c| c.t_c),
        a_cap: s.cap.map(|c| c.a_cap),
        b_cap: s.cap.map(|c| c.b_cap),
        y: s.y,
        identity_residuals: CapResiduals {
            balance: s.balance_residual,
            formula_gap: s.formula_gap,
        },
    };
    emit(global, "cap.json", &to_json(&out)?)
}

struct Scheme {
    geom: BackgroundGeometry,
    name: String,
    schedule: Vec<f64>,
    opts: MinimizeOptions,
}

fn scheme(d: Dim, mesh: &MeshArgs) -> Result<Scheme, CliError> {
    let m = mesh.elements.unwrap_or(2000);
    let name = mesh.geometry.clone().unwrap_or_else(|| "ball".into());
    let radial = match name.as_str() {
        "ball" => make_ball_mesh(m, d, mesh.grading.unwrap_or(1.0))?,
        "annulus" => make_annulus_mesh(m, d, mesh.r_in.unwrap_or(0.5), mesh.r_out.unwrap_or(1.0))?,
        other => return Err(CliError::Config(format!("unknown geometry '{other}', expected ball or annulus"))),
    };
    let mut opts = MinimizeOptions::default();
    if let Some(t) = mesh.tol {
        if !(t > 0.0) {
            return Err(CliError::Config(format!("tol must be positive, got {t}")));
        }
        opts.tol = t;
    }
    if let Some(k) = mesh.max_iter {
        opts.max_iter = k;
    }
    Ok(Scheme {
        geom: BackgroundGeometry::flat(radial)?,
        name,
        schedule: mesh.q.clone().unwrap_or_else(|| default_schedule(d)),
        opts,
    })
}

pub fn solve(args: SolveArgs, global: &Global) -> Result<(), CliError> {
    let d = dim(args.n)?;
    let w = Weights::new(args.a.unwrap_or(1.0), args.b.unwrap_or(1.0))?;
    let s = scheme(d, &args.mesh)?;
    let dir = global.out_dir_or_cwd();
    let limit = critical_limit(&s.geom, w, &s.schedule, &s.opts, global.seed)?;
    write(&dir, "solve.csv", &solve_csv(&limit)?)?;
    // Curvatures need a near-critical last exponent; custom schedules may not have one.
    let curv = limit.last.as_ref().and_then(|last| conformal_curvatures(last, w, &s.geom).ok());
    let summary = SolveSummary::new(&limit, w, &s.geom, &s.name, curv, global.seed)?;
    let json = to_json(&summary)?;
    write(&dir, "solve_summary.json", &json)?;
    print!("{json}");
    if !limit.all_converged {
        let worst = limit.steps.iter().filter(|s| !s.converged).map(|s| s.q.to_string()).collect::<Vec<_>>();
        return Err(CliError::NonConvergence(format!(
            "minimization did not reach tolerance at q = {}",
            worst.join(", ")
        )));
    }
    Ok(())
}

pub fn sweep(args: SweepArgs, global: &Global) -> Result<(), CliError> {
    let d = dim(args.n)?;
    let grid = vec![0.5, 1.0, 2.0, 4.0];
    let a_values = args.a_values.unwrap_or_else(|| grid.clone());
    let b_values = args.b_values.unwrap_or(grid);
    let s = scheme(d, &args.mesh)?;
    let table = sweep_ab(&s.geom, &a_values, &b_values, &s.schedule, &s.opts, global.seed, global.jobs)?;
    let dir = global.out_dir_or_cwd();
    write(&dir, "sweep.csv", &sweep_csv(&table, &s.geom)?)?;
    let report = SweepReport::new(&table, &s.geom, &s.name, global.seed);
    let json = to_json(&report)?;
    write(&dir, "sweep_report.json", &json)?;
    print!("{json}");
    if report.success_fraction < SWEEP_SUCCESS_FRACTION {
        return Err(CliError::NonConvergence(format!(
            "{} of {} cells succeeded",
            report.monotonicity.cells_ok, report.monotonicity.cells_total
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput {
    n: usize,
    eps: f64,
    a: f64,
    b: f64,
    seed: u64,
    /// Absent when only analytic checks ran.
    ladder: Option<Ladder>,
    identities: Vec<IdentityReport>,
    failed: Vec<Identity>,
    pass: bool,
}

pub fn verify(args: VerifyArgs, global: &Global) -> Result<(), CliError> {
    let selector = args.identity.clone().unwrap_or_else(|| "all".into());
    let ids = Identity::parse_selector(&selector)?;
    let d = dim(args.n)?;
    let mut opts = SuiteOptions::new(d);
    opts.eps = args.eps.unwrap_or(1.0);
    opts.weights = Weights::new(args.a.unwrap_or(1.0), args.b.unwrap_or(1.0))?;
    let default = Ladder::default();
    opts.ladder = Ladder {
        h0: args.h0.unwrap_or(default.h0),
        levels: args.levels.unwrap_or(default.levels),
        extent: args.extent.unwrap_or(default.extent),
    };
    opts.samples = args.samples.unwrap_or(opts.samples);
    opts.seed = global.seed;
    let mut reports = Vec::with_capacity(ids.len());
    for id in ids {
        reports.push(run_identity(id, &opts).map_err(|e| match e {
            byamabe::Error::Precondition { .. } => CliError::Verification(format!("{id}: {e}")),
            other => CliError::from(other),
        })?);
    }
    let failed = failed_identities(&reports);
    let out = VerifyOutput {
        n: d.n,
        eps: opts.eps,
        a: opts.weights.a,
        b: opts.weights.b,
        seed: opts.seed,
        ladder: (d.n == 3).then_some(opts.ladder),
        identities: reports,
        pass: failed.is_empty(),
        failed: failed.clone(),
    };
    emit(global, "verify.json", &to_json(&out)?)?;
    check_failures(&failed)
}

fn failed_identities(reports: &[IdentityReport]) -> Vec<Identity> {
    reports.iter().filter(|r| !r.pass).map(|r| r.identity).collect()
}

fn check_failures(failed: &[Identity]) -> Result<(), CliError> {
    if failed.is_empty() {
        return Ok(());
    }
    let names: Vec<&str> = failed.iter().map(|i| i.name()).collect();
    Err(CliError::Verification(names.join(", ")))
}

#[derive(Serialize)]
struct MassOutput {
    metric: String,
    n: usize,
    parameters: BTreeMap<String, f64>,
    resolution: usize,
    /// Exact mass of the conformally flat family.
    closed_form: Option<f64>,
    #[serde(flatten)]
    result: FluxResult,
}

pub fn mass(args: MassArgs, global: &Global) -> Result<(), CliError> {
    let metric = args
        .metric
        .clone()
        .ok_or_else(|| CliError::Config("--metric is required (flat, conformal or twist)".into()))?;
    let d = dim(args.n)?;
    let mut params = BTreeMap::new();
    if let Some(m) = args.m {
        params.insert("m".to_string(), m);
    }
    if let Some(c) = args.c {
        params.insert("c".to_string(), c);
    }
    let g = builtin_metric(&metric, &params, d)?;
    let radii = args.radii.clone().unwrap_or_else(|| vec![20.0, 40.0, 80.0]);
    let resolution = args.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let result = flux_mass(g.as_ref(), &radii, resolution)?;
    let closed_form = match (metric.as_str(), args.m) {
        ("conformal", Some(m)) => Some(conformal_mass_closed_form(d, m)?),
        _ => None,
    };
    let status = result.status;
    let per_radius: Vec<String> = result
        .radii
        .iter()
        .zip(&result.flux_values)
        .map(|(r, f)| format!("R={r}: {f}"))
        .collect();
    let out = MassOutput {
        metric,
        n: d.n,
        parameters: params,
        resolution,
        closed_form,
        result,
    };
    emit(global, "mass.json", &to_json(&out)?)?;
    if status == FluxStatus::NotConvergent {
        return Err(CliError::NonConvergence(format!("flux does not settle; {}", per_radius.join(", "))));
    }
    Ok(())
}

//! Command-line and config-file settings. Flags override the file, which
//! overrides the defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "byamabe", version, about = "Boundary Yamabe invariants and identity checks")]
pub struct Cli {
    /// JSON config file; its sections are overridden by flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV and JSON files.
    #[arg(long, global = true, env = "YAMABE_OUT_DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every randomized choice.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the sweep.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cap solution and half-space invariant.
    Cap(CapArgs),
    /// Subcritical scheme and critical extrapolation on one geometry.
    Solve(SolveArgs),
    /// Critical-limit estimates on a grid of weights.
    Sweep(SweepArgs),
    /// Curvature identities around the bubble.
    Verify(VerifyArgs),
    /// Mass of a built-in asymptotically flat metric.
    Mass(MassArgs),
}

/// Fills every `None` in `$dst` from `$src`.
macro_rules! fill {
    ($dst:ident, $src:ident; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshArgs {
    /// `ball` or `annulus`.
    #[arg(long)]
    pub geometry: Option<String>,
    #[arg(long)]
    pub r_in: Option<f64>,
    #[arg(long)]
    pub r_out: Option<f64>,
    /// Number of radial elements.
    #[arg(long = "mesh-size", short = 'M')]
    #[serde(rename = "M")]
    pub elements: Option<usize>,
    /// Boundary clustering exponent of the ball mesh (1 is uniform).
    #[arg(long)]
    pub grading: Option<f64>,
    /// Subcritical exponents, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// Euler–Lagrange residual tolerance of each minimization.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[command(flatten)]
    #[serde(default)]
    pub mesh: MeshArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub a_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub b_values: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(default)]
    pub mesh: MeshArgs,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyArgs {
    /// bubble, einstein, lin-scalar, lin-mean, second-var, st-boundary or all.
    #[arg(long)]
    pub identity: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    /// Coarsest spacing of the refinement ladder.
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// Half-width `L` of the box `[−L, L]^{n−1} × [0, L]`.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Random points for the analytic checks.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassArgs {
    /// flat, conformal or twist.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Mass parameter of the conformal family.
    #[arg(long, allow_negative_numbers = true)]
    pub m: Option<f64>,
    /// Strength of the boundary twist.
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
    /// Gauss–Legendre nodes per angular direction.
    #[arg(long)]
    pub resolution: Option<usize>,
}

/// Contents of `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    #[serde(default)]
    pub cap: CapArgs,
    #[serde(default)]
    pub solve: SolveArgs,
    #[serde(default)]
    pub sweep: SweepArgs,
    #[serde(default)]
    pub verify: VerifyArgs,
    #[serde(default)]
    pub mass: MassArgs,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

impl CapArgs {
    pub fn merge(mut self, file: CapArgs) -> Self {
        fill!(self, file; n, a, b);
        self
    }
}

impl MeshArgs {
    pub fn merge(mut self, file: MeshArgs) -> Self {
        fill!(self, file; geometry, r_in, r_out, elements, grading, q, tol, max_iter);
        self
    }
}

impl SolveArgs {
    pub fn merge(mut self, file: SolveArgs) -> Self {
        fill!(self, file; n, a, b);
        self.mesh = self.mesh.merge(file.mesh);
        self
    }
}

impl SweepArgs {
    pub fn merge(mut self, file: SweepArgs) -> Self {
        fill!(self, file; n, a_values, b_values);
        self.mesh = self.mesh.merge(file.mesh);
        self
    }
}

impl VerifyArgs {
    pub fn merge(mut self, file: VerifyArgs) -> Self {
        fill!(self, file; identity, n, eps, a, b, h0, levels, extent, samples);
        self
    }
}

impl MassArgs {
    pub fn merge(mut self, file: MassArgs) -> Self {
        fill!(self, file; metric, n, m, c, radii, resolution);
        self
    }
}

/// Settings shared by every subcommand after merging.
#[derive(Debug, Clone)]
pub struct Global {
    /// Explicitly requested output directory, if any.
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub jobs: usize,
}

impl Global {
    pub fn resolve(cli: &Cli, file: &FileConfig) -> Result<Self, CliError> {
        let jobs = cli
            .jobs
            .or(file.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        Ok(Global {
            out: cli.out.clone().or_else(|| file.out.clone()),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            jobs,
        })
    }

    /// Directory for files of commands whose main product is a file.
    pub fn out_dir_or_cwd(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

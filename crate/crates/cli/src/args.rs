//! Command-line arguments. Each subcommand's argument struct doubles as the
//! schema of its `--config` JSON file; flags given on the command line take
//! precedence over file values, and unknown file keys are rejected.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "mocon",
    version,
    about = "Mechanical systems controlled by moving constraints: simulation, geometry and vibrational stabilization"
)]
#[command(propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a catalog system under a constant, sinusoidal or feedback control.
    Simulate(SimulateArgs),
    /// Curvature tensor, N-fit classification and geodesic curvature limits.
    Geometry(GeometryArgs),
    /// Rank, effective-potential, linearization and Lyapunov tests at a target.
    Stability(StabilityArgs),
    /// Round trip through the time-reparametrized graph system.
    Reparam(ReparamArgs),
    /// List the built-in systems.
    Catalog(CatalogArgs),
}

/// Fills the fields left unset on the command line from the config file.
pub trait Resolve: Sized + DeserializeOwned {
    fn config_path(&self) -> Option<&Path>;
    fn merge(self, file: Self) -> Self;

    fn resolve(self) -> CliResult<Self> {
        let Some(path) = self.config_path().map(Path::to_path_buf) else {
            return Ok(self);
        };
        let text = std::fs::read_to_string(&path).map_err(|source| CliError::ConfigFile {
            path: path.clone(),
            source,
        })?;
        let file: Self = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Ok(self.merge(file))
    }
}

macro_rules! prefer_cli {
    ($cli:ident, $file:ident; $($opt:ident),* ; flags: $($flag:ident),* ; lists: $($list:ident),*) => {{
        $( $cli.$opt = $cli.$opt.or($file.$opt); )*
        $( $cli.$flag = $cli.$flag || $file.$flag; )*
        $( if $cli.$list.is_empty() { $cli.$list = $file.$list; } )*
        $cli
    }};
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateArgs {
    /// JSON file with any of these options (snake_case keys).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Catalog system name.
    #[arg(long)]
    pub system: Option<String>,
    /// Gravitational acceleration (default 9.8).
    #[arg(long)]
    pub g: Option<f64>,
    /// Pivot mass of the pendulum systems (default 1).
    #[arg(long)]
    pub pivot_mass: Option<f64>,
    /// Initial reduced coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q0: Option<Vec<f64>>,
    /// Initial reduced momenta.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p0: Option<Vec<f64>>,
    /// Initial control position (the vibration centre ū for sinusoidal controls).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u0: Option<Vec<f64>>,
    /// Reference point for the containment metrics (default 0).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q_ref: Option<Vec<f64>>,
    /// Horizon (default 10).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Fixed RK4 step (default min(1e-3, vibration period / 50)).
    #[arg(long)]
    pub dt: Option<f64>,
    /// `const`, `sin:w=..,omega=..[,phase=..][;..]` or
    /// `feedback:target=..[,ubar=..][,omega=..][,poles=[..]][,selection=gamma+|gamma-|tuple][,k=..]`.
    /// Vectors inside a control use brackets, e.g. `w=[0,6]`.
    /// Repeat to sweep several controls.
    #[arg(long)]
    pub control: Vec<String>,
    /// Containment radius for the exit time (default π/2).
    #[arg(long)]
    pub exit_radius: Option<f64>,
    /// Required ratio between the slowest vibration and the system's natural
    /// frequency (default 20; 0 disables the check).
    #[arg(long)]
    pub separation: Option<f64>,
    /// Parallel runs when several controls are given (default 1).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory for trajectory CSV and metrics JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Resolve for SimulateArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn merge(mut self, file: Self) -> Self {
        prefer_cli!(self, file; system, g, pivot_mass, q0, p0, u0, q_ref, t_end, dt, exit_radius, separation, jobs, out; flags: ; lists: control)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub pivot_mass: Option<f64>,
    /// Classify the metric as generic, N-fit or strongly N-fit over `--box`.
    #[arg(long)]
    pub classify: bool,
    /// Sampling box, e.g. `q:0.1..3,u:-1..1` or `q1:..,q2:..,u:..`.
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub sample_box: Option<String>,
    /// Number of quasi-random samples (default 256).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Classification tolerance (default 1e-9).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Report the curvature tensor at `--at-q`, `--at-u`.
    #[arg(long)]
    pub tensor: bool,
    /// Recover `½ Σ ∂e/∂q w w` from geodesic displacements and compare with the tensor.
    #[arg(long)]
    pub curvature_limit: bool,
    /// Control direction for the curvature limit.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub w: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at_q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at_u: Option<Vec<f64>>,
    /// Directory for the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Resolve for GeometryArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn merge(mut self, file: Self) -> Self {
        prefer_cli!(self, file; system, g, pivot_mass, sample_box, samples, tol, w, at_q, at_u, out; flags: classify, tensor, curvature_limit; lists: )
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StabilityArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub pivot_mass: Option<f64>,
    /// Target `q=..[;u=..]` (default the origin).
    #[arg(long, allow_hyphen_values = true)]
    pub target: Option<String>,
    /// Equilibrium and rank test of the vibration matrix for the tuple `--w`.
    #[arg(long)]
    pub rank_test: bool,
    /// Solve for a full-rank tuple instead of taking `--w`.
    #[arg(long)]
    pub solve_w: bool,
    /// Tuple size for `--solve-w` (default ⌈N/M⌉).
    #[arg(long)]
    pub k: Option<usize>,
    /// Tuple vector, comma separated; repeat for several vectors.
    #[arg(long, allow_hyphen_values = true)]
    pub w: Vec<String>,
    /// Strict-minimum test of the effective potential plus `--beta`.
    #[arg(long)]
    pub effective: bool,
    /// `quad` (`|u − ū|²`, default) or `none`.
    #[arg(long)]
    pub beta: Option<String>,
    /// Kalman test of the cone-selection linearization.
    #[arg(long)]
    pub linearize: bool,
    /// `gamma+`, `gamma-` or `tuple` (default by system).
    #[arg(long)]
    pub selection: Option<String>,
    /// Weak-Lyapunov test of the effective Hamiltonian on the averaged system.
    #[arg(long)]
    pub lyapunov: bool,
    /// Half-width of the Lyapunov sampling box (default 0.5).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Use `½ Σ ∂E/∂q w w` in the equilibrium condition (default true).
    #[arg(long)]
    pub half_quadratic: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Resolve for StabilityArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn merge(mut self, file: Self) -> Self {
        prefer_cli!(self, file; system, g, pivot_mass, target, k, beta, selection, radius, half_quadratic, out; flags: rank_test, solve_w, effective, linearize, lyapunov; lists: w)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReparamArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub pivot_mass: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub q0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub u0: Option<Vec<f64>>,
    /// `const` or `sin:...` (default `sin:w=0.5,omega=5`).
    #[arg(long)]
    pub control: Option<String>,
    /// Horizon (default 2).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// RK4 step in t; the graph system uses the matched s-grid (default 1e-4).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Directory for the warp CSV (`t,s`) and the JSON report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Resolve for ReparamArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn merge(mut self, file: Self) -> Self {
        prefer_cli!(self, file; system, g, pivot_mass, q0, p0, u0, control, t_end, dt, out; flags: ; lists: )
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Show one system, with its reduced blocks at `--at-q`, `--at-u`.
    #[arg(long)]
    pub system: Option<String>,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub pivot_mass: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at_q: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub at_u: Option<Vec<f64>>,
}

impl Resolve for CatalogArgs {
    fn config_path(&self) -> Option<&Path> {
        self.config.as_deref()
    }

    fn merge(mut self, file: Self) -> Self {
        prefer_cli!(self, file; system, g, pivot_mass, at_q, at_u; flags: ; lists: )
    }
}

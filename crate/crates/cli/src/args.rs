//! Command-line surface. The parsed [`Cli`] doubles as the run configuration
//! echoed into every JSON report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use renorm_core::lattice::DEFAULT_PROBES;
use renorm_core::obstacle::DEFAULT_TOL;
use serde::Serialize;

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "renorm", version, about = "Renormalized Coulomb energies of lattices, torus configurations and the constant-obstacle problem")]
pub struct Cli {
    /// Write the report to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Seed for every random choice
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Energy of a single lattice
    Lattice(LatticeArgs),
    /// Energy over a grid of the fundamental domain, with the refined minimizer
    ModuliScan(ScanArgs),
    /// Minimal-energy point configurations on a torus
    Fekete(FeketeArgs),
    /// Constant-obstacle problem and its verification suites
    Obstacle(ObstacleArgs),
}

/// Series truncation overrides.
#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct SeriesArgs {
    /// Absolute tolerance of the series tails
    #[arg(long, default_value_t = 1e-14)]
    pub abs_tol: f64,
    /// Terms summed before the tail test applies
    #[arg(long, default_value_t = 1)]
    pub truncation_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteArg {
    Eta,
    Fourier,
    /// Difference against the lattice given by --vs
    ZetadiffVs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LatticeArgs {
    /// Modulus tau = A + iB
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true,
          required_unless_present = "basis", conflicts_with = "basis")]
    pub tau: Option<Vec<f64>>,
    /// Basis vectors; the density follows from the covolume
    #[arg(long, num_args = 4, value_names = ["UX", "UY", "VX", "VY"], allow_negative_numbers = true)]
    pub basis: Option<Vec<f64>>,
    /// Density (points per area 2 pi); defaults to 1
    #[arg(long, conflicts_with = "basis")]
    pub m: Option<f64>,
    #[arg(long, value_enum, default_value_t = RouteArg::Eta)]
    pub route: RouteArg,
    /// Reference modulus for zetadiff-vs
    #[arg(long, num_args = 2, value_names = ["A", "B"], allow_negative_numbers = true,
          default_values_t = [0.5, 0.5 * 3f64.sqrt()])]
    pub vs: Vec<f64>,
    /// Probe radii for the fourier route
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PROBES)]
    pub probes: Vec<f64>,
    #[command(flatten)]
    pub series: SeriesArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub a_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub a_max: f64,
    #[arg(long, default_value_t = 0.5 * 3f64.sqrt(), allow_negative_numbers = true)]
    pub b_min: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub b_max: f64,
    /// Nodes per axis
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    /// Also write the grid values (a, b, W) here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TorusArg {
    Square,
    Triangular,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeketeArgs {
    /// Number of points
    #[arg(long, required_unless_present_any = ["elkies", "conjecture"])]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = TorusArg::Square)]
    pub torus: TorusArg,
    /// Random starts besides the first
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    #[arg(long, default_value_t = 5000)]
    pub max_iters: usize,
    /// Stop when the largest gradient component falls below this
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step_init: f64,
    /// Excess table over n = n-min..=n-max
    #[arg(long, conflicts_with_all = ["n", "conjecture"])]
    pub elkies: bool,
    #[arg(long, default_value_t = 2)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    /// Per-point energies against the triangular value
    #[arg(long, conflicts_with = "n")]
    pub conjecture: bool,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 8])]
    pub n_list: Vec<usize>,
    /// Also write the descent trace of the best run here
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub series: SeriesArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    #[value(name = "propA1")]
    #[serde(rename = "propA1")]
    PropA1,
    GradientBound,
    ScaleLaw,
    Ellipse,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ObstacleArgs {
    /// Unit disk (the default domain)
    #[arg(long, conflicts_with_all = ["ellipse", "polygon"])]
    pub disk: bool,
    /// Axis-aligned ellipse with these semi-axes
    #[arg(long, num_args = 2, value_names = ["AX", "AY"], conflicts_with = "polygon")]
    pub ellipse: Option<Vec<f64>>,
    /// Convex polygon, vertices as x1 y1 x2 y2 ...
    #[arg(long, num_args = 6.., allow_negative_numbers = true)]
    pub polygon: Option<Vec<f64>>,
    /// Grid spacing; 1/128, or 1/256 for the scale-law and ellipse suites
    #[arg(long)]
    pub h: Option<f64>,
    /// Residual tolerance
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Obstacle level
    #[arg(long, conflicts_with = "m_grid")]
    pub m: Option<f64>,
    /// Several obstacle levels
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub m_grid: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    /// Offsets above min h_0 for scale-law
    #[arg(long, value_delimiter = ',', default_values_t = [0.04, 0.02, 0.01])]
    pub offsets: Vec<f64>,
    /// Offset above min h_0 for ellipse
    #[arg(long, default_value_t = 0.03)]
    pub offset: f64,
    /// Inclusion tolerance for ellipse
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    /// Also write the field (x, y, H, active) here
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::grid::GridSpec;

#[derive(Debug, Parser)]
#[command(name = "vacpol", version, about = "Vacuum-polarization kernels, radial screening and charge renormalization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate B(k) on a momentum grid.
    KernelTable(KernelTableArgs),
    /// Screen a radial source: vacuum density profile, observed charge, far field.
    Response(ResponseArgs),
    /// Physical coupling across a sweep of cut-offs.
    Renormalize(RenormalizeArgs),
    /// Energy bracket, pair-creation parameter and envelopes.
    Bounds(BoundsArgs),
    /// Run the numbered acceptance checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Sharp,
    SmoothLinear,
    SmoothCustom,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "sharp")]
    pub model: ModelKind,
    /// Custom profile for smooth-custom: `power:P` (x^P) or `poly:C1,C2,C3`.
    #[arg(long)]
    pub zeta: Option<String>,
    /// Growth exponent of the custom profile.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    Csv,
    Structured,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output file; standard output when omitted. Not part of the embedded
    /// config, so the same run written to two paths gives identical files.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evaluation {
    ClosedForm,
    Quadrature1d,
    Quadrature2d,
    Oracle3d,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelTableArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda: f64,
    /// Momentum grid, `MIN:MAX:N[:log]` or a comma list.
    #[arg(long)]
    pub kgrid: GridSpec,
    /// Absolute tolerance per point.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Evaluation route; closed form for sharp, 2D quadrature otherwise.
    #[arg(long, value_enum)]
    pub evaluation: Option<Evaluation>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// `gaussian`, `exp`, `ball`, `table:PATH` or `none`.
    #[arg(long, default_value = "gaussian")]
    pub source: String,
    /// Total charge Z (default 1; checked against the integral for tables).
    #[arg(long)]
    pub charge: Option<f64>,
    /// Width: sigma, decay length or radius.
    #[arg(long, default_value_t = 1.0)]
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Direct,
    FixedPoint,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ResponseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Radii for the density profile.
    #[arg(long, default_value = "0.01:20:100:log")]
    pub rgrid: GridSpec,
    /// Momentum grid for the screening solve (default: built-in log grid).
    #[arg(long)]
    pub kgrid: Option<GridSpec>,
    #[arg(long, value_enum, default_value = "direct")]
    pub method: SolveMethod,
    /// Radii of the far-field samples.
    #[arg(long, default_value = "10,20,50")]
    pub far_field: GridSpec,
    /// Tolerance of the fixed-point iteration and of the real-space integrals.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RenormalizeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Cut-off sweep, `MIN:MAX:N[:log]` or a comma list.
    #[arg(long)]
    pub lambda: GridSpec,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundsArgs {
    /// Charge sector q.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub q: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub lambda: f64,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Universal constant of the ionization envelopes (required for them).
    #[arg(long = "constant-C", alias = "constant-c")]
    pub constant_c: Option<f64>,
    /// Request the ionization envelopes.
    #[arg(long)]
    pub envelopes: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TierArg {
    Fast,
    Full,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SelftestArgs {
    #[arg(long, value_enum, default_value = "fast")]
    pub tier: TierArg,
    /// Machine-readable summary file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub corrupt_sign: bool,
}

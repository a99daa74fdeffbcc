use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "stokesreg", version, args_override_self = true, about = "Diffeomorphic registration with Stokes-type regularization")]
pub struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Register a template image to a reference image.
    Register(RegisterArgs),
    /// Search for the smallest β_v whose map keeps det(F₁) above a bound.
    Continue(ContinueArgs),
    /// Recompute deformation diagnostics from a stored velocity.
    Analyze(AnalyzeArgs),
    /// Write a synthetic registration problem.
    Synth(SynthArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    H1,
    H2,
    Nlstokes,
    Tv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OnOff {
    On,
    Off,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemArg {
    Blobs,
    Rectangles,
    Vent,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "h1")]
    pub model: ModelArg,
    #[arg(long, default_value_t = 1e-2)]
    pub beta_v: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub beta_w: f64,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub gamma: u8,
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    /// Enforce ∇·v = 0 (requires --gamma 1).
    #[arg(long)]
    pub incompressible: bool,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_visc: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1e-3)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 50)]
    pub max_outer: usize,
    #[arg(long, value_enum, default_value = "on")]
    pub gauss_newton: OnOff,
    /// Initial number of time steps (default 2·max(n)).
    #[arg(long)]
    pub nt_init: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ImageArgs {
    /// Reference image (PGM or raw scalar field).
    #[arg(long, value_name = "PATH")]
    pub mr: PathBuf,
    /// Template image (PGM or raw scalar field).
    #[arg(long, value_name = "PATH")]
    pub mt: PathBuf,
    /// Presmoothing width in grid cells; 0 disables.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_smooth: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RegisterArgs {
    #[command(flatten)]
    pub images: ImageArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ContinueArgs {
    #[command(flatten)]
    pub register: RegisterArgs,
    /// Smallest admissible min det(F₁).
    #[arg(long, default_value_t = 0.1)]
    pub det_bound: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta_v_init: f64,
    /// Start each solve from the last feasible velocity.
    #[arg(long)]
    pub warm_start: bool,
}

#[derive(Args, Debug, Clone)]
pub struct AnalyzeArgs {
    /// Stored velocity field (raw).
    #[arg(long, value_name = "PATH")]
    pub v: PathBuf,
    /// Number of time steps; defaults to the CFL count from 2·max(n).
    #[arg(long)]
    pub nt: Option<usize>,
    /// Preprocessed reference (raw); with --mt enables residual and gradient reduction.
    #[arg(long, value_name = "PATH", requires = "mt")]
    pub mr: Option<PathBuf>,
    #[arg(long, value_name = "PATH", requires = "mr")]
    pub mt: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Initial time steps of the run that produced `v`, for the gradient reduction.
    #[arg(long)]
    pub nt_init: Option<usize>,
    /// Reference labels (raw or PGM).
    #[arg(long, value_name = "PATH", requires = "lt")]
    pub lr: Option<PathBuf>,
    /// Template labels, transported by `v`.
    #[arg(long, value_name = "PATH", requires = "lr")]
    pub lt: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub upsample: usize,
    #[arg(long, default_value_t = 3.0)]
    pub sigma_factor: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub problem: ProblemArg,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Displacement of the moving part; problem-specific default.
    #[arg(long)]
    pub shift: Option<f64>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read config file {0}: {1}")]
    Read(PathBuf, std::io::Error),
    #[error("{0}:{1}: expected `key = value`")]
    Syntax(PathBuf, usize),
}

/// Parses `key = value` lines into flags; `#` starts a comment. Boolean keys
/// take `true`/`false`.
pub fn config_file_flags(path: &Path) -> Result<Vec<String>, ConfigFileError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigFileError::Read(path.to_path_buf(), e))?;
    let mut flags = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigFileError::Syntax(path.to_path_buf(), no + 1))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() {
            return Err(ConfigFileError::Syntax(path.to_path_buf(), no + 1));
        }
        match value {
            "true" => flags.push(format!("--{key}")),
            "false" => {}
            _ => {
                flags.push(format!("--{key}"));
                flags.push(value.to_string());
            }
        }
    }
    Ok(flags)
}

/// Locates `--config PATH` or `--config=PATH` in raw arguments.
pub fn find_config(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

/// Inserts file flags right after the subcommand so that later command-line
/// occurrences override them.
pub fn merge_config(args: Vec<String>, file_flags: Vec<String>) -> Vec<String> {
    if args.len() < 2 || file_flags.is_empty() {
        return args;
    }
    let mut merged = args[..2].to_vec();
    merged.extend(file_flags);
    merged.extend_from_slice(&args[2..]);
    merged
}

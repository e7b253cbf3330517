mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;

/// Symbols, spectra, numerical ranges and stability regions of delta-delta
/// discretizations of strongly singular convolution operators.
#[derive(Parser, Debug)]
#[command(name = "ddstab", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by all subcommands. Values given on the command line
/// override those read from `--config`.
#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Kernel: sawtooth (ex1), ex2, ex3, ex4, maxwell (ex5). Default ex3.
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    /// Dimension; required for maxwell, checked against the others.
    #[arg(long, global = true)]
    pub d: Option<usize>,
    /// Refinement N, or a comma-separated list where a sequence is accepted.
    #[arg(long = "N", global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Ewald splitting parameter. Default √π.
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Truncation radius of both Ewald sums. Default 4 (d ≤ 2) or 5 (d = 3).
    #[arg(long, global = true)]
    pub trunc: Option<usize>,
    /// Lattice grid convention: cell-centered, vertex-closed, vertex-open.
    /// Default vertex-closed.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Sample points per axis for symbol scans.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format: csv or json. Default csv (json for constants,
    /// stability and solve reports).
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// JSON file with any of the global options as keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run all loops on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample the numerical symbol F on a region of the period cell.
    Symbol(SymbolArgs),
    /// Print the closed-form constants and their series cross-checks.
    Constants,
    /// Regenerate the reference tables with difference columns.
    Tables(TablesArgs),
    /// Assemble the finite section and optionally dump it.
    Assemble(AssembleArgs),
    /// Extreme eigenvalues of the finite sections for one or more N.
    Spectrum(SpectrumArgs),
    /// Boundary of the numerical range of a finite section.
    Numrange(NumrangeArgs),
    /// Classify a spectral parameter or permittivity against the stability region.
    Stability(StabilityArgs),
    /// Solve the shifted system (λI − T)u = f.
    Solve(SolveArgs),
}

#[derive(Args, Debug)]
pub struct SymbolArgs {
    /// full, quarter ([0,π]^d), lozenge (|τ₁ − π| + |τ₂| ≤ π, d = 2) or line ((π, y, 0), d = 3).
    #[arg(long, default_value = "full")]
    pub region: String,
    /// Write eigenvalues (Hermitian) instead of the matrix entries.
    #[arg(long)]
    pub eigs: bool,
}

#[derive(Args, Debug)]
pub struct TablesArgs {
    /// supf, maxev-ex3, maxev-ex2, maxwell or all.
    #[arg(long, default_value = "all")]
    pub table: String,
}

#[derive(Args, Debug)]
pub struct AssembleArgs {
    /// Write the dense matrix to this path.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Dump format: binary or csv.
    #[arg(long, default_value = "binary")]
    pub dump_format: String,
    /// Row limit for dense storage.
    #[arg(long, default_value_t = ddstab::lattice::DEFAULT_DENSE_LIMIT)]
    pub limit: usize,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// lanczos, dense or auto.
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 800)]
    pub max_iter: usize,
}

#[derive(Args, Debug)]
pub struct NumrangeArgs {
    #[arg(long, default_value_t = 64)]
    pub angles: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args, Debug)]
pub struct StabilityArgs {
    /// Spectral parameter "re,im" (or "re").
    #[arg(long, conflicts_with = "eps_r", allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Relative permittivity "re,im", mapped by Clausius–Mossotti.
    #[arg(long, allow_hyphen_values = true)]
    pub eps_r: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// Spectral parameter "re,im" (or "re").
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: String,
    /// Right-hand side: CSV with one "re[,im]" per line or the binary
    /// vector format. All ones when omitted.
    #[arg(long)]
    pub rhs: Option<PathBuf>,
    /// Where to write the solution (CSV or binary by extension .bin).
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// minres, gmres or auto.
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[arg(long, default_value_t = ddstab::solver::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<ddstab::Error> for CliError {
    fn from(e: ddstab::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.global).and_then(|cfg| commands::dispatch(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}

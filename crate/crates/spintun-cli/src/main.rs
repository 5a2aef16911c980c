mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::CmdError;
use config::{FileConfig, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Tunneling actions for an anisotropic large spin, three ways: exact
/// diagonalization, contour integrals on the energy surface, and closed
/// forms, cross-validated.
#[derive(Parser)]
#[command(name = "spintun", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct CommonFlags {
    /// TOML config file with the same flat keys as the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Spin quantum number J (half-integers allowed)
    #[arg(long = "J", global = true)]
    j: Option<f64>,
    /// Anisotropy ratio lambda = k2/k1
    #[arg(long, global = true, conflicts_with_all = ["k1", "k2"])]
    lambda: Option<f64>,
    /// Hard-axis anisotropy k1 (Kelvin)
    #[arg(long, global = true)]
    k1: Option<f64>,
    /// Medium-axis anisotropy k2 (Kelvin)
    #[arg(long, global = true, requires = "k1")]
    k2: Option<f64>,
    #[arg(long, global = true)]
    h_min: Option<f64>,
    #[arg(long, global = true)]
    h_max: Option<f64>,
    #[arg(long, global = true)]
    h_points: Option<usize>,
    /// Comma-separated level indices, e.g. 0,1,2
    #[arg(long, global = true)]
    levels: Option<String>,
    /// Quadrature tolerance; for `verify` it overrides every check tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv or json
    #[arg(long, global = true)]
    format: Option<String>,
    /// Restrict `verify` to checks whose name contains this substring
    #[arg(long, global = true)]
    only: Option<String>,
    /// Monodromy transport steps per loop
    #[arg(long, global = true)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Energy levels and dimensionless energies versus field (Fig.-1-style data)
    Levels(CommonFlags),
    /// ln Delta versus field: diagonalization against the splitting model (Fig.-4-style data)
    Splitting(CommonFlags),
    /// Locate quench fields by scanning and compare with the closed formula
    Quench(CommonFlags),
    /// Closed-form versus numeric-contour actions over the field grid
    Actions(CommonFlags),
    /// Transport the instanton cycle around critical moduli and report jumps
    Monodromy(CommonFlags),
    /// Run the verification suite and emit a JSON report
    Verify(CommonFlags),
}

fn build_config(flags: &CommonFlags) -> Result<RunConfig, config::ConfigError> {
    let file = match &flags.config {
        Some(path) => config::load_file(path)?,
        None => FileConfig::default(),
    };
    RunConfig::build(file, flags)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (flags, run): (&CommonFlags, fn(&RunConfig) -> Result<(), CmdError>) = match &cli.command {
        Command::Levels(f) => (f, commands::cmd_levels),
        Command::Splitting(f) => (f, commands::cmd_splitting),
        Command::Quench(f) => (f, commands::cmd_quench),
        Command::Actions(f) => (f, commands::cmd_actions),
        Command::Monodromy(f) => (f, commands::cmd_monodromy),
        Command::Verify(f) => (f, commands::cmd_verify),
    };
    let cfg = match build_config(flags) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {}", e.0);
            return ExitCode::from(2);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::VerificationFailed) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(CmdError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Numeric(msg)) => {
            eprintln!("numeric failure: {msg}");
            ExitCode::from(3)
        }
    }
}

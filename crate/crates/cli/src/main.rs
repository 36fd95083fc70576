//! `xdmt`: tradeoff curves, IA-fraction optimisation, outage simulation and
//! self-checks for on-off switched interference alignment.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error, 3 IO error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use xdmt_core::dmt::Scheme;
use xdmt_core::exponent::OutageEvent;

#[derive(Parser)]
#[command(name = "xdmt", version, about = "On-off interference alignment DMT toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tradeoff curve d(r) for one scheme.
    Dmt(DmtArgs),
    /// Closed-form optimal IA fraction against a grid search.
    OptA(OptAArgs),
    /// Monte Carlo outage probabilities and the fitted diversity slope.
    Simulate(SimulateArgs),
    /// Degrees of freedom of the IA transceiver from rate slopes.
    DofCheck(DofCheckArgs),
    /// Alignment, rank and exponent self-checks.
    Verify(VerifyArgs),
    /// Outage exponent of one event from its linear programs.
    Exponent(ExponentArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Lp,
    Grid,
}

/// `auto` or a number in [0, 1].
#[derive(Clone, Copy, Debug)]
pub enum AArg {
    Auto,
    Value(f64),
}

fn parse_a(s: &str) -> Result<AArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(AArg::Auto);
    }
    let a: f64 = s.parse().map_err(|_| format!("expected `auto` or a number, got `{s}`"))?;
    if (0.0..=1.0).contains(&a) {
        Ok(AArg::Value(a))
    } else {
        Err(format!("a = {a} outside [0, 1]"))
    }
}

#[derive(Args)]
pub struct DmtArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 0.0)]
    pub r_min: f64,
    /// Defaults to the largest r the scheme supports.
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    #[arg(long, default_value = "auto", value_parser = parse_a)]
    pub a: AArg,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct OptAArgs {
    #[arg(long)]
    pub scheme: Scheme,
    /// Comma-separated multiplexing gains in (0, 4/3].
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 1e-4)]
    pub grid_step: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scheme: Scheme,
    /// `auto` picks the pinned or closed-form optimal fraction.
    #[arg(long, default_value = "auto", value_parser = parse_a)]
    pub a: AArg,
    #[arg(long)]
    pub r: f64,
    #[arg(long, value_delimiter = ',', default_value = "20,30,40,50,60")]
    pub snr_db: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, env = "XDMT_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct DofCheckArgs {
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    #[arg(long, default_value_t = 40.0)]
    pub snr_low_db: f64,
    #[arg(long, default_value_t = 80.0)]
    pub snr_high_db: f64,
    #[arg(long, env = "XDMT_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long, env = "XDMT_SEED", default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub draws: u64,
    /// Alignment residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub exponent_tol: f64,
}

#[derive(Args)]
pub struct ExponentArgs {
    #[arg(long)]
    pub scheme: Scheme,
    #[arg(long)]
    pub event: OutageEvent,
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Lp)]
    pub method: MethodArg,
    /// Grid spacing for `--method grid`.
    #[arg(long, default_value_t = 0.005)]
    pub step: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Dmt(a) => commands::dmt(a),
        Command::OptA(a) => commands::opt_a(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::DofCheck(a) => commands::dof_check(a),
        Command::Verify(a) => commands::verify(a),
        Command::Exponent(a) => commands::exponent(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("xdmt: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

//! `phhs <verb> --config <path> [--out <dir>] [--tolerance-scale <k>]`
//!
//! Exit codes: 0 all checks pass, 2 a numerical check failed, 3 configuration
//! or model error, 4 runtime failure.

mod config;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use config::ScenarioConfig;
use report::Report;
use scenario::RunError;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    Integrate,
    Foliate,
    Monodromy,
    ActionCheck,
    IntegrabilityScan,
    Deform,
    MorsePeriod,
    ConnectionCheck,
}

#[derive(Debug, Parser)]
#[command(name = "phhs", version, about = "Run a pseudo-holomorphic Hamiltonian scenario")]
struct Cli {
    verb: Verb,
    /// JSON scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Directory for summary.json and CSV tables.
    #[arg(long, default_value = "phhs-out")]
    out: PathBuf,
    /// Multiplies every numerical check tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

fn init_threads() -> Result<(), RunError> {
    let Ok(v) = std::env::var("PHHS_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| RunError::Config(format!("PHHS_THREADS must be a positive integer, got `{v}`")))?;
    // Fails only if a pool already exists, which cannot happen this early.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, RunError> {
    if !(cli.tolerance_scale > 0.0 && cli.tolerance_scale.is_finite()) {
        return Err(RunError::Config("--tolerance-scale must be positive".into()));
    }
    init_threads()?;
    let text = std::fs::read_to_string(&cli.config).map_err(|e| RunError::Config(format!("{}: {e}", cli.config.display())))?;
    let cfg = ScenarioConfig::parse(&text).map_err(|e| RunError::Config(e.0))?;
    let mut rep = Report::new(cli.tolerance_scale);
    let verb = match cli.verb {
        Verb::Integrate => scenario::integrate(&cfg, &mut rep).map(|_| "integrate"),
        Verb::Foliate => scenario::foliate(&cfg, &mut rep).map(|_| "foliate"),
        Verb::Monodromy => scenario::monodromy(&cfg, &mut rep).map(|_| "monodromy"),
        Verb::ActionCheck => scenario::action_check(&cfg, &mut rep).map(|_| "action-check"),
        Verb::IntegrabilityScan => scenario::integrability_scan(&cfg, &mut rep).map(|_| "integrability-scan"),
        Verb::Deform => scenario::deform(&cfg, &mut rep).map(|_| "deform"),
        Verb::MorsePeriod => scenario::morse_period(&cfg, &mut rep).map(|_| "morse-period"),
        Verb::ConnectionCheck => scenario::connection_check(&cfg, &mut rep).map(|_| "connection-check"),
    }?;
    let summary = rep.summary(verb, &cfg);
    rep.write(&cli.out, &summary).map_err(|e| RunError::Library(phhs::PhhsError::Invalid(format!("writing {}: {e}", cli.out.display()))))?;
    for c in &rep.checks {
        let cmp = if c.bound == "max" { "≤" } else { "≥" };
        println!("[{}] {}: {:.3e} {cmp} {:.3e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    println!("summary: {}", cli.out.join("summary.json").display());
    Ok(rep.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", e.describe());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

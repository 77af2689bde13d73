use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use etalab::adiabatic::Bracket;
use etalab::suite::{compute, run_suite, Fixture, Quantity, Report, RunConfig, SuiteError};

/// Runs the verification suites or computes one quantity from a fixture.
#[derive(Debug, Parser)]
#[command(name = "etalab", version)]
struct Args {
    /// chern, eta, adiabatic, bundles or all.
    #[arg(long, default_value = "all", conflicts_with = "compute")]
    suite: String,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Multiplies every grid resolution.
    #[arg(long)]
    grid_scale: Option<f64>,
    /// td9 or verbatim.
    #[arg(long)]
    bracket: Option<Bracket>,
    /// winding, eta0, tau or detad.
    #[arg(long, requires = "fixture")]
    compute: Option<String>,
    /// Fixture JSON for `--compute`.
    #[arg(long)]
    fixture: Option<PathBuf>,
}

fn config(args: &Args) -> Result<RunConfig, SuiteError> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::parse(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(scale) = args.grid_scale {
        cfg.set("grid_scale", &scale.to_string())?;
    }
    if let Some(bracket) = args.bracket {
        cfg.bracket = bracket;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

fn run(args: &Args) -> Result<Report, SuiteError> {
    let cfg = config(args)?;
    let report = match (&args.compute, &args.fixture) {
        (Some(q), Some(path)) => compute(q.parse::<Quantity>()?, &Fixture::load(path)?, &cfg)?,
        _ => run_suite(&args.suite, &cfg)?,
    };
    let text = serde_json::to_string_pretty(&report)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(report) => {
            for case in report.failures() {
                eprintln!("FAIL {} [{}] lhs {:.6e} rhs {:.6e} tol {:.1e}", case.name, case.tag, case.lhs, case.rhs, case.tol);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("etalab: {e}");
            ExitCode::from(2)
        }
    }
}

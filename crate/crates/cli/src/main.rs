//! Command-line harness for the gdnls laboratory.
//!
//! Exit codes: 0 success, 2 configuration/validation failure, 3 numerical
//! failure (instability, non-convergence, identity or decay check missed).

mod config;
mod experiments;

use anyhow::Result;
use clap::{Parser, Subcommand};
use config::Spec;
use experiments::RunOutcome;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gdnls", version, about = "Soliton laboratory for the generalized derivative NLS equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment specification.
    #[arg(long)]
    config: PathBuf,
    /// Dotted-path overrides, e.g. --set grid.num_points=2048.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: out/<experiment name>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the RNG seed from the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parameter scans (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the closed-form soliton family against its ODEs and envelopes.
    SolitonCheck(Common),
    /// Integrate the equation and record mass and H1 error histories.
    Evolve(Common),
    /// Scan the interaction residual |chi(t)|_H2 and fit its decay rate.
    ChiScan(Common),
    /// Sweep the velocity scale M and report the separation-condition margin.
    ConditionMargin(Common),
    /// Check the G = Q identity on seeded band-limited fields.
    GqIdentity(Common),
    /// Run the Duhamel fixed-point iteration and report contraction.
    Picard(Common),
    /// Full construction: fixed point, reconstruction, decay fit.
    FullConstruct(Common),
    /// Run every validation rule on a configuration.
    Validate(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::SolitonCheck(c)
            | Command::Evolve(c)
            | Command::ChiScan(c)
            | Command::ConditionMargin(c)
            | Command::GqIdentity(c)
            | Command::Picard(c)
            | Command::FullConstruct(c)
            | Command::Validate(c) => c,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Command::SolitonCheck(_) => "soliton-check",
            Command::Evolve(_) => "evolve",
            Command::ChiScan(_) => "chi-scan",
            Command::ConditionMargin(_) => "condition-margin",
            Command::GqIdentity(_) => "gq-identity",
            Command::Picard(_) => "picard",
            Command::FullConstruct(_) => "full-construct",
            Command::Validate(_) => "validate",
        }
    }
}

fn run(cmd: &Command, spec: &Spec, out: &Path) -> Result<RunOutcome> {
    match cmd {
        Command::SolitonCheck(_) => experiments::run_soliton_check(spec, out),
        Command::Evolve(_) => experiments::run_evolve(spec, out),
        Command::ChiScan(_) => experiments::run_chi_scan(spec, out),
        Command::ConditionMargin(_) => experiments::run_condition_margin(spec, out),
        Command::GqIdentity(_) => experiments::run_gq_identity(spec, out),
        Command::Picard(_) => experiments::run_picard(spec, out),
        Command::FullConstruct(_) => experiments::run_full_construct(spec, out),
        Command::Validate(_) => experiments::run_validate(spec, out),
    }
}

fn classify_error(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<gdnls::Error>() {
        match e {
            gdnls::Error::InvalidArgument(_)
            | gdnls::Error::InvalidParameter(_)
            | gdnls::Error::UnsupportedOrder(_)
            | gdnls::Error::Validation(_)
            | gdnls::Error::UndefinedVStar => 2,
            gdnls::Error::Instability { .. } | gdnls::Error::InvalidState(_) => 3,
            gdnls::Error::Io(_) => 1,
        }
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        1
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();

    #[cfg(feature = "parallel")]
    if common.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(common.threads)
            .build_global()
        {
            eprintln!("warning: could not size the thread pool: {e}");
        }
    }

    let mut spec = match Spec::load(&common.config, &common.overrides) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }

    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
    if let Err(e) = std::fs::create_dir_all(&out) {
        eprintln!("error: creating {}: {e}", out.display());
        return ExitCode::from(1);
    }
    if let Err(e) = experiments::write_manifest(&out, cli.command.kind(), &spec) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }

    match run(&cli.command, &spec, &out) {
        Ok(outcome) => {
            if outcome.pass {
                println!(
                    "{} '{}': ok (artifacts in {})",
                    cli.command.kind(),
                    spec.name,
                    out.display()
                );
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "{} '{}': FAILED: {}",
                    cli.command.kind(),
                    spec.name,
                    outcome.reason.as_deref().unwrap_or("unspecified")
                );
                // configuration problems exit 2, numerical failures 3
                if matches!(cli.command, Command::Validate(_)) {
                    ExitCode::from(2)
                } else {
                    ExitCode::from(3)
                }
            }
        }
        Err(e) => {
            let code = classify_error(&e);
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}

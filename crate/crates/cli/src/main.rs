use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vortex_gas::config::ExperimentConfig;
use vortex_gas::experiment;
use vortex_gas::Error;

/// Monte-Carlo experiments on Poisson gases of Brownian vortex filaments.
#[derive(Parser, Debug)]
#[command(name = "vgas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON experiment config; defaults apply to anything left out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed (overrides mc.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (overrides mc.workers); results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Dotted-path override such as `mc.budget=50000`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Structure functions from both estimators, with scaling fits.
    Structure,
    /// Fitted and theoretical scaling exponents.
    Zeta,
    /// Occupation-moment scan.
    Occupation,
    /// Stratonovich minus Itô under dt halving.
    Corrector,
    /// Poisson moment formula check.
    ValidateMoments,
    /// Homogeneity, isotropy and reflection tests.
    Symmetry,
    /// Kernel invariant suite.
    KernelCheck,
    /// Closed-form moment and exponent tables (no sampling).
    Analytic,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Structure => "structure",
            Command::Zeta => "zeta",
            Command::Occupation => "occupation",
            Command::Corrector => "corrector",
            Command::ValidateMoments => "validate-moments",
            Command::Symmetry => "symmetry",
            Command::KernelCheck => "kernel-check",
            Command::Analytic => "analytic",
        }
    }
}

fn report(e: &Error) -> ExitCode {
    let line = serde_json::json!({
        "error": e.kind(),
        "exit_code": e.exit_code(),
        "message": e.to_string(),
    });
    eprintln!("{line}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut overrides = cli.set.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("mc.seed={s}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("mc.workers={w}"));
    }
    if let Some(o) = &cli.out {
        overrides.push(format!("output.dir={}", serde_json::Value::String(o.to_string_lossy().into_owned())));
    }
    let config = match ExperimentConfig::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    match experiment::run(cli.command.name(), &config) {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            if outcome.exit_code != 0 {
                eprintln!(
                    "{}",
                    serde_json::json!({"error": "check_failed", "exit_code": outcome.exit_code, "message": "one or more checks failed"})
                );
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => report(&e),
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vil::config::{ExperimentConfig, CHECK_NAMES};
use vil::run::{self, Output, RunError};

#[derive(Parser)]
#[command(name = "vil", version, about = "2D Euler vorticity laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration; the preset is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output` in the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Check to run, or `all`; repeatable. Overrides `checks` in the configuration.
    #[arg(long, global = true)]
    check: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the initial data and their norms.
    Synth,
    /// Run the solver and write snapshots and conserved quantities.
    Evolve,
    /// Track the Lagrangian flow of the base run.
    Flow,
    /// Run the diagnostics; exits nonzero when a row is violated.
    Verify,
    /// Inflation experiment over the sweep axes.
    Sweep,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| RunError::new("config", e))?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if !cli.check.is_empty() {
        for c in &cli.check {
            if c != "all" && !CHECK_NAMES.contains(&c.as_str()) {
                return Err(RunError::new(
                    "config",
                    format!("unknown check {c:?}; expected one of all, {}", CHECK_NAMES.join(", ")),
                ));
            }
        }
        cfg.checks = cli.check.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = load(&cli).and_then(|cfg| {
        let out = Output::create(&cfg.output)?;
        match cli.command {
            Command::Synth => run::synth(&cfg, &out).map(|_| true),
            Command::Evolve => run::run_evolve(&cfg, &out).map(|_| true),
            Command::Flow => run::run_flow(&cfg, &out).map(|_| true),
            Command::Sweep => run::run_sweep(&cfg, &out).map(|_| true),
            Command::Verify => {
                let (summary, _) = run::run_verify(&cfg, &out)?;
                run::print_summary(std::io::stdout(), &summary).map_err(|e| RunError::new("output", e))?;
                Ok(summary.passed)
            }
        }
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::{error, info};
use sobolab_core::config::RunConfig;
use sobolab_core::pipeline::{self, Stage};
use sobolab_core::{par, Error};

#[derive(Parser)]
#[command(name = "sobolab", version, about = "Weighted Sobolev, Nash and heat kernel checks on discretized spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the space and write its summary and text serialization.
    BuildSpace(RunArgs),
    /// Estimate the volume growth exponent and check reverse doubling.
    Growth(RunArgs),
    /// Construct and validate the good covering and its graph.
    Covering(RunArgs),
    /// Discrete Poincare and isoperimetric constants of the covering graph.
    Poincare(RunArgs),
    /// Patching and weighted Sobolev inequalities on the test family.
    VerifySobolev(RunArgs),
    /// Weighted Nash inequality (needs eta > 2).
    VerifyNash(RunArgs),
    /// On-diagonal heat kernel decay and the psi lower bound.
    HeatBound(RunArgs),
    /// Every stage in order plus a summary.
    FullPipeline(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration file.
    config: PathBuf,
    /// Report directory; overrides `output` in the config.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Some(n) = std::env::var("SOBOLAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        par::init_workers(n);
    }
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            match e.downcast_ref::<Error>() {
                Some(Error::Config { line, message }) => error!("config error at line {line}: {message}"),
                _ => error!("{e:#}"),
            }
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> anyhow::Result<bool> {
    let (stage, args) = match command {
        Command::BuildSpace(a) => (Stage::BuildSpace, a),
        Command::Growth(a) => (Stage::Growth, a),
        Command::Covering(a) => (Stage::Covering, a),
        Command::Poincare(a) => (Stage::Poincare, a),
        Command::VerifySobolev(a) => (Stage::VerifySobolev, a),
        Command::VerifyNash(a) => (Stage::VerifyNash, a),
        Command::HeatBound(a) => (Stage::HeatBound, a),
        Command::FullPipeline(a) => (Stage::FullPipeline, a),
    };
    let cfg = RunConfig::load(&args.config)?;
    let dir = args.output.clone().unwrap_or_else(|| cfg.output.clone());
    let outcome = pipeline::run(stage, cfg)?;
    outcome.write(&dir).with_context(|| format!("writing reports to {}", dir.display()))?;
    for (name, pass) in &outcome.flags {
        info!("{name}: {}", if *pass { "pass" } else { "FAIL" });
    }
    info!("reports written to {}", dir.display());
    Ok(outcome.all_pass())
}

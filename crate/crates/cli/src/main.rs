mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Status;
use config::Config;
use output::OutDir;

#[derive(Parser)]
#[command(name = "gardner", version, about = "Numerical experiments for Gardner solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the `seed` key.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Profile residuals, kernel and spectrum of the linearised operator.
    SolitonCheck(Common),
    /// Evolve soliton initial data and log the conserved quantities.
    Evolve(Common),
    /// Orbital stability run with modulation tracking.
    Stability(Common),
    /// Second derivative of d(c0) against its closed form.
    Convexity(Common),
    /// Compare a direct run with its scaled counterpart.
    ScalingCheck(Common),
    /// Local existence time and scaling parameter versus initial norm.
    LocalTime(Common),
    /// Random sampling of the trilinear and bilinear X^{s,b} ratios.
    XsbSample(Common),
}

fn run(cli: Cli) -> anyhow::Result<Status> {
    let (name, common) = match &cli.command {
        Command::SolitonCheck(c) => ("soliton-check", c),
        Command::Evolve(c) => ("evolve", c),
        Command::Stability(c) => ("stability", c),
        Command::Convexity(c) => ("convexity", c),
        Command::ScalingCheck(c) => ("scaling-check", c),
        Command::LocalTime(c) => ("local-time", c),
        Command::XsbSample(c) => ("xsb-sample", c),
    };
    let mut cfg = Config::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.set("seed", seed);
    }
    let seed = cfg.get("seed", 0u64)?;
    let out = OutDir::create(&common.out)?;
    match name {
        "soliton-check" => commands::soliton_check(&mut cfg, &out),
        "evolve" => commands::evolve(&mut cfg, &out, seed),
        "stability" => commands::stability(&mut cfg, &out, seed),
        "convexity" => commands::convexity(&mut cfg, &out),
        "scaling-check" => commands::scaling_check(&mut cfg, &out, seed),
        "local-time" => commands::local_time(&mut cfg, &out),
        _ => commands::xsb_sample(&mut cfg, &out, seed),
    }
}

fn exit_for(e: &gardner_core::Error) -> ExitCode {
    if e.is_runtime() {
        ExitCode::from(3)
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Failed(e)) => {
            eprintln!("error: run stopped early: {e}");
            exit_for(&e)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<gardner_core::Error>() {
                Some(core) => exit_for(core),
                None => ExitCode::from(2),
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use smalldev::rng::{resolve_workers, with_workers};
use smalldev_cli::{config::Overrides, render, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "smalldev", version, about = "Small-deviation asymptotics of weighted stationary Gaussian sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Asymptotic constants B_p, C and Delta_mu.
    Theory(Common),
    /// Truncated operator spectra and decay-constant fits.
    Spectrum(Common),
    /// Small-ball probability estimates over the eps grid.
    Smallball(Common),
    /// Full pipeline with pass/fail flags; exits 1 if any flag fails.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    samples: Option<u64>,
    /// Print JSON instead of a text summary.
    #[arg(long)]
    json: bool,
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce(&T) -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
    } else {
        print!("{}", text(value));
    }
}

fn run(command: Command) -> Result<bool, CliError> {
    let common = match &command {
        Command::Theory(c) | Command::Spectrum(c) | Command::Smallball(c) | Command::Verify(c) => c,
    };
    let overrides = Overrides { seed: common.seed, samples: common.samples, out: common.out.clone() };
    let cfg = RunConfig::load(&common.config, &overrides)?;
    let json = common.json;
    with_workers(resolve_workers(None), || match &command {
        Command::Theory(_) => smalldev_cli::cmd_theory(&cfg).map(|t| {
            emit(json, &t, render::theory);
            true
        }),
        Command::Spectrum(_) => smalldev_cli::cmd_spectrum(&cfg).map(|s| {
            emit(json, &s, render::spectrum);
            true
        }),
        Command::Smallball(_) => smalldev_cli::cmd_smallball(&cfg).map(|s| {
            emit(json, &s, render::smallball);
            true
        }),
        Command::Verify(_) => smalldev_cli::cmd_verify(&cfg).map(|r| {
            emit(json, &r, render::verify);
            r.passed
        }),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

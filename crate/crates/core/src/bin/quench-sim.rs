//! `quench-sim <experiment> --config <path> [--seed S] [--workers W] [--out DIR]`

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use quench_sim::experiments::{self, Experiment, RunConfig, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "quench-sim", version, about = "Multiple random quench experiments")]
struct Cli {
    /// scaling | parity | bch-verify | convergence-report | deterministic-convergence
    experiment: String,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "out")]
    out: Option<PathBuf>,
}

fn fail(code: i32, kind: &str, msg: &str) -> ExitCode {
    let msg = msg.replace('\n', " ");
    eprintln!("error: kind={kind} code={code} message={msg:?}");
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => return fail(EXIT_CONFIG, "usage", &e.to_string()),
        Err(e) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let experiment = match Experiment::parse(&cli.experiment) {
        Ok(e) => e,
        Err(e) => return fail(EXIT_CONFIG, "config", &e.to_string()),
    };
    let mut config = match RunConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return fail(e.exit_code(), "config", &e.to_string()),
    };
    config.experiment = experiment;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    match experiments::run(&config) {
        Ok(outcome) => {
            for path in &outcome.artifacts {
                println!("{}", path.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            let kind = if e.exit_code() == EXIT_CONFIG {
                "config"
            } else {
                "numerical"
            };
            fail(e.exit_code(), kind, &e.to_string())
        }
    }
}

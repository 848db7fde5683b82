//! Run a JSON recipe the same way the command-line tool does.
//!
//! `cargo run --release --example run_recipe -- crates/core/recipes/bch_verify.json`

use quench_sim::experiments::{run, RunConfig};
use std::path::PathBuf;

fn main() -> quench_sim::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("recipes/convergence_report.json"));
    let config = RunConfig::load(&path)?;
    let outcome = run(&config)?;
    println!("{}", serde_json::to_string_pretty(&outcome.report["results"])?);
    for artifact in &outcome.artifacts {
        println!("wrote {}", artifact.display());
    }
    std::process::exit(outcome.exit_code);
}

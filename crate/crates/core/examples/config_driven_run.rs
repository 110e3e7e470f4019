//! Runs an experiment from a TOML config and writes its report and tables.
//!
//! `cargo run --example config_driven_run -- crates/core/examples/configs/counterexample.toml out/cx`

use std::path::PathBuf;

use reflected_flow::experiment::{run, validate, RunOptions};

fn main() -> reflected_flow::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs/counterexample.toml")
    });
    let out_dir = args.next().map(PathBuf::from).or_else(|| Some(std::env::temp_dir().join("reflected-flow-example")));
    validate(&config)?;
    let (outcome, files) = run(&config, &RunOptions { threads: None, out_dir, seed: None })?;
    for check in &outcome.report.checks {
        let verdict = if check.passed { "ok" } else { "FAILED" };
        println!("{:<40} {:>12.5e}  (threshold {:.3e}) {verdict}", check.name, check.value, check.threshold);
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

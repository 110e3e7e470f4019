use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use reflected_flow::experiment::{run, validate, RunOptions};

#[derive(Parser)]
#[command(name = "reflected-flow", version, about = "Run reflected-flow experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json plus CSV tables.
    Run {
        config: PathBuf,
        #[arg(long, env = "RBM_FLOW_THREADS")]
        threads: Option<usize>,
        #[arg(long, env = "RBM_FLOW_OUT_DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, threads, out, seed } => {
            match run(&config, &RunOptions { threads, out_dir: out, seed }) {
                Ok((outcome, files)) => {
                    for c in &outcome.report.checks {
                        let verdict = if c.passed { "ok" } else { "FAILED" };
                        println!("{verdict:>6}  {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
                    }
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    if outcome.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(2)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { config } => match validate(&config) {
            Ok(diags) if diags.is_empty() => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Ok(diags) => {
                for d in diags {
                    eprintln!("{}: {d}", config.display());
                }
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
    }
}

//! Config-driven experiments. A TOML file names the experiment kind, the
//! domain and the numerical parameters; a run writes `report.json` plus CSV
//! tables, each carrying the library version and the config echo.

mod config;
mod output;
mod runs;

use std::path::{Path, PathBuf};

pub use config::{validate, Diagnostic, ExperimentConfig, ExperimentKind, Tolerances};
pub use output::{Check, Outcome, Report, Table};
pub use runs::{
    counterexample, deterministic_stability, excursion_scaling, ladder, random_trajectory, rbm_revuz, split_residual,
};

use crate::error::{Error, Result};

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Runs an experiment in memory, on `threads` workers when given.
pub fn execute(config: &ExperimentConfig, threads: Option<usize>) -> Result<Outcome> {
    let job = || match config.kind {
        ExperimentKind::DeterministicStability => deterministic_stability(config),
        ExperimentKind::RbmRevuz => rbm_revuz(config),
        ExperimentKind::ExcursionScaling => excursion_scaling(config),
        ExperimentKind::EpsilonLadder => ladder(config),
        ExperimentKind::Counterexample => counterexample(config),
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// Loads `path`, applies `opts`, runs, and writes the outputs. Returns the
/// outcome and the files written.
pub fn run(path: &Path, opts: &RunOptions) -> Result<(Outcome, Vec<PathBuf>)> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = opts.seed {
        config.seed = Some(seed);
    }
    let out_dir = opts.out_dir.clone().or_else(|| config.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let outcome = execute(&config, opts.threads)?;
    let files = outcome.write(&out_dir)?;
    Ok((outcome, files))
}

//! Scenario runners. Each consumes a validated [`ExperimentConfig`], writes
//! deterministic CSV/JSONL outputs into the output directory, and emits SVG
//! plots as a non-fatal afterstep.

mod converge;
mod estimate;
mod symmetry;
mod track;
mod weyl;

use std::path::{Path, PathBuf};

use crate::config::{ConfigError, ExperimentConfig, Scenario};
use crate::plot;
use crate::records::RecordIoError;

/// Runner failure split by exit code: 2 for configuration, 3 for numerics.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.0)
    }
}

impl From<tracksim_core::Error> for RunError {
    fn from(e: tracksim_core::Error) -> Self {
        RunError::Numeric(e.to_string())
    }
}

impl From<RecordIoError> for RunError {
    fn from(e: RecordIoError) -> Self {
        match e {
            RecordIoError::Parse(m) => RunError::Config(m),
            RecordIoError::Io(m) => RunError::Numeric(m.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Numeric(e.to_string())
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

pub struct RunContext {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
}

impl RunContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Dispatch a validated config; returns the paths of the primary CSV outputs.
pub fn run_scenario(config: ExperimentConfig, out_dir: &Path) -> RunResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let ctx = RunContext {
        out_dir: out_dir.to_path_buf(),
        config,
    };
    let outputs = match ctx.config.scenario {
        Scenario::Track => track::run(&ctx)?,
        Scenario::Estimate => estimate::run(&ctx)?,
        Scenario::Converge => converge::run(&ctx)?,
        Scenario::Weyl => weyl::run(&ctx)?,
        Scenario::Symmetry => symmetry::run(&ctx)?,
    };
    // plots come last and never fail the run
    for csv in &outputs {
        if csv.extension().map(|e| e == "csv").unwrap_or(false) {
            if let Err(e) = plot::emit_plots(csv) {
                eprintln!("warning: plotting {} failed: {e}", csv.display());
            }
        }
    }
    Ok(outputs)
}

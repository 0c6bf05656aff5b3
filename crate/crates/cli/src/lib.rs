//! Experiment runner: reads a JSON config, runs one task inside a worker
//! pool and writes CSV, JSON and optional SVG artifacts.

pub mod artifacts;
pub mod config;
pub mod svg;
mod tasks;

pub use config::{ExperimentConfig, Task};
pub use tasks::order_strings;

use artifacts::ArtifactWriter;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Core(ldp_core::Error),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<ldp_core::Error> for RunError {
    fn from(e: ldp_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub task: Task,
    /// `None` for tasks without a verdict.
    pub pass: Option<bool>,
    pub summary: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass == Some(false) {
            1
        } else {
            0
        }
    }
}

/// Runs `task` with `config.workers` threads, writing into `out_dir`.
pub fn run(task: Task, mut config: ExperimentConfig, out_dir: &Path) -> Result<Outcome, RunError> {
    if let Some(t) = config.task {
        if t != task {
            return Err(RunError::Config(format!("config is for task `{t}`, invoked as `{task}`")));
        }
    }
    config.task = Some(task);
    if config.workers == 0 {
        return Err(RunError::Config("workers must be at least 1".into()));
    }
    let resolved = serde_json::to_value(&config).map_err(|e| RunError::Config(e.to_string()))?;
    let mut writer = ArtifactWriter::new(out_dir, task.name(), resolved)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| RunError::Config(format!("worker pool: {e}")))?;
    let out = pool.install(|| tasks::dispatch(task, &config, &mut writer))?;
    Ok(Outcome { task, pass: out.pass, summary: out.summary, artifacts: writer.written().to_vec() })
}

/// Reads and parses a config file; diagnostics carry line and column.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

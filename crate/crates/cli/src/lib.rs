//! Scenario runner behind the `roughbsde` binary.

pub mod builtin;
pub mod config;
pub mod report;
pub mod run;
pub mod study;
pub mod tasks;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{Config, Scenario, Task};
pub use report::{Metric, RunReport, ScenarioReport};
pub use run::{run_config, RunOptions};
pub use study::{convergence_study, StudyRow};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}:{line}:{column}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Study(String),
    #[error(transparent)]
    RoughPath(#[from] roughbsde::rough_path::RoughPathError),
    #[error(transparent)]
    Flow(#[from] roughbsde::flows::FlowError),
    #[error(transparent)]
    Transform(#[from] roughbsde::transforms::TransformError),
    #[error(transparent)]
    Bsde(#[from] roughbsde::bsde::BsdeError),
    #[error(transparent)]
    Pde(#[from] roughbsde::pde::PdeError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

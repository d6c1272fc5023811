use std::path::{Path, PathBuf};

use crate::config::Config;
use crate::report::{OracleResult, RunReport, ScenarioReport};
use crate::{io_err, tasks, CliError};

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
}

/// Output directory: `ROUGHBSDE_OUT` if set, else `roughbsde-out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("ROUGHBSDE_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("roughbsde-out"))
}

/// Validates every scenario, then runs them in order. Scenario failures are
/// recorded in the report rather than aborting the run.
pub fn run_config(config: &Config, options: &RunOptions) -> Result<RunReport, CliError> {
    config.validate()?;
    let mut config = config.clone();
    if let Some(seed) = options.seed {
        config.scenarios.iter_mut().for_each(|s| s.task.override_seed(seed));
    }
    let mut report = RunReport::default();
    if config.scenarios.is_empty() {
        return Ok(report);
    }
    std::fs::create_dir_all(&options.out).map_err(io_err(&options.out))?;
    for scenario in &config.scenarios {
        let dir = options.out.join(&scenario.name);
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let entry = match tasks::execute(&scenario.task, &scenario.name, &dir) {
            Ok(outcome) => ScenarioReport {
                name: scenario.name.clone(),
                criterion: scenario.criterion,
                oracles: scenario
                    .oracles
                    .iter()
                    .map(|o| OracleResult::evaluate(o, &outcome.metrics))
                    .collect(),
                metrics: outcome.metrics,
                notes: outcome.notes,
                error: None,
            },
            Err(e) => ScenarioReport {
                name: scenario.name.clone(),
                criterion: scenario.criterion,
                oracles: scenario.oracles.iter().map(|o| OracleResult::evaluate(o, &[])).collect(),
                metrics: Vec::new(),
                notes: Vec::new(),
                error: Some(e.to_string()),
            },
        };
        report.scenarios.push(entry);
    }
    report.write_csv(&options.out.join("report.csv"))?;
    Ok(report)
}

pub fn write_config(config: &Config, file: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(config)?;
    std::fs::write(file, text + "\n").map_err(io_err(file))
}

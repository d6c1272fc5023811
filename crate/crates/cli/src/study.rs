//! Convergence studies: geometric refinement of a scenario against its
//! reference oracle.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::{Check, Config, Scenario, Task};
use crate::{io_err, tasks, CliError};

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub level: u32,
    pub n_steps: usize,
    pub n_paths: usize,
    pub lift_level: Option<u32>,
    pub estimate: f64,
    pub se: f64,
    pub error: f64,
}

fn reference(scenario: &Scenario) -> Option<f64> {
    scenario
        .oracles
        .iter()
        .find(|o| o.metric == "y0" && o.check == Check::Near)
        .map(|o| o.target)
}

fn study_one(scenario: &Scenario, levels: u32) -> Result<Option<Vec<StudyRow>>, CliError> {
    match &scenario.task {
        Task::Bsde(base) => {
            let Some(target) = reference(scenario) else {
                return Ok(None);
            };
            (0..levels)
                .map(|l| {
                    let mut s = base.clone();
                    s.discretization.n_steps = base.discretization.n_steps << l;
                    s.discretization.n_paths = base.discretization.n_paths << (2 * l);
                    let lift_level = base.driver.level().map(|lv| lv + l);
                    if let Some(lv) = lift_level {
                        s.driver = base.driver.with_level(lv);
                    }
                    let run = tasks::run_bsde(&s, &scenario.name, None)?;
                    let sol = &run.solutions[0].1;
                    Ok(StudyRow {
                        level: l,
                        n_steps: s.discretization.n_steps,
                        n_paths: s.discretization.n_paths,
                        lift_level,
                        estimate: sol.y0(),
                        se: sol.y0_se(),
                        error: (sol.y0() - target).abs(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
        }
        Task::OdeRde { levels: base, reference_steps } => {
            let first = *base.first().unwrap_or(&4);
            let lv: Vec<u32> = (0..levels).map(|l| first + l).collect();
            let run = tasks::ode_rde(&lv, *reference_steps)?;
            Ok(Some(
                run.differences
                    .iter()
                    .enumerate()
                    .map(|(l, &(level, diff))| StudyRow {
                        level: l as u32,
                        n_steps: 1 << level,
                        n_paths: 0,
                        lift_level: Some(level),
                        estimate: diff,
                        se: 0.0,
                        error: diff,
                    })
                    .collect(),
            ))
        }
        _ => Ok(None),
    }
}

/// Runs every scenario that has a reference at `levels` refinement levels and
/// writes `study_<name>.csv` into `out`.
pub fn convergence_study(config: &Config, levels: u32, out: &Path) -> Result<Vec<(String, Vec<StudyRow>)>, CliError> {
    config.validate()?;
    if levels == 0 {
        return Err(CliError::Study("need at least one level".into()));
    }
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut results = Vec::new();
    for scenario in &config.scenarios {
        let Some(rows) = study_one(scenario, levels)? else {
            continue;
        };
        let mut csv = String::from("level,n_steps,n_paths,lift_level,estimate,se,error\n");
        for r in &rows {
            if !(r.estimate.is_finite() && r.se.is_finite() && r.error.is_finite()) {
                return Err(CliError::Study(format!("{}: non-finite value at level {}", scenario.name, r.level)));
            }
            let lift = r.lift_level.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{},{},{},{lift},{},{},{}",
                r.level, r.n_steps, r.n_paths, r.estimate, r.se, r.error
            );
        }
        let file = out.join(format!("study_{}.csv", scenario.name));
        std::fs::write(&file, csv).map_err(io_err(&file))?;
        results.push((scenario.name.clone(), rows));
    }
    if results.is_empty() {
        return Err(CliError::Study(
            "no scenario declares a reference oracle (a `near` oracle on y0, or an ode_rde task)".into(),
        ));
    }
    Ok(results)
}

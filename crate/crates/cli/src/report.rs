use std::fmt;
use std::path::Path;

use crate::config::{Check, Oracle};
use crate::{io_err, CliError};

#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub se: Option<f64>,
}

impl Metric {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
            se: None,
        }
    }

    pub fn with_se(name: impl Into<String>, value: f64, se: f64) -> Self {
        Self {
            se: Some(se),
            ..Self::new(name, value)
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 })
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub oracle: Oracle,
    pub value: Option<f64>,
    pub se: Option<f64>,
    pub pass: bool,
}

impl OracleResult {
    pub fn evaluate(oracle: &Oracle, metrics: &[Metric]) -> Self {
        let found = metrics.iter().find(|m| m.name == oracle.metric);
        let pass = found.is_some_and(|m| {
            let v = m.value;
            v.is_finite()
                && match oracle.check {
                    Check::Near => {
                        let band = oracle.tolerance.max(oracle.se_multiplier * m.se.unwrap_or(0.0));
                        (v - oracle.target).abs() <= band
                    }
                    Check::AtMost => v <= oracle.target + oracle.tolerance,
                    Check::AtLeast => v >= oracle.target - oracle.tolerance,
                }
        });
        Self {
            oracle: oracle.clone(),
            value: found.map(|m| m.value),
            se: found.and_then(|m| m.se),
            pass,
        }
    }
}

impl fmt::Display for OracleResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = &self.oracle;
        let value = match self.value {
            Some(v) => format!("{v:.6e}"),
            None => "missing".into(),
        };
        let rule = match o.check {
            Check::Near if o.se_multiplier > 0.0 => {
                format!("within max({:e}, {}·se) of {}", o.tolerance, o.se_multiplier, o.target)
            }
            Check::Near => format!("within {:e} of {}", o.tolerance, o.target),
            Check::AtMost => format!("≤ {}", o.target + o.tolerance),
            Check::AtLeast => format!("≥ {}", o.target - o.tolerance),
        };
        let se = self.se.map(|s| format!(" (se {s:.2e})")).unwrap_or_default();
        write!(
            f,
            "{} {} = {value}{se}, required {rule}",
            if self.pass { "PASS" } else { "FAIL" },
            o.metric
        )
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioReport {
    pub name: String,
    pub criterion: Option<u32>,
    pub metrics: Vec<Metric>,
    pub oracles: Vec<OracleResult>,
    pub notes: Vec<String>,
    /// Set when the scenario aborted; all its oracles then fail.
    pub error: Option<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.oracles.iter().all(|o| o.pass)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub scenarios: Vec<ScenarioReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.scenarios.iter().all(ScenarioReport::passed)
    }

    /// One row per oracle (and per aborted scenario).
    pub fn write_csv(&self, file: &Path) -> Result<(), CliError> {
        let mut out = String::from("scenario,criterion,metric,value,se,check,target,tolerance,se_multiplier,pass\n");
        for s in &self.scenarios {
            let crit = s.criterion.map(|c| c.to_string()).unwrap_or_default();
            if let Some(e) = &s.error {
                let msg = e.replace('"', "'").replace('\n', " ");
                out.push_str(&format!("{},{crit},\"error: {msg}\",,,,,,,false\n", s.name));
            }
            for r in &s.oracles {
                let o = &r.oracle;
                out.push_str(&format!(
                    "{},{crit},{},{},{},{},{},{},{},{}\n",
                    s.name,
                    o.metric,
                    r.value.map(|v| v.to_string()).unwrap_or_default(),
                    r.se.map(|v| v.to_string()).unwrap_or_default(),
                    match o.check {
                        Check::Near => "near",
                        Check::AtMost => "at_most",
                        Check::AtLeast => "at_least",
                    },
                    o.target,
                    o.tolerance,
                    o.se_multiplier,
                    r.pass && s.error.is_none()
                ));
            }
        }
        std::fs::write(file, out).map_err(io_err(file))
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.scenarios {
            let crit = s.criterion.map(|c| format!(" [criterion {c}]")).unwrap_or_default();
            writeln!(f, "{}{crit}: {}", s.name, if s.passed() { "PASS" } else { "FAIL" })?;
            if let Some(e) = &s.error {
                writeln!(f, "  error: {e}")?;
            }
            for r in &s.oracles {
                writeln!(f, "  {r}")?;
            }
            for n in &s.notes {
                writeln!(f, "  note: {n}")?;
            }
        }
        let failed = self.scenarios.iter().filter(|s| !s.passed()).count();
        write!(f, "{} scenarios, {failed} failed", self.scenarios.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_checks() {
        let metrics = vec![Metric::with_se("y0", 0.27, 0.01), Metric::new("gap", 0.02)];
        assert!(OracleResult::evaluate(&Oracle::near("y0", 0.25, 5e-2), &metrics).pass);
        assert!(!OracleResult::evaluate(&Oracle::near("y0", 0.25, 1e-2), &metrics).pass);
        assert!(OracleResult::evaluate(&Oracle::near("y0", 0.25, 1e-2).with_se(3.0), &metrics).pass);
        assert!(OracleResult::evaluate(&Oracle::at_most("gap", 0.02), &metrics).pass);
        assert!(!OracleResult::evaluate(&Oracle::at_least("gap", 0.03), &metrics).pass);
        let missing = OracleResult::evaluate(&Oracle::at_most("nope", 1.0), &metrics);
        assert!(!missing.pass);
        assert!(missing.to_string().contains("missing"));
        let nan = vec![Metric::new("gap", f64::NAN)];
        assert!(!OracleResult::evaluate(&Oracle::at_most("gap", 1.0), &nan).pass);
    }

    #[test]
    fn report_csv_lists_every_oracle() {
        let report = RunReport {
            scenarios: vec![ScenarioReport {
                name: "s".into(),
                criterion: Some(4),
                metrics: vec![Metric::new("m", 1.0)],
                oracles: vec![OracleResult::evaluate(&Oracle::at_most("m", 2.0), &[Metric::new("m", 1.0)])],
                notes: Vec::new(),
                error: None,
            }],
        };
        assert!(report.passed());
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("r.csv");
        report.write_csv(&file).unwrap();
        let text = std::fs::read_to_string(file).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "s,4,m,1,,at_most,2,0,0,true");
    }
}

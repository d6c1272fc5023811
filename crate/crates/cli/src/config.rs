//! Scenario configuration: JSON text deserialized into a symbolic menu of
//! drivers, fields, generators and terminal functions.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use roughbsde::bsde::{Basis, BsdeProblem, Discretization, ForwardModel, RoughConfig, RoughPart, Terminal};
use roughbsde::flows::{AffineField, Driver, SharedField, SineField, ZeroField};
use roughbsde::rough_path::{self, SmoothPath};
use roughbsde::transforms::{
    IntegrableFn, LinearGenerator, MixedGenerator, QuadraticGenerator, SharedGenerator, ZeroGenerator,
};

use crate::CliError;

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Scenario {
    pub name: String,
    /// Acceptance criterion this scenario covers, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<u32>,
    #[serde(flatten)]
    pub task: Task,
    #[serde(default)]
    pub oracles: Vec<Oracle>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Bsde(BsdeScenario),
    /// `G(y) = y`, `η_s = s` on `[0, 1]`: `φ(0, 1) = e`.
    FlowLinear { steps: usize },
    /// `G₁ = 1`, `G₂(y) = y` on a lifted smooth 2-d path against a fine ODE solve.
    OdeRde {
        levels: Vec<u32>,
        reference_steps: usize,
    },
    /// Zvonkin map of `f = ½·1_[0,1]`.
    ZvonkinStructure { pairs: usize, seed: u64 },
    LevyArea {
        samples: usize,
        subfactor: usize,
        seed: u64,
    },
    FbmLift {
        hurst: f64,
        p: f64,
        level: u32,
        samples: usize,
        pairs: Vec<(f64, f64)>,
        seed: u64,
    },
    /// Reruns a BSDE scenario under several thread counts and compares CSV bytes.
    Determinism {
        scenario: Box<BsdeScenario>,
        threads: Vec<usize>,
    },
    /// Two independent seeds of the same BSDE scenario.
    Uniqueness {
        scenario: Box<BsdeScenario>,
        seeds: (u64, u64),
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    #[default]
    DossSussmann,
    Zvonkin,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BsdeScenario {
    #[serde(default)]
    pub driver: DriverSpec,
    #[serde(default)]
    pub fields: Vec<FieldSpec>,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub forward: ForwardSpec,
    #[serde(default)]
    pub terminal: TerminalSpec,
    #[serde(default = "one")]
    pub horizon: f64,
    #[serde(default)]
    pub discretization: DiscretizationSpec,
    #[serde(default)]
    pub route: Route,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feynman_kac: Option<FeynmanKacSpec>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriverSpec {
    #[default]
    None,
    Linear {
        velocity: Vec<f64>,
    },
    Sine {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
    },
    Brownian {
        level: u32,
        #[serde(default = "default_subfactor")]
        subfactor: usize,
        seed: u64,
    },
    /// The same Brownian sample as `brownian`, interpolated linearly (ODE route).
    BrownianPolyline {
        level: u32,
        #[serde(default = "default_subfactor")]
        subfactor: usize,
        seed: u64,
    },
    Fbm {
        hurst: f64,
        p: f64,
        level: u32,
        seed: u64,
    },
    File {
        path: PathBuf,
        p: f64,
    },
}

fn default_subfactor() -> usize {
    16
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Zero,
    Affine { a: f64, b: f64 },
    Sine { amplitude: f64, frequency: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Zero,
    Constant { value: f64, lo: f64, hi: f64 },
    Gaussian { height: f64, center: f64, width: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    Zero,
    Linear { alpha: f64 },
    Quad { f: DensitySpec },
    Mixed { a: f64, b: f64, c: f64, f: DensitySpec },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForwardSpec {
    Arithmetic { mu: f64, sigma: f64, x0: f64 },
    Ou { kappa: f64, theta: f64, sigma: f64, x0: f64 },
}

impl Default for ForwardSpec {
    fn default() -> Self {
        Self::Arithmetic {
            mu: 0.0,
            sigma: 1.0,
            x0: 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalSpec {
    #[default]
    Identity,
    Affine {
        slope: f64,
        intercept: f64,
    },
    Square,
    Tanh,
    Sin,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    Polynomial { degree: usize },
    PiecewiseLinear { bins: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationSpec {
    pub n_steps: usize,
    pub n_paths: usize,
    pub basis: BasisSpec,
    pub seed: u64,
    pub truncation: f64,
}

impl Default for DiscretizationSpec {
    fn default() -> Self {
        let d = Discretization::default();
        Self {
            n_steps: d.n_steps,
            n_paths: d.n_paths,
            basis: match d.basis {
                Basis::Polynomial { degree } => BasisSpec::Polynomial { degree },
                Basis::PiecewiseLinear { bins } => BasisSpec::PiecewiseLinear { bins },
            },
            seed: d.seed,
            truncation: d.truncation,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FeynmanKacSpec {
    pub xs: Vec<f64>,
    pub nt: usize,
    pub nx: usize,
    /// Agreement band `max(se_multiplier · SE, floor)`.
    #[serde(default = "three")]
    pub se_multiplier: f64,
    #[serde(default = "fk_floor")]
    pub floor: f64,
}

fn three() -> f64 {
    3.0
}

fn fk_floor() -> f64 {
    2e-2
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `|value - target| ≤ max(tolerance, se_multiplier · se)`
    Near,
    /// `value ≤ target + tolerance`
    AtMost,
    /// `value ≥ target - tolerance`
    AtLeast,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Oracle {
    pub metric: String,
    pub check: Check,
    pub target: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub se_multiplier: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl Oracle {
    pub fn near(metric: &str, target: f64, tolerance: f64) -> Self {
        Self {
            metric: metric.into(),
            check: Check::Near,
            target,
            tolerance,
            se_multiplier: 0.0,
        }
    }

    pub fn at_most(metric: &str, target: f64) -> Self {
        Self {
            metric: metric.into(),
            check: Check::AtMost,
            target,
            tolerance: 0.0,
            se_multiplier: 0.0,
        }
    }

    pub fn at_least(metric: &str, target: f64) -> Self {
        Self {
            check: Check::AtLeast,
            ..Self::at_most(metric, target)
        }
    }

    pub fn with_se(mut self, k: f64) -> Self {
        self.se_multiplier = k;
        self
    }
}

/// Reads and parses a config; parse errors carry line and column.
pub fn load(path: &Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path).map_err(crate::io_err(path))?;
    parse(&text, path)
}

pub fn parse(text: &str, origin: &Path) -> Result<Config, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        file: origin.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

impl DensitySpec {
    pub fn build(&self) -> IntegrableFn {
        match *self {
            Self::Zero => IntegrableFn::Zero,
            Self::Constant { value, lo, hi } => IntegrableFn::Constant { value, lo, hi },
            Self::Gaussian { height, center, width } => IntegrableFn::Gaussian { height, center, width },
        }
    }
}

impl GeneratorSpec {
    pub fn build(&self) -> SharedGenerator {
        match self {
            Self::Zero => Arc::new(ZeroGenerator),
            Self::Linear { alpha } => Arc::new(LinearGenerator::in_y(*alpha)),
            Self::Quad { f } => Arc::new(QuadraticGenerator { f: f.build() }),
            Self::Mixed { a, b, c, f } => Arc::new(MixedGenerator {
                a: *a,
                b: *b,
                c: *c,
                f: f.build(),
            }),
        }
    }

    /// Member of the `a + b|y| + c|z| + f(y) z²` class.
    pub fn zvonkin_form(&self) -> bool {
        !matches!(self, Self::Linear { .. })
    }
}

impl FieldSpec {
    pub fn build(&self) -> SharedField {
        match *self {
            Self::Zero => Arc::new(ZeroField),
            Self::Affine { a, b } => Arc::new(AffineField { a, b }),
            Self::Sine { amplitude, frequency } => Arc::new(SineField { amplitude, frequency }),
        }
    }
}

impl ForwardSpec {
    pub fn build(&self) -> ForwardModel {
        match *self {
            Self::Arithmetic { mu, sigma, x0 } => ForwardModel::arithmetic(mu, sigma, x0),
            Self::Ou {
                kappa,
                theta,
                sigma,
                x0,
            } => ForwardModel::ornstein_uhlenbeck(kappa, theta, sigma, x0),
        }
    }

    pub fn x0(&self) -> f64 {
        match *self {
            Self::Arithmetic { x0, .. } | Self::Ou { x0, .. } => x0,
        }
    }
}

impl TerminalSpec {
    pub fn build(&self) -> Terminal {
        match *self {
            Self::Identity => Arc::new(|x| x),
            Self::Affine { slope, intercept } => Arc::new(move |x| slope * x + intercept),
            Self::Square => Arc::new(|x| x * x),
            Self::Tanh => Arc::new(f64::tanh),
            Self::Sin => Arc::new(f64::sin),
        }
    }
}

impl DiscretizationSpec {
    pub fn build(&self) -> Discretization {
        Discretization {
            n_steps: self.n_steps,
            n_paths: self.n_paths,
            basis: match self.basis {
                BasisSpec::Polynomial { degree } => Basis::Polynomial { degree },
                BasisSpec::PiecewiseLinear { bins } => Basis::PiecewiseLinear { bins },
            },
            seed: self.seed,
            truncation: self.truncation,
        }
    }
}

impl DriverSpec {
    /// Driver on `[0, horizon]` of dimension `dim`.
    pub fn build(&self, horizon: f64, dim: usize) -> Result<Option<Driver>, CliError> {
        Ok(match self {
            Self::None => None,
            Self::Linear { velocity } => Some(Driver::Smooth(SmoothPath::linear(velocity.clone(), horizon))),
            Self::Sine { amplitude, frequency } => {
                Some(Driver::Smooth(SmoothPath::sine(amplitude.clone(), frequency.clone(), horizon)))
            }
            Self::Brownian { level, subfactor, seed } => Some(Driver::Rough(rough_path::brownian_lift(
                *seed,
                &rough_path::dyadic_grid(horizon, *level),
                dim,
                *subfactor,
            )?)),
            Self::BrownianPolyline { level, subfactor, seed } => Some(Driver::Smooth(rough_path::brownian_polyline(
                *seed,
                &rough_path::dyadic_grid(horizon, *level),
                dim,
                *subfactor,
            )?)),
            Self::Fbm { hurst, p, level, seed } => Some(Driver::Rough(rough_path::fbm_lift(
                *seed,
                *hurst,
                *p,
                &rough_path::dyadic_grid(horizon, *level),
                dim,
                *level,
            )?)),
            Self::File { path, p } => Some(Driver::Rough(rough_path::read_csv(path, *p)?)),
        })
    }

    /// Dyadic level of a sampled driver.
    pub fn level(&self) -> Option<u32> {
        match *self {
            Self::Brownian { level, .. } | Self::BrownianPolyline { level, .. } | Self::Fbm { level, .. } => {
                Some(level)
            }
            _ => None,
        }
    }

    pub fn with_level(&self, new_level: u32) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Brownian { level, .. } | Self::BrownianPolyline { level, .. } | Self::Fbm { level, .. } => {
                *level = new_level
            }
            _ => {}
        }
        out
    }
}

impl BsdeScenario {
    /// Problems are checked up front so that no run starts on a bad config.
    pub fn validate(&self) -> Vec<String> {
        let mut issues = Vec::new();
        if !(self.horizon > 0.0) {
            issues.push(format!("horizon must be positive, got {}", self.horizon));
        }
        if let Err(e) = self.discretization.build().validate() {
            issues.push(e.to_string());
        }
        match &self.driver {
            DriverSpec::None => {
                if !self.fields.is_empty() {
                    issues.push("vector fields given without a driver".into());
                }
            }
            DriverSpec::Fbm { hurst, p, .. } => {
                if !(*hurst > 0.25) {
                    issues.push(format!(
                        "fbm driver needs Hurst index H > 1/4 for a geometric lift, got H = {hurst}"
                    ));
                } else if !(hurst * p > 1.0) {
                    issues.push(format!("fbm driver needs H p > 1, got H p = {}", hurst * p));
                }
            }
            DriverSpec::File { path, .. } => {
                if !path.exists() {
                    issues.push(format!("driver file {} does not exist", path.display()));
                }
            }
            DriverSpec::Linear { velocity } if velocity.len() != self.fields.len() => {
                issues.push(format!("driver has dimension {} but {} fields", velocity.len(), self.fields.len()));
            }
            DriverSpec::Sine { amplitude, frequency }
                if amplitude.len() != self.fields.len() || frequency.len() != self.fields.len() =>
            {
                issues.push(format!(
                    "driver has dimension {} but {} fields",
                    amplitude.len(),
                    self.fields.len()
                ));
            }
            _ => {}
        }
        if self.driver != DriverSpec::None && self.fields.is_empty() {
            issues.push("driver given without vector fields".into());
        }
        if let Some(level) = self.driver.level() {
            if matches!(self.driver, DriverSpec::Brownian { .. } | DriverSpec::Fbm { .. })
                && (1usize << level) % self.discretization.n_steps.max(1) != 0
            {
                issues.push(format!(
                    "n_steps = {} must divide 2^{level} so that time nodes lie on the driver grid",
                    self.discretization.n_steps
                ));
            }
        }
        if matches!(self.route, Route::Zvonkin | Route::Both) && !self.generator.zvonkin_form() {
            issues.push("route zvonkin needs a generator of the form a + b|y| + c|z| + f(y) z²".into());
        }
        if let Some(fk) = &self.feynman_kac {
            if fk.xs.is_empty() || fk.nt == 0 || fk.nx < 4 {
                issues.push("feynman_kac needs points, nt ≥ 1 and nx ≥ 4".into());
            }
        }
        issues
    }

    pub fn problem(&self) -> Result<BsdeProblem, CliError> {
        let driver = self.driver.build(self.horizon, self.fields.len())?;
        Ok(BsdeProblem {
            terminal: self.terminal.build(),
            generator: self.generator.build(),
            rough: driver.map(|driver| RoughPart {
                fields: self.fields.iter().map(FieldSpec::build).collect(),
                driver,
            }),
            forward: self.forward.build(),
            horizon: self.horizon,
        })
    }

    pub fn rough_config(&self) -> RoughConfig {
        RoughConfig::default()
    }
}

impl Task {
    pub fn validate(&self) -> Vec<String> {
        match self {
            Task::Bsde(s) => s.validate(),
            Task::Determinism { scenario, threads } => {
                let mut v = scenario.validate();
                if threads.len() < 2 || threads.contains(&0) {
                    v.push("determinism needs at least two positive thread counts".into());
                }
                v
            }
            Task::Uniqueness { scenario, seeds } => {
                let mut v = scenario.validate();
                if seeds.0 == seeds.1 {
                    v.push("uniqueness needs two different seeds".into());
                }
                v
            }
            Task::OdeRde { levels, .. } if levels.len() < 2 => vec!["ode_rde needs at least two levels".into()],
            _ => Vec::new(),
        }
    }

    /// Replaces every Monte Carlo seed; uniqueness uses `seed` and `seed + 1`.
    pub fn override_seed(&mut self, seed: u64) {
        match self {
            Task::Bsde(s) => s.discretization.seed = seed,
            Task::Determinism { scenario, .. } => scenario.discretization.seed = seed,
            Task::Uniqueness { seeds, .. } => *seeds = (seed, seed.wrapping_add(1)),
            Task::ZvonkinStructure { seed: s, .. } | Task::LevyArea { seed: s, .. } | Task::FbmLift { seed: s, .. } => {
                *s = seed
            }
            Task::FlowLinear { .. } | Task::OdeRde { .. } => {}
        }
    }
}

impl Config {
    /// All validation failures, each prefixed by the scenario name.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut issues = Vec::new();
        let mut names = std::collections::HashSet::new();
        for s in &self.scenarios {
            if !names.insert(s.name.as_str()) {
                issues.push(format!("{}: duplicate scenario name", s.name));
            }
            if s.name.is_empty() || s.name.contains(['/', '\\']) {
                issues.push(format!("{:?}: name must be non-empty without path separators", s.name));
            }
            issues.extend(s.task.validate().into_iter().map(|m| format!("{}: {m}", s.name)));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(issues))
        }
    }
}

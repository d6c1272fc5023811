//! Least-squares Monte Carlo for Markovian BSDEs and the two reductions of
//! rough quadratic BSDEs to it.

mod forward;
mod lsmc;
mod output;
mod pipelines;
mod regression;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::flows::{Driver, FlowConfig, FlowError, SharedField};
use crate::transforms::{DerivativeReading, SharedGenerator, TransformError, DEFAULT_DOMAIN};

pub use forward::{simulate_forward, time_grid, ForwardModel, ForwardPaths};
pub use lsmc::{solve_backward_lsmc, solve_backward_paths, BsdeSolution, Diagnostics, StepSummary};
pub use output::{write_sidecar, write_solution_csv};
pub use pipelines::{discrete_residual, solve_rough_qbsde, solve_rough_paths, solve_via_zvonkin, solve_via_zvonkin_paths};
pub use regression::{regress, Basis, Design, Regression};

#[derive(Debug, Error)]
pub enum BsdeError {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),
    #[error("horizon {0} must exceed the start time")]
    InvalidHorizon(f64),
    #[error("basis of size {basis} needs more than {paths} paths")]
    BasisTooLarge { basis: usize, paths: usize },
    #[error("regression Gram matrix of size {size} is singular even with ridge")]
    Regression { size: usize },
    #[error("non-finite regression target at t = {t}")]
    NonFinite { t: f64 },
    #[error("problem has no rough part")]
    MissingRoughPart,
    #[error("problem has a rough part; use the rough solver")]
    UnexpectedRoughPart,
    #[error("generator is not of the form a + b|y| + c|z| + f(y) z²")]
    NotZvonkinForm,
    #[error("transformed value {y} at t = {t} left the range [{lo}, {hi}] of the space transform")]
    Range { t: f64, y: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub n_steps: usize,
    pub n_paths: usize,
    pub basis: Basis,
    pub seed: u64,
    /// Regressed `Y` (and the generator's `y` argument) are clamped to `±truncation`.
    pub truncation: f64,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            n_steps: 50,
            n_paths: 10_000,
            basis: Basis::Polynomial { degree: 4 },
            seed: 0,
            truncation: 1e6,
        }
    }
}

impl Discretization {
    pub fn validate(&self) -> Result<(), BsdeError> {
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(BsdeError::InvalidDiscretization("steps and paths must be positive".into()));
        }
        if self.basis.size() >= self.n_paths {
            return Err(BsdeError::BasisTooLarge {
                basis: self.basis.size(),
                paths: self.n_paths,
            });
        }
        if !(self.truncation > 0.0) {
            return Err(BsdeError::InvalidDiscretization("truncation must be positive".into()));
        }
        Ok(())
    }
}

/// `Σ_k ∫ G_k(Y) dη^k` term of the equation.
#[derive(Clone)]
pub struct RoughPart {
    pub fields: Vec<SharedField>,
    pub driver: Driver,
}

impl fmt::Debug for RoughPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RoughPart")
            .field("fields", &self.fields.len())
            .field("driver", &self.driver)
            .finish()
    }
}

pub type Terminal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `Y_t = ψ(X_T) + ∫_t^T g(s, Y, Z) ds + Σ_k ∫_t^T G_k(Y) dη^k - ∫_t^T Z dW`.
#[derive(Clone)]
pub struct BsdeProblem {
    pub terminal: Terminal,
    pub generator: SharedGenerator,
    pub rough: Option<RoughPart>,
    pub forward: ForwardModel,
    pub horizon: f64,
}

impl fmt::Debug for BsdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BsdeProblem")
            .field("rough", &self.rough)
            .field("forward", &self.forward)
            .field("horizon", &self.horizon)
            .finish()
    }
}

/// Settings of the flow tabulation used by the rough solver.
#[derive(Clone, Copy, Debug)]
pub struct RoughConfig {
    pub flow: FlowConfig,
    /// Half-width of the tabulated `ỹ` range; default `2 max|ξ| + 10`.
    pub y_half_width: Option<f64>,
    /// Grid cells of the table; default 40 per unit, within `[400, 4000]`.
    pub y_cells: Option<usize>,
    /// Spot-check the transported growth bound and warn on violations.
    pub growth_check: bool,
}

impl Default for RoughConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig::default(),
            y_half_width: None,
            y_cells: None,
            growth_check: true,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZvonkinConfig {
    pub half_width: f64,
    pub quad_tol: f64,
    pub reading: DerivativeReading,
}

impl Default for ZvonkinConfig {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_DOMAIN,
            quad_tol: 1e-12,
            reading: DerivativeReading::Composed,
        }
    }
}

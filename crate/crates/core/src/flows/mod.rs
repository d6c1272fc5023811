//! Backward flows `φ(t, y) = y + ∫_t^T Σ_k G_k(φ(s, y)) dη^k_s` of scalar
//! vector fields, their first two spatial derivatives, and their inverse.

mod field;
mod inverse;
mod jet;
mod solve;
mod table;

use std::path::Path;

use thiserror::Error;

use crate::rough_path::{RoughPath, SmoothPath};

pub use field::{AffineField, FnField, SharedField, SineField, VectorField, ZeroField};
pub use inverse::{flow_inverse, flow_inverse_with_derivatives, InverseConfig};
pub use jet::Jet;
pub use solve::{solve_ode_flow, solve_rde_flow, Flow};
pub use table::{FlowTable, TableStats};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("step count must be positive")]
    InvalidSteps,
    #[error("{fields} vector fields for a {driver}-dimensional driver")]
    DimensionMismatch { fields: usize, driver: usize },
    #[error("time {t} outside [0, {horizon}]")]
    TimeOutOfRange { t: f64, horizon: f64 },
    #[error("time {t} is not a node of the rough driver grid")]
    OffGrid { t: f64 },
    #[error("operation needs a {expected} driver")]
    DriverMismatch { expected: &'static str },
    #[error("flow left the guard |phi| <= {guard} at t = {t} (value {value})")]
    Explosion { t: f64, value: f64, guard: f64 },
    #[error("spatial derivative of the flow lost positivity at t = {t} (dphi = {dphi})")]
    Positivity { t: f64, dphi: f64 },
    #[error("field {index} or a derivative reaches {value} at y = {y}, above the bound {bound}")]
    FieldBound { index: usize, y: f64, value: f64, bound: f64 },
    #[error("no bracket for the inverse at t = {t}, x = {x} after {growth} expansions")]
    Bracket { t: f64, x: f64, growth: usize },
    #[error("inverse did not converge at t = {t}, x = {x}")]
    NoConvergence { t: f64, x: f64 },
    #[error("y = {y} outside the tabulated range [{lo}, {hi}]")]
    OutOfTable { y: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Debug)]
pub enum Driver {
    Smooth(SmoothPath),
    Rough(RoughPath),
}

impl Driver {
    pub fn horizon(&self) -> f64 {
        match self {
            Driver::Smooth(p) => p.horizon(),
            Driver::Rough(p) => p.horizon(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Driver::Smooth(p) => p.dim(),
            Driver::Rough(p) => p.dim(),
        }
    }
}

/// Vector fields `G_1..G_d` and the driver they are integrated against.
#[derive(Clone)]
pub struct FlowSpec {
    fields: Vec<SharedField>,
    driver: Driver,
}

impl std::fmt::Debug for FlowSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowSpec")
            .field("fields", &self.fields.len())
            .field("driver", &self.driver)
            .finish()
    }
}

impl FlowSpec {
    pub fn new(fields: Vec<SharedField>, driver: Driver) -> Result<Self, FlowError> {
        if fields.len() != driver.dim() {
            return Err(FlowError::DimensionMismatch {
                fields: fields.len(),
                driver: driver.dim(),
            });
        }
        Ok(Self { fields, driver })
    }

    pub fn fields(&self) -> &[SharedField] {
        &self.fields
    }

    pub fn driver(&self) -> &Driver {
        &self.driver
    }

    pub fn horizon(&self) -> f64 {
        self.driver.horizon()
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    /// True when every field vanishes, so the flow is the identity.
    pub fn is_identity(&self) -> bool {
        self.fields.iter().all(|g| g.is_zero())
    }

    /// Checks `|G_k|, |G_k'|, |G_k''| <= bound` on `samples` points of `[lo, hi]`.
    pub fn check_field_bound(&self, bound: f64, lo: f64, hi: f64, samples: usize) -> Result<(), FlowError> {
        let samples = samples.max(2);
        for (index, g) in self.fields.iter().enumerate() {
            for s in 0..samples {
                let y = lo + (hi - lo) * s as f64 / (samples - 1) as f64;
                let d = g.derivatives(y, 2);
                let value = d[..3].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                if value > bound || !value.is_finite() {
                    return Err(FlowError::FieldBound { index, y, value, bound });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FlowConfig {
    /// Uniform RK4 steps over `[0, T]` for smooth drivers (kinks are added).
    pub steps: usize,
    /// RK4 steps per log-ODE cell.
    pub inner_steps: usize,
    pub guard: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            inner_steps: 2,
            guard: 1e6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowValue {
    pub t: f64,
    pub y: f64,
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
}

impl FlowValue {
    pub fn identity(t: f64, y: f64) -> Self {
        Self {
            t,
            y,
            phi: y,
            dphi: 1.0,
            d2phi: 0.0,
        }
    }
}

/// Anything that evaluates `(φ, ∂φ, ∂²φ)` at `(t, y)`.
pub trait FlowMap: Send + Sync {
    fn horizon(&self) -> f64;

    fn value(&self, t: f64, y: f64) -> Result<FlowValue, FlowError>;

    fn is_identity(&self) -> bool {
        false
    }
}

pub fn write_trajectory_csv<P: AsRef<Path>>(values: &[FlowValue], file: P) -> Result<(), FlowError> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["t", "phi", "dphi", "d2phi"])?;
    for v in values {
        w.write_record([v.t, v.phi, v.dphi, v.d2phi].map(|x| x.to_string()))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests;

//! Reductions of rough and quadratic BSDEs: the Doss–Sussmann change of
//! variables through the backward flow, and the Zvonkin space transform
//! `u(x) = ∫₀ˣ exp(2∫₀^y f)`.

mod doss_sussmann;
mod generator;
mod integrable;
mod ito_krylov;
mod zvonkin;

use thiserror::Error;

use crate::flows::FlowError;
use crate::quadrature::QuadratureError;

pub use doss_sussmann::{DossSussmann, TransportedGrowth};
pub use generator::{
    FnGenerator, Generator, GrowthSpec, LinearGenerator, MixedGenerator, QuadraticGenerator, SharedGenerator,
    ZeroGenerator,
};
pub use integrable::IntegrableFn;
pub use ito_krylov::{ito_krylov_residual, IdentityMap, SpaceMap};
pub use zvonkin::{DerivativeReading, ZvonkinField, ZvonkinGenerator, ZvonkinMap, DEFAULT_DOMAIN};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("flow derivative not positive at t = {t}, y = {y} (dphi = {dphi})")]
    Positivity { t: f64, y: f64, dphi: f64 },
    #[error("value {y} outside the range [{lo}, {hi}] of the space transform")]
    Range { y: f64, lo: f64, hi: f64 },
    #[error("generator has no growth specification")]
    MissingGrowth,
    #[error("invalid working domain half-width {0}")]
    InvalidDomain(f64),
    #[error("arrays are misaligned: {0}")]
    Misaligned(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

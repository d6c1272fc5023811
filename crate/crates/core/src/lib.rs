//! Backward stochastic differential equations driven by rough paths.

pub mod bsde;
pub mod flows;
pub mod pde;
pub mod quadrature;
pub mod rng;
pub mod rough_path;
pub mod transforms;

//! Finite differences for the transformed semilinear PDE, composition with
//! the flow of the rough part, and the Monte Carlo side of the Feynman–Kac
//! cross-check.

mod compose;
mod fd;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bsde::{BsdeError, BsdeProblem, ForwardModel, Terminal};
use crate::flows::{Driver, FlowError, FlowMap};
use crate::transforms::{DossSussmann, TransformError};

pub use compose::{
    compare_feynman_kac, compose_rough_solution, feynman_kac_mc, solve_composed, write_comparison_csv,
    ComparisonRow, ComposedSolution,
};
pub use fd::solve_fd_semilinear;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("need at least 4 space intervals and 1 time step, got nx = {nx}, nt = {nt}")]
    InvalidGrid { nt: usize, nx: usize },
    #[error("invalid domain [{lo}, {hi}] or horizon")]
    InvalidDomain { lo: f64, hi: f64 },
    #[error("explicit part unstable: (1 - 2θ) σ² Δt/Δx² = {ratio} > 1")]
    Unstable { ratio: f64 },
    #[error("fixed point at t = {t} did not converge in {iterations} iterations (last change {change})")]
    NoConvergence { t: f64, iterations: usize, change: f64 },
    #[error("non-finite value at t = {t}, x = {x}")]
    NonFinite { t: f64, x: f64 },
    #[error("the direct PDE needs a smooth driver")]
    RoughDriver,
    #[error("x = {x} outside the grid [{lo}, {hi}]")]
    OffGrid { x: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Bsde(#[from] BsdeError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Nonlinearity `f(t, v, w)` with `w = σ v_x`.
pub type PdeGenerator = Arc<dyn Fn(f64, f64, f64) -> Result<f64, PdeError> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Boundary {
    /// `v_xx = 0` at both ends, i.e. linear extrapolation from the interior.
    #[default]
    LinearExtrapolation,
}

/// `∂_t v + ½σ² v_xx + b v_x + f(t, v, σ v_x) = 0` on `[start, T] × [x_min, x_max]`,
/// `v(T, ·) = ψ`.
#[derive(Clone)]
pub struct PdeProblem {
    pub forward: ForwardModel,
    pub generator: PdeGenerator,
    pub terminal: Terminal,
    pub horizon: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub boundary: Boundary,
    /// Implicit weight; ½ is Crank–Nicolson.
    pub theta: f64,
}

impl fmt::Debug for PdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PdeProblem")
            .field("forward", &self.forward)
            .field("horizon", &self.horizon)
            .field("domain", &(self.x_min, self.x_max))
            .field("theta", &self.theta)
            .finish()
    }
}

/// Interval around `x0` of six standard deviations of the forward process,
/// widened by the drift, with coefficients sampled along `t ↦ (t, x0)`.
pub fn default_domain(forward: &ForwardModel, horizon: f64) -> (f64, f64) {
    let span = horizon - forward.start;
    let (mut sigma, mut drift) = (0.0_f64, 0.0_f64);
    for k in 0..=32 {
        let t = forward.start + span * k as f64 / 32.0;
        sigma = sigma.max(forward.diffusion(t, forward.x0).abs());
        drift = drift.max(forward.drift(t, forward.x0).abs());
    }
    let half = 6.0 * sigma * span.sqrt() + drift * span;
    let half = if half > 0.0 { half } else { 1.0 };
    (forward.x0 - half, forward.x0 + half)
}

impl PdeProblem {
    pub fn new(
        forward: ForwardModel,
        generator: PdeGenerator,
        terminal: Terminal,
        horizon: f64,
        domain: (f64, f64),
    ) -> Self {
        Self {
            forward,
            generator,
            terminal,
            horizon,
            x_min: domain.0,
            x_max: domain.1,
            boundary: Boundary::LinearExtrapolation,
            theta: 0.5,
        }
    }

    /// PDE of a problem without rough part, `f = g`.
    pub fn plain(problem: &BsdeProblem, domain: (f64, f64)) -> Self {
        let g = problem.generator.clone();
        Self::new(
            problem.forward.clone(),
            Arc::new(move |t, v, w| Ok(g.eval(t, v, w))),
            problem.terminal.clone(),
            problem.horizon,
            domain,
        )
    }

    /// PDE for `v = Φ(t, ·)⁻¹ ∘ u` with the transported generator.
    pub fn transformed(problem: &BsdeProblem, flow: Arc<dyn FlowMap>, domain: (f64, f64)) -> Self {
        let ds = DossSussmann::new(flow, problem.generator.clone());
        Self::new(
            problem.forward.clone(),
            Arc::new(move |t, v, w| Ok(ds.generator(t, v, w)?)),
            problem.terminal.clone(),
            problem.horizon,
            domain,
        )
    }

    /// Untransformed PDE with source `Σ_k G_k(u) η̇^k(t)`; smooth drivers only.
    pub fn direct(problem: &BsdeProblem, domain: (f64, f64)) -> Result<Self, PdeError> {
        let mut pde = Self::plain(problem, domain);
        let Some(rough) = &problem.rough else {
            return Ok(pde);
        };
        let Driver::Smooth(path) = &rough.driver else {
            return Err(PdeError::RoughDriver);
        };
        let (path, fields, g) = (path.clone(), rough.fields.clone(), problem.generator.clone());
        pde.generator = Arc::new(move |t, v, w| {
            let eta = path.velocity(t);
            let source: f64 = fields.iter().zip(&eta).map(|(f, e)| f.value(v) * e).sum();
            Ok(g.eval(t, v, w) + source)
        });
        Ok(pde)
    }
}

/// Values on the `times × xs` grid, `values[n][j]`.
#[derive(Clone, Debug)]
pub struct PdeSolution {
    pub times: Vec<f64>,
    pub xs: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub dt: f64,
    pub dx: f64,
    /// Fixed-point iterations used for each backward step `n+1 → n`.
    pub iterations: Vec<usize>,
}

impl PdeSolution {
    /// Cubic Lagrange interpolation in `x` on the slice `n`.
    pub fn value_at(&self, n: usize, x: f64) -> Result<f64, PdeError> {
        let (lo, hi) = (self.xs[0], *self.xs.last().unwrap());
        if !(x >= lo && x <= hi) {
            return Err(PdeError::OffGrid { x, lo, hi });
        }
        let last = self.xs.len() - 1;
        let cell = (((x - lo) / self.dx).floor() as usize).min(last - 1);
        let first = cell.saturating_sub(1).min(last - 3);
        let row = &self.values[n];
        let mut v = 0.0;
        for a in first..first + 4 {
            let mut w = 1.0;
            for b in first..first + 4 {
                if a != b {
                    w *= (x - self.xs[b]) / (self.xs[a] - self.xs[b]);
                }
            }
            v += w * row[a];
        }
        Ok(v)
    }

    /// Long format `t, x, value`.
    pub fn write_csv<P: AsRef<std::path::Path>>(&self, file: P) -> Result<(), PdeError> {
        let mut w = csv::Writer::from_path(file)?;
        w.write_record(["t", "x", "value"])?;
        for (n, row) in self.values.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(PdeError::NonFinite {
                        t: self.times[n],
                        x: self.xs[j],
                    });
                }
                w.write_record([self.times[n].to_string(), self.xs[j].to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{BsdeError, Discretization};
use crate::rng::substream;

type Coefficient = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `dX = b(t, X) dt + σ(t, X) dW`, `X_s = x`.
#[derive(Clone)]
pub struct ForwardModel {
    drift: Coefficient,
    diffusion: Coefficient,
    pub x0: f64,
    pub start: f64,
}

impl fmt::Debug for ForwardModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForwardModel")
            .field("x0", &self.x0)
            .field("start", &self.start)
            .finish()
    }
}

impl ForwardModel {
    pub fn new<B, S>(drift: B, diffusion: S, x0: f64) -> Self
    where
        B: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        S: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            x0,
            start: 0.0,
        }
    }

    /// Constant coefficients `b = mu`, `σ = sigma`.
    pub fn arithmetic(mu: f64, sigma: f64, x0: f64) -> Self {
        Self::new(move |_, _| mu, move |_, _| sigma, x0)
    }

    /// `dX = kappa (theta - X) dt + sigma dW`.
    pub fn ornstein_uhlenbeck(kappa: f64, theta: f64, sigma: f64, x0: f64) -> Self {
        Self::new(move |_, x| kappa * (theta - x), move |_, _| sigma, x0)
    }

    pub fn drift(&self, t: f64, x: f64) -> f64 {
        (self.drift)(t, x)
    }

    pub fn diffusion(&self, t: f64, x: f64) -> f64 {
        (self.diffusion)(t, x)
    }

    /// Largest difference quotient in `x` and largest `|coef|/(1 + |x|)` of
    /// `b` and `σ` on a sample grid of `[start, horizon] × [lo, hi]`.
    pub fn lipschitz_and_growth(&self, horizon: f64, lo: f64, hi: f64, samples: usize) -> (f64, f64) {
        let samples = samples.max(2);
        let (mut lip, mut growth) = (0.0_f64, 0.0_f64);
        for i in 0..samples {
            let t = self.start + (horizon - self.start) * i as f64 / (samples - 1) as f64;
            for j in 0..samples {
                let x = lo + (hi - lo) * j as f64 / (samples - 1) as f64;
                let h = (hi - lo) / (samples - 1) as f64;
                for c in [&self.drift, &self.diffusion] {
                    growth = growth.max(c(t, x).abs() / (1.0 + x.abs()));
                    if j + 1 < samples {
                        lip = lip.max((c(t, x + h) - c(t, x)).abs() / h);
                    }
                }
            }
        }
        (lip, growth)
    }
}

/// Euler–Maruyama paths stored time-major: `x[i][m]`, `dw[i][m]`.
#[derive(Clone, Debug)]
pub struct ForwardPaths {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub dw: Vec<Vec<f64>>,
}

impl ForwardPaths {
    pub fn n_paths(&self) -> usize {
        self.x[0].len()
    }

    pub fn n_steps(&self) -> usize {
        self.dw.len()
    }
}

/// Uniform time grid `start + i (T - start)/n`.
pub fn time_grid(start: f64, horizon: f64, n: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=n)
        .map(|i| start + (horizon - start) * i as f64 / n as f64)
        .collect();
    grid[n] = horizon;
    grid
}

/// Simulates `disc.n_paths` paths on `disc.n_steps` uniform steps; path `m`
/// uses the substream `(disc.seed, m)`.
pub fn simulate_forward(model: &ForwardModel, horizon: f64, disc: &Discretization) -> Result<ForwardPaths, BsdeError> {
    disc.validate()?;
    if !(horizon > model.start) {
        return Err(BsdeError::InvalidHorizon(horizon));
    }
    let n = disc.n_steps;
    let times = time_grid(model.start, horizon, n);
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = (0..disc.n_paths)
        .into_par_iter()
        .map(|m| {
            let mut rng = substream(disc.seed, m as u64);
            let mut x = Vec::with_capacity(n + 1);
            let mut dw = Vec::with_capacity(n);
            let mut cur = model.x0;
            x.push(cur);
            for i in 0..n {
                let dt = times[i + 1] - times[i];
                let inc = dt.sqrt() * rng.sample::<f64, _>(StandardNormal);
                cur += model.drift(times[i], cur) * dt + model.diffusion(times[i], cur) * inc;
                x.push(cur);
                dw.push(inc);
            }
            (x, dw)
        })
        .collect();
    let x = (0..=n).map(|i| per_path.iter().map(|p| p.0[i]).collect()).collect();
    let dw = (0..n).map(|i| per_path.iter().map(|p| p.1[i]).collect()).collect();
    Ok(ForwardPaths { times, x, dw })
}

use rayon::prelude::*;

use super::regression::Design;
use super::{simulate_forward, BsdeError, BsdeProblem, Discretization, ForwardPaths};

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub route: String,
    pub max_condition: f64,
    pub ridge_fits: usize,
    pub max_truncation_rate: f64,
    pub min_dphi: Option<f64>,
    pub max_dphi: Option<f64>,
    pub warnings: Vec<String>,
}

/// Per-path solution, time-major: `y[i][m]` for `i = 0..=N`, `z[i][m]` for `i < N`.
#[derive(Clone, Debug)]
pub struct BsdeSolution {
    pub times: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    /// Monte Carlo standard error of the step mean, from the pathwise sums
    /// `ξ + Σ_{j≥i} g_j Δt` whose mean the fitted `Y_i` reproduces.
    pub y_se: Vec<f64>,
    pub z_se: Vec<f64>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSummary {
    pub t: f64,
    pub mean_y: f64,
    pub se_y: f64,
    pub mean_z: f64,
    pub se_z: f64,
}

pub(crate) fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl BsdeSolution {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn y0(&self) -> f64 {
        mean_and_se(&self.y[0]).0
    }

    pub fn y0_se(&self) -> f64 {
        self.y_se[0]
    }

    pub fn z0(&self) -> f64 {
        mean_and_se(&self.z[0]).0
    }

    /// Rows for `t_0..t_N`; the terminal row repeats the last `Z` summary.
    pub fn summary(&self) -> Vec<StepSummary> {
        let n = self.n_steps();
        (0..=n)
            .map(|i| {
                let zi = i.min(n - 1);
                StepSummary {
                    t: self.times[i],
                    mean_y: mean_and_se(&self.y[i]).0,
                    se_y: self.y_se[i],
                    mean_z: mean_and_se(&self.z[zi]).0,
                    se_z: self.z_se[zi],
                }
            })
            .collect()
    }

    /// `sup_i E[Y_i²]` and `E[Σ_i Z_i² Δt_i]`, empirical.
    pub fn second_moments(&self) -> (f64, f64) {
        let m = self.y[0].len() as f64;
        let sup_y2 = self
            .y
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>() / m)
            .fold(0.0_f64, f64::max);
        let z2: f64 = self
            .z
            .iter()
            .enumerate()
            .map(|(i, row)| (self.times[i + 1] - self.times[i]) * row.iter().map(|v| v * v).sum::<f64>() / m)
            .sum();
        (sup_y2, z2)
    }

    /// Delta-method transport of the standard errors through a change of
    /// variables with mean slope `scale[i]` at step `i`.
    pub(crate) fn rescale_se(&mut self, scale: &[f64]) {
        for (se, s) in self.y_se.iter_mut().zip(scale) {
            *se *= s.abs();
        }
        for (se, s) in self.z_se.iter_mut().zip(scale) {
            *se *= s.abs();
        }
    }
}

/// Backward induction on given forward paths with terminal values `terminal`
/// and a fallible generator.
pub(crate) fn lsmc_core<G>(
    paths: &ForwardPaths,
    terminal: Vec<f64>,
    generator: &G,
    disc: &Discretization,
) -> Result<BsdeSolution, BsdeError>
where
    G: Fn(f64, f64, f64) -> Result<f64, BsdeError> + Sync,
{
    let n = paths.n_steps();
    let m = paths.n_paths();
    let bound = disc.truncation;
    let mut y = vec![Vec::new(); n + 1];
    let mut z = vec![Vec::new(); n];
    let mut y_se = vec![0.0; n + 1];
    let mut z_se = vec![0.0; n];
    let mut diag = Diagnostics::default();
    y_se[n] = mean_and_se(&terminal).1;
    let mut pathwise = terminal.clone();
    y[n] = terminal;
    for i in (0..n).rev() {
        let t = paths.times[i];
        let dt = paths.times[i + 1] - t;
        let design = Design::new(&disc.basis, &paths.x[i])?;
        diag.max_condition = diag.max_condition.max(design.condition());
        if design.ridge() > 0.0 {
            diag.ridge_fits += 1;
            diag.warnings
                .push(format!("ridge {:.3e} used at t = {t} (condition {:.3e})", design.ridge(), design.condition()));
        }
        let next = &y[i + 1];
        let conditional = design.predict(&design.fit(next));
        // E[ĉ(X_i) ΔW_i | X_i] = 0, so centring the target leaves the regression
        // function unchanged and removes most of its variance
        let z_target: Vec<f64> = (0..m).map(|k| (next[k] - conditional[k]) * paths.dw[i][k] / dt).collect();
        let zi = design.predict(&design.fit(&z_target));
        let predictor: Vec<f64> = conditional.into_iter().map(|v| v.clamp(-bound, bound)).collect();
        let y_target: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|k| generator(t, predictor[k], zi[k]).map(|g| next[k] + g * dt))
            .collect::<Result<_, _>>()?;
        if y_target.iter().chain(&z_target).any(|v| !v.is_finite()) {
            return Err(BsdeError::NonFinite { t });
        }
        let mut yi = design.predict(&design.fit(&y_target));
        let mut clipped = 0usize;
        for v in yi.iter_mut() {
            if v.abs() > bound {
                *v = v.clamp(-bound, bound);
                clipped += 1;
            }
        }
        let rate = clipped as f64 / m as f64;
        diag.max_truncation_rate = diag.max_truncation_rate.max(rate);
        if rate > 0.1 {
            diag.warnings
                .push(format!("truncation at ±{bound} active on {:.1}% of paths at t = {t}", 100.0 * rate));
        }
        for k in 0..m {
            pathwise[k] += y_target[k] - next[k];
        }
        y_se[i] = mean_and_se(&pathwise).1;
        z_se[i] = mean_and_se(&z_target).1;
        y[i] = yi;
        z[i] = zi;
    }
    Ok(BsdeSolution {
        times: paths.times.clone(),
        y,
        z,
        y_se,
        z_se,
        diagnostics: diag,
    })
}

/// LSMC for a problem without rough part.
pub fn solve_backward_lsmc(problem: &BsdeProblem, disc: &Discretization) -> Result<BsdeSolution, BsdeError> {
    if problem.rough.is_some() {
        return Err(BsdeError::UnexpectedRoughPart);
    }
    let paths = simulate_forward(&problem.forward, problem.horizon, disc)?;
    solve_backward_paths(problem, &paths, disc)
}

/// As [`solve_backward_lsmc`] on precomputed forward paths.
pub fn solve_backward_paths(
    problem: &BsdeProblem,
    paths: &ForwardPaths,
    disc: &Discretization,
) -> Result<BsdeSolution, BsdeError> {
    let terminal: Vec<f64> = paths.x[paths.n_steps()].iter().map(|&x| (problem.terminal)(x)).collect();
    let g = &problem.generator;
    let mut sol = lsmc_core(paths, terminal, &|t, y, z| Ok(g.eval(t, y, z)), disc)?;
    sol.diagnostics.route = "lsmc".into();
    Ok(sol)
}

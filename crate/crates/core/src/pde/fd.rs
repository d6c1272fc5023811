use crate::bsde::time_grid;

use super::{PdeError, PdeProblem, PdeSolution};

const FIXED_POINT_TOL: f64 = 1e-8;
const FIXED_POINT_CAP: usize = 50;

/// Centred difference coefficients of `½σ² ∂_xx + b ∂_x` at every node:
/// `(lower, diagonal, upper)`.
fn operator(problem: &PdeProblem, t: f64, xs: &[f64], dx: f64) -> Vec<(f64, f64, f64)> {
    xs.iter()
        .map(|&x| {
            let s2 = problem.forward.diffusion(t, x).powi(2);
            let b = problem.forward.drift(t, x);
            let diff = 0.5 * s2 / (dx * dx);
            let adv = 0.5 * b / dx;
            (diff - adv, -2.0 * diff, diff + adv)
        })
        .collect()
}

fn apply(op: &[(f64, f64, f64)], v: &[f64], j: usize) -> f64 {
    let (a, b, c) = op[j];
    a * v[j - 1] + b * v[j] + c * v[j + 1]
}

/// `f(t, v_j, σ v_x)` at interior nodes (index 0 is node 1).
fn nonlinearity(problem: &PdeProblem, t: f64, xs: &[f64], dx: f64, v: &[f64]) -> Result<Vec<f64>, PdeError> {
    (1..xs.len() - 1)
        .map(|j| {
            let w = problem.forward.diffusion(t, xs[j]) * (v[j + 1] - v[j - 1]) / (2.0 * dx);
            let f = (problem.generator)(t, v[j], w)?;
            if f.is_finite() {
                Ok(f)
            } else {
                Err(PdeError::NonFinite { t, x: xs[j] })
            }
        })
        .collect()
}

/// Thomas algorithm; `a[0]` and `c[last]` are ignored.
fn tridiagonal(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let m = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / m;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

fn check_stability(problem: &PdeProblem, times: &[f64], xs: &[f64], dt: f64, dx: f64) -> Result<(), PdeError> {
    if problem.theta >= 0.5 {
        return Ok(());
    }
    let mut ratio = 0.0_f64;
    for &t in times {
        for &x in xs {
            ratio = ratio.max((1.0 - 2.0 * problem.theta) * problem.forward.diffusion(t, x).powi(2) * dt / (dx * dx));
        }
    }
    if ratio > 1.0 {
        return Err(PdeError::Unstable { ratio });
    }
    Ok(())
}

/// θ-scheme in time, centred differences in space, `v_xx = 0` at the lateral
/// boundaries. The nonlinearity is weighted like the operator and resolved by
/// fixed-point iteration at every step.
pub fn solve_fd_semilinear(problem: &PdeProblem, nt: usize, nx: usize) -> Result<PdeSolution, PdeError> {
    if nt == 0 || nx < 4 {
        return Err(PdeError::InvalidGrid { nt, nx });
    }
    let start = problem.forward.start;
    if !(problem.x_max > problem.x_min) || !(problem.horizon > start) {
        return Err(PdeError::InvalidDomain {
            lo: problem.x_min,
            hi: problem.x_max,
        });
    }
    if !(0.0..=1.0).contains(&problem.theta) {
        return Err(PdeError::InvalidDomain {
            lo: problem.x_min,
            hi: problem.x_max,
        });
    }
    let dt = (problem.horizon - start) / nt as f64;
    let dx = (problem.x_max - problem.x_min) / nx as f64;
    let times = time_grid(start, problem.horizon, nt);
    let xs: Vec<f64> = (0..=nx)
        .map(|j| if j == nx { problem.x_max } else { problem.x_min + j as f64 * dx })
        .collect();
    check_stability(problem, &times, &xs, dt, dx)?;

    let theta = problem.theta;
    let inner = nx - 1;
    let mut values = vec![Vec::new(); nt + 1];
    let mut iterations = vec![0; nt];
    values[nt] = xs.iter().map(|&x| (problem.terminal)(x)).collect();

    for n in (0..nt).rev() {
        let (t, t_next) = (times[n], times[n + 1]);
        let next = &values[n + 1];
        let op_next = operator(problem, t_next, &xs, dx);
        let f_next = nonlinearity(problem, t_next, &xs, dx, next)?;
        let known: Vec<f64> = (1..=inner)
            .map(|j| next[j] + (1.0 - theta) * dt * (apply(&op_next, next, j) + f_next[j - 1]))
            .collect();

        let op = operator(problem, t, &xs, dx);
        let (mut a, mut b, mut c) = (vec![0.0; inner], vec![0.0; inner], vec![0.0; inner]);
        for k in 0..inner {
            let (lo, di, up) = op[k + 1];
            a[k] = -theta * dt * lo;
            b[k] = 1.0 - theta * dt * di;
            c[k] = -theta * dt * up;
        }
        // v_0 = 2 v_1 - v_2 and v_nx = 2 v_{nx-1} - v_{nx-2} folded into the end rows
        let (a0, c_last) = (a[0], c[inner - 1]);
        b[0] += 2.0 * a0;
        c[0] -= a0;
        b[inner - 1] += 2.0 * c_last;
        a[inner - 1] -= c_last;

        let mut current = next.clone();
        let mut converged = false;
        let mut change = f64::INFINITY;
        for iter in 1..=FIXED_POINT_CAP {
            let f = if theta > 0.0 {
                nonlinearity(problem, t, &xs, dx, &current)?
            } else {
                vec![0.0; inner]
            };
            let rhs: Vec<f64> = (0..inner).map(|k| known[k] + theta * dt * f[k]).collect();
            let interior = tridiagonal(&a, &b, &c, &rhs);
            let mut updated = vec![0.0; nx + 1];
            updated[1..=inner].copy_from_slice(&interior);
            updated[0] = 2.0 * updated[1] - updated[2];
            updated[nx] = 2.0 * updated[nx - 1] - updated[nx - 2];
            if let Some(j) = updated.iter().position(|v| !v.is_finite()) {
                return Err(PdeError::NonFinite { t, x: xs[j] });
            }
            change = updated
                .iter()
                .zip(&current)
                .fold(0.0_f64, |m, (u, v)| m.max((u - v).abs()));
            current = updated;
            iterations[n] = iter;
            if change <= FIXED_POINT_TOL || theta == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(PdeError::NoConvergence {
                t,
                iterations: FIXED_POINT_CAP,
                change,
            });
        }
        values[n] = current;
    }
    Ok(PdeSolution {
        times,
        xs,
        values,
        dt,
        dx,
        iterations,
    })
}

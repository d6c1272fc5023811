use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::{solve_fd_semilinear, PdeError, PdeProblem, PdeSolution};
use crate::bsde::{solve_backward_lsmc, solve_rough_qbsde, time_grid, BsdeProblem, Discretization, RoughConfig};
use crate::flows::{Flow, FlowMap, FlowSpec, FlowTable, TableStats};

/// `u(t_n, x_j) = Φ(t_n, v(t_n, x_j))` on the grid of `v`.
pub fn compose_rough_solution(v: &PdeSolution, flow: &dyn FlowMap) -> Result<PdeSolution, PdeError> {
    if flow.is_identity() {
        return Ok(v.clone());
    }
    let values = v
        .times
        .par_iter()
        .zip(v.values.par_iter())
        .map(|(&t, row)| {
            row.iter()
                .map(|&y| Ok(flow.value(t, y)?.phi))
                .collect::<Result<Vec<f64>, PdeError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PdeSolution { values, ..v.clone() })
}

#[derive(Clone, Debug)]
pub struct ComposedSolution {
    /// Solution of the transformed PDE.
    pub v: PdeSolution,
    /// `Φ(t, v)`, the solution of the equation with the rough source.
    pub u: PdeSolution,
    pub stats: Option<TableStats>,
}

/// Transformed FD solve followed by composition with the flow, tabulated at
/// the PDE time nodes (same table defaults as the rough BSDE solver).
pub fn solve_composed(
    problem: &BsdeProblem,
    nt: usize,
    nx: usize,
    domain: (f64, f64),
    config: &RoughConfig,
) -> Result<ComposedSolution, PdeError> {
    let identity = match &problem.rough {
        None => true,
        Some(r) => FlowSpec::new(r.fields.clone(), r.driver.clone())?.is_identity(),
    };
    if identity {
        let v = solve_fd_semilinear(&PdeProblem::plain(problem, domain), nt, nx)?;
        return Ok(ComposedSolution {
            u: v.clone(),
            v,
            stats: None,
        });
    }
    let rough = problem.rough.as_ref().unwrap();
    let flow = Flow::new(FlowSpec::new(rough.fields.clone(), rough.driver.clone())?, config.flow)?;
    let times = time_grid(problem.forward.start, problem.horizon, nt);
    let max_psi = (0..=nx)
        .map(|j| (problem.terminal)(domain.0 + (domain.1 - domain.0) * j as f64 / nx as f64).abs())
        .fold(0.0_f64, f64::max);
    let half_width = config.y_half_width.unwrap_or(2.0 * max_psi + 10.0);
    let cells = config
        .y_cells
        .unwrap_or(((40.0 * half_width).ceil() as usize).clamp(400, 4000));
    let table = Arc::new(FlowTable::build(&flow, &times, -half_width, half_width, cells)?);
    let stats = table.stats();
    let v = solve_fd_semilinear(&PdeProblem::transformed(problem, table.clone(), domain), nt, nx)?;
    let u = compose_rough_solution(&v, table.as_ref())?;
    Ok(ComposedSolution {
        v,
        u,
        stats: Some(stats),
    })
}

/// `Y_s` of the problem restarted at `X_s = x`: (estimate, standard error).
pub fn feynman_kac_mc(
    s: f64,
    x: f64,
    problem: &BsdeProblem,
    disc: &Discretization,
    config: &RoughConfig,
) -> Result<(f64, f64), PdeError> {
    let mut restarted = problem.clone();
    restarted.forward.start = s;
    restarted.forward.x0 = x;
    let sol = if restarted.rough.is_some() {
        solve_rough_qbsde(&restarted, disc, config)?
    } else {
        solve_backward_lsmc(&restarted, disc)?
    };
    Ok((sol.y0(), sol.y0_se()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComparisonRow {
    pub x: f64,
    pub mc_estimate: f64,
    pub mc_se: f64,
    pub fd_value: f64,
    pub abs_diff: f64,
}

impl ComparisonRow {
    /// `|mc - fd| ≤ max(k · se, floor)`.
    pub fn agrees(&self, k: f64, floor: f64) -> bool {
        self.abs_diff <= (k * self.mc_se).max(floor)
    }
}

/// Monte Carlo at the first time of `u` against the FD values at `xs`.
pub fn compare_feynman_kac(
    problem: &BsdeProblem,
    u: &PdeSolution,
    xs: &[f64],
    disc: &Discretization,
    config: &RoughConfig,
) -> Result<Vec<ComparisonRow>, PdeError> {
    let s = u.times[0];
    xs.iter()
        .map(|&x| {
            let (mc_estimate, mc_se) = feynman_kac_mc(s, x, problem, disc, config)?;
            let fd_value = u.value_at(0, x)?;
            Ok(ComparisonRow {
                x,
                mc_estimate,
                mc_se,
                fd_value,
                abs_diff: (mc_estimate - fd_value).abs(),
            })
        })
        .collect()
}

pub fn write_comparison_csv<P: AsRef<Path>>(rows: &[ComparisonRow], file: P) -> Result<(), PdeError> {
    let mut w = csv::Writer::from_path(file)?;
    w.write_record(["x", "mc_estimate", "mc_se", "fd_value", "abs_diff"])?;
    for r in rows {
        let cells = [r.x, r.mc_estimate, r.mc_se, r.fd_value, r.abs_diff];
        if cells.iter().any(|v| !v.is_finite()) {
            return Err(PdeError::NonFinite { t: f64::NAN, x: r.x });
        }
        w.write_record(cells.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

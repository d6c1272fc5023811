use std::sync::Arc;

use rayon::prelude::*;

use super::lsmc::lsmc_core;
use super::{
    simulate_forward, BsdeError, BsdeProblem, BsdeSolution, Discretization, ForwardPaths, RoughConfig, RoughPart,
    ZvonkinConfig,
};
use crate::flows::{flow_inverse, Flow, FlowMap, FlowSpec, FlowTable, InverseConfig, SharedField};
use crate::transforms::{DossSussmann, ZvonkinField, ZvonkinGenerator, ZvonkinMap};

/// Doss–Sussmann route: tabulate the flow of the rough part at the time
/// nodes, solve the transformed BSDE by LSMC and map back through the flow.
pub fn solve_rough_qbsde(
    problem: &BsdeProblem,
    disc: &Discretization,
    config: &RoughConfig,
) -> Result<BsdeSolution, BsdeError> {
    let paths = simulate_forward(&problem.forward, problem.horizon, disc)?;
    solve_rough_paths(problem, &paths, disc, config)
}

pub fn solve_rough_paths(
    problem: &BsdeProblem,
    paths: &ForwardPaths,
    disc: &Discretization,
    config: &RoughConfig,
) -> Result<BsdeSolution, BsdeError> {
    let rough = problem.rough.as_ref().ok_or(BsdeError::MissingRoughPart)?;
    let spec = FlowSpec::new(rough.fields.clone(), rough.driver.clone())?;
    let terminal: Vec<f64> = paths.x[paths.n_steps()].iter().map(|&x| (problem.terminal)(x)).collect();
    let g = &problem.generator;
    if spec.is_identity() {
        let mut sol = lsmc_core(paths, terminal, &|t, y, z| Ok(g.eval(t, y, z)), disc)?;
        sol.diagnostics.route = "doss_sussmann".into();
        sol.diagnostics.min_dphi = Some(1.0);
        sol.diagnostics.max_dphi = Some(1.0);
        return Ok(sol);
    }

    let flow = Flow::new(spec, config.flow)?;
    let max_xi = terminal.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let half_width = config.y_half_width.unwrap_or(2.0 * max_xi + 10.0);
    let cells = config
        .y_cells
        .unwrap_or(((40.0 * half_width).ceil() as usize).clamp(400, 4000));
    let table = Arc::new(FlowTable::build(&flow, &paths.times, -half_width, half_width, cells)?);
    let stats = table.stats();
    let ds = DossSussmann::new(table.clone(), g.clone());

    let mut warnings = Vec::new();
    if config.growth_check {
        let growth = ds.transported_growth(&stats);
        let ys: Vec<f64> = (-10..=10).map(|k| 0.05 * half_width * k as f64).collect();
        let zs: Vec<f64> = (-10..=10).map(|k| 0.5 * k as f64).collect();
        let n = paths.n_steps();
        for i in (0..n).step_by((n / 8).max(1)) {
            if let Some((y, z)) = ds.growth_violation(&growth, paths.times[i], &ys, &zs)? {
                warnings.push(format!(
                    "transported growth bound violated at t = {}, y = {y}, z = {z}",
                    paths.times[i]
                ));
            }
        }
    }

    let inner = Discretization {
        truncation: disc.truncation.min(half_width),
        ..disc.clone()
    };
    let mut sol = lsmc_core(
        paths,
        terminal.clone(),
        &|t, y, z| ds.generator(t, y, z).map_err(BsdeError::from),
        &inner,
    )?;

    let n = sol.n_steps();
    let mut scale = vec![1.0; n + 1];
    for i in 0..n {
        let t = sol.times[i];
        let mapped: Vec<(f64, f64, f64)> = sol.y[i]
            .par_iter()
            .zip(sol.z[i].par_iter())
            .map(|(&yt, &zt)| {
                let v = table.value(t, yt)?;
                Ok((v.phi, v.dphi * zt, v.dphi))
            })
            .collect::<Result<_, BsdeError>>()?;
        scale[i] = mapped.iter().map(|v| v.2).sum::<f64>() / mapped.len() as f64;
        sol.y[i] = mapped.iter().map(|v| v.0).collect();
        sol.z[i] = mapped.iter().map(|v| v.1).collect();
    }
    sol.y[n] = terminal;
    sol.rescale_se(&scale);
    sol.diagnostics.route = "doss_sussmann".into();
    sol.diagnostics.min_dphi = Some(stats.min_dphi);
    sol.diagnostics.max_dphi = Some(stats.max_dphi);
    sol.diagnostics.warnings.extend(warnings);
    Ok(sol)
}

/// Zvonkin route for generators `a + b|y| + c|z| + f(y) z²`: solve for
/// `Ỹ = u(Y)` with fields `G̃` and generator `g̃`, then map back.
pub fn solve_via_zvonkin(
    problem: &BsdeProblem,
    disc: &Discretization,
    rough_config: &RoughConfig,
    config: &ZvonkinConfig,
) -> Result<BsdeSolution, BsdeError> {
    let paths = simulate_forward(&problem.forward, problem.horizon, disc)?;
    solve_via_zvonkin_paths(problem, &paths, disc, rough_config, config)
}

pub fn solve_via_zvonkin_paths(
    problem: &BsdeProblem,
    paths: &ForwardPaths,
    disc: &Discretization,
    rough_config: &RoughConfig,
    config: &ZvonkinConfig,
) -> Result<BsdeSolution, BsdeError> {
    let mixed = problem.generator.mixed_form().ok_or(BsdeError::NotZvonkinForm)?;
    let map = Arc::new(ZvonkinMap::build(mixed.f.clone(), config.half_width, config.quad_tol)?);
    let psi = problem.terminal.clone();
    let u = map.clone();
    let transformed = BsdeProblem {
        terminal: Arc::new(move |x| u.u(psi(x))),
        generator: Arc::new(ZvonkinGenerator {
            map: map.clone(),
            a: mixed.a,
            b: mixed.b,
            c: mixed.c,
            reading: config.reading,
        }),
        rough: problem.rough.as_ref().map(|r| RoughPart {
            fields: r
                .fields
                .iter()
                .map(|g| Arc::new(ZvonkinField::new(map.clone(), g.clone(), config.reading)) as SharedField)
                .collect(),
            driver: r.driver.clone(),
        }),
        forward: problem.forward.clone(),
        horizon: problem.horizon,
    };
    let mut sol = if transformed.rough.is_some() {
        solve_rough_paths(&transformed, paths, disc, rough_config)?
    } else {
        let mut s = super::solve_backward_paths(&transformed, paths, disc)?;
        s.diagnostics.route = "zvonkin".into();
        s
    };
    if map.is_identity() {
        return Ok(sol);
    }

    let (lo, hi) = map.range();
    let n = sol.n_steps();
    let mut scale = vec![1.0; n + 1];
    for i in 0..=n {
        let t = sol.times[i];
        if let Some(&y) = sol.y[i].iter().find(|&&y| !(y >= lo && y <= hi)) {
            return Err(BsdeError::Range { t, y, lo, hi });
        }
        let ys: Vec<f64> = sol.y[i].par_iter().map(|&y| map.inverse(y)).collect();
        let du: Vec<f64> = ys.par_iter().map(|&y| map.du(y)).collect();
        scale[i] = du.iter().map(|d| 1.0 / d).sum::<f64>() / du.len() as f64;
        if i < n {
            sol.z[i] = sol.z[i].iter().zip(&du).map(|(z, d)| z / d).collect();
        }
        sol.y[i] = ys;
    }
    sol.y[n] = paths.x[n].iter().map(|&x| (problem.terminal)(x)).collect();
    sol.rescale_se(&scale);
    sol.diagnostics.route = "zvonkin".into();
    Ok(sol)
}

/// Mean over paths of `Σ_i r_i²` with the one-step defect
/// `r_i = Y_i - Y_{i+1} - g(t_i, Y_i, Z_i) Δt - ρ_i + Z_i ΔW_i`, where the
/// rough increment `ρ_i = Φ(t_i, Φ(t_{i+1}, ·)⁻¹(Y_{i+1})) - Y_{i+1}` uses
/// `flow` when given.
pub fn discrete_residual(
    problem: &BsdeProblem,
    paths: &ForwardPaths,
    sol: &BsdeSolution,
    flow: Option<&dyn FlowMap>,
) -> Result<f64, BsdeError> {
    let n = sol.n_steps();
    let m = sol.y[0].len();
    let inv = InverseConfig::default();
    let per_path: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|k| {
            let mut total = 0.0;
            for i in 0..n {
                let (t, t1) = (sol.times[i], sol.times[i + 1]);
                let (yi, y1, zi) = (sol.y[i][k], sol.y[i + 1][k], sol.z[i][k]);
                let rho = match flow {
                    Some(f) if !f.is_identity() => {
                        let base = flow_inverse(f, t1, y1, &inv)?;
                        f.value(t, base)?.phi - y1
                    }
                    _ => 0.0,
                };
                let r = yi - y1 - problem.generator.eval(t, yi, zi) * (t1 - t) - rho + zi * paths.dw[i][k];
                total += r * r;
            }
            Ok(total)
        })
        .collect::<Result<_, BsdeError>>()?;
    Ok(per_path.iter().sum::<f64>() / m as f64)
}

use std::sync::Arc;

use super::*;
use crate::bsde::{BsdeProblem, Discretization, ForwardModel, RoughConfig, RoughPart};
use crate::flows::{AffineField, Driver, Flow, FlowConfig, FlowSpec, SineField, ZeroField};
use crate::rough_path::SmoothPath;
use crate::transforms::{IntegrableFn, QuadraticGenerator, ZeroGenerator};

fn heat(terminal: Terminal, generator: PdeGenerator) -> PdeProblem {
    PdeProblem::new(ForwardModel::arithmetic(0.0, 1.0, 0.0), generator, terminal, 1.0, (-6.0, 6.0))
}

fn zero_gen() -> PdeGenerator {
    Arc::new(|_, _, _| Ok(0.0))
}

/// Largest error against `exact(t, x)` over nodes with `|x| ≤ window`.
fn max_error(sol: &PdeSolution, window: f64, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let mut worst = 0.0_f64;
    for (n, row) in sol.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if sol.xs[j].abs() <= window {
                worst = worst.max((v - exact(sol.times[n], sol.xs[j])).abs());
            }
        }
    }
    worst
}

fn quadratic(c: f64) -> QuadraticGenerator {
    QuadraticGenerator {
        f: IntegrableFn::Constant {
            value: c,
            lo: -10.0,
            hi: 10.0,
        },
    }
}

fn bsde(generator: crate::transforms::SharedGenerator, terminal: Terminal) -> BsdeProblem {
    BsdeProblem {
        terminal,
        generator,
        rough: None,
        forward: ForwardModel::arithmetic(0.0, 1.0, 0.0),
        horizon: 1.0,
    }
}

#[test]
fn heat_fixes_linear_functions() {
    let sol = solve_fd_semilinear(&heat(Arc::new(|x| x), zero_gen()), 50, 60).unwrap();
    assert!(max_error(&sol, f64::INFINITY, |_, x| x) <= 1e-10);
}

#[test]
fn heat_on_square() {
    let sol = solve_fd_semilinear(&heat(Arc::new(|x| x * x), zero_gen()), 200, 200).unwrap();
    // the lateral rule imposes v_xx = 0 where the exact solution has v_xx = 2;
    // the boundary layer decays like a Gaussian tail, so check the central quarter
    let err = max_error(&sol, 1.5, |t, x| x * x + 1.0 - t);
    assert!(err <= 1e-6, "{err}");
}

#[test]
fn cole_hopf_pde() {
    let c = 0.25;
    let sol = solve_fd_semilinear(&heat(Arc::new(|x| x), Arc::new(move |_, _, w| Ok(c * w * w))), 100, 120).unwrap();
    let err = max_error(&sol, f64::INFINITY, |t, x| x + c * (1.0 - t));
    assert!(err <= 1e-4, "{err}");
    assert!(sol.iterations.iter().all(|&k| k <= 3));
}

#[test]
fn grid_convergence_on_sine() {
    let errors: Vec<f64> = [25, 50, 100]
        .iter()
        .map(|&n| {
            let sol = solve_fd_semilinear(&heat(Arc::new(f64::sin), zero_gen()), n, 2 * n).unwrap();
            max_error(&sol, 2.0, |t, x| (-(1.0 - t) / 2.0).exp() * x.sin())
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn terminal_slice_is_exact() {
    let sol = solve_fd_semilinear(&heat(Arc::new(f64::tanh), Arc::new(|_, _, w| Ok(0.3 * w * w))), 20, 40).unwrap();
    assert!(sol.xs.iter().zip(&sol.values[20]).all(|(x, v)| *v == x.tanh()));
    assert_eq!(sol.times[20], 1.0);
}

#[test]
fn explicit_scheme_checks_stability() {
    let mut p = heat(Arc::new(|x| x), zero_gen());
    p.theta = 0.0;
    assert!(matches!(solve_fd_semilinear(&p, 10, 200), Err(PdeError::Unstable { .. })));
    let sol = solve_fd_semilinear(&p, 2000, 40).unwrap();
    assert!(max_error(&sol, f64::INFINITY, |_, x| x) <= 1e-10);
}

#[test]
fn stiff_nonlinearity_fails_to_converge() {
    let p = heat(Arc::new(|x| x), Arc::new(|_, v, _| Ok(10.0 * v)));
    let err = solve_fd_semilinear(&p, 1, 20).unwrap_err();
    assert!(matches!(err, PdeError::NoConvergence { .. }), "{err}");
    assert!(matches!(solve_fd_semilinear(&p, 10, 3), Err(PdeError::InvalidGrid { .. })));
}

#[test]
fn composition_with_identity_flow() {
    let v = solve_fd_semilinear(&heat(Arc::new(f64::tanh), zero_gen()), 20, 40).unwrap();
    let spec = FlowSpec::new(vec![Arc::new(ZeroField)], Driver::Smooth(SmoothPath::linear(vec![1.0], 1.0))).unwrap();
    let flow = Flow::new(spec, FlowConfig::default()).unwrap();
    let u = compose_rough_solution(&v, &flow).unwrap();
    assert_eq!(u.values, v.values);
}

#[test]
fn composition_with_linear_flow() {
    let lambda = 0.4;
    let v = solve_fd_semilinear(&heat(Arc::new(f64::tanh), zero_gen()), 20, 40).unwrap();
    let spec = FlowSpec::new(
        vec![Arc::new(AffineField::linear(lambda))],
        Driver::Smooth(SmoothPath::linear(vec![1.0], 1.0)),
    )
    .unwrap();
    let flow = Flow::new(spec, FlowConfig::default()).unwrap();
    let u = compose_rough_solution(&v, &flow).unwrap();
    for n in 0..=20 {
        let factor = (lambda * (1.0 - v.times[n])).exp();
        for j in 0..v.xs.len() {
            assert!((u.values[n][j] - v.values[n][j] * factor).abs() < 1e-9);
        }
    }
    assert!(u.values[20].iter().zip(&v.xs).all(|(u, x)| *u == x.tanh()));
}

#[test]
fn feynman_kac_martingale() {
    let p = bsde(Arc::new(ZeroGenerator), Arc::new(|x| x));
    let disc = Discretization {
        n_steps: 10,
        n_paths: 10_000,
        seed: 1,
        ..Discretization::default()
    };
    for x in [-1.0, 0.5] {
        let (est, se) = feynman_kac_mc(0.0, x, &p, &disc, &RoughConfig::default()).unwrap();
        assert!((est - x).abs() <= 3.0 * se, "{est} ± {se}");
    }
}

#[test]
fn feynman_kac_quadratic_from_later_start() {
    let c = 0.25;
    let p = bsde(Arc::new(quadratic(c)), Arc::new(|x| x));
    let disc = Discretization {
        n_steps: 25,
        n_paths: 10_000,
        seed: 2,
        ..Discretization::default()
    };
    let (s, x) = (0.5, 0.7);
    let (est, se) = feynman_kac_mc(s, x, &p, &disc, &RoughConfig::default()).unwrap();
    let exact = x + c * (1.0 - s);
    assert!((est - exact).abs() <= (3.0 * se).max(5e-2), "{est} vs {exact}");
}

fn rough_quadratic(fields: Vec<crate::flows::SharedField>, path: SmoothPath, terminal: Terminal) -> BsdeProblem {
    let mut p = bsde(Arc::new(quadratic(0.25)), terminal);
    p.rough = Some(RoughPart {
        fields,
        driver: Driver::Smooth(path),
    });
    p
}

#[test]
fn feynman_kac_matches_composed_fd() {
    let p = rough_quadratic(
        vec![Arc::new(AffineField::linear(0.5))],
        SmoothPath::linear(vec![1.0], 1.0),
        Arc::new(|x| x),
    );
    let composed = solve_composed(&p, 100, 200, (-6.0, 6.0), &RoughConfig::default()).unwrap();
    let disc = Discretization {
        n_steps: 25,
        n_paths: 10_000,
        seed: 3,
        ..Discretization::default()
    };
    let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let rows = compare_feynman_kac(&p, &composed.u, &xs, &disc, &RoughConfig::default()).unwrap();
    for r in &rows {
        assert!(r.abs_diff <= 2e-2, "{r:?}");
    }
}

#[test]
fn direct_and_composed_solutions_agree() {
    let p = rough_quadratic(
        vec![Arc::new(SineField {
            amplitude: 0.3,
            frequency: 1.0,
        })],
        SmoothPath::sine(vec![0.5], vec![2.0 * std::f64::consts::PI], 1.0),
        Arc::new(f64::tanh),
    );
    let domain = (-6.0, 6.0);
    let composed = solve_composed(&p, 200, 200, domain, &RoughConfig::default()).unwrap();
    let direct = solve_fd_semilinear(&PdeProblem::direct(&p, domain).unwrap(), 200, 200).unwrap();
    let gap = max_error(&composed.u, 3.0, |t, x| {
        let n = direct.times.iter().position(|&s| s == t).unwrap();
        direct.value_at(n, x).unwrap()
    });
    assert!(gap <= 1e-3, "{gap}");
    assert!(composed.stats.unwrap().min_dphi > 0.0);
}

#[test]
fn outputs_are_written() {
    let sol = solve_fd_semilinear(&heat(Arc::new(|x| x), zero_gen()), 4, 8).unwrap();
    let dir = std::env::temp_dir().join(format!("pde-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    sol.write_csv(dir.join("v.csv")).unwrap();
    let text = std::fs::read_to_string(dir.join("v.csv")).unwrap();
    assert!(text.starts_with("t,x,value\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 9);
    let rows = [ComparisonRow {
        x: 0.0,
        mc_estimate: 0.26,
        mc_se: 0.01,
        fd_value: 0.25,
        abs_diff: 0.01,
    }];
    assert!(rows[0].agrees(3.0, 2e-2));
    write_comparison_csv(&rows, dir.join("cmp.csv")).unwrap();
    let text = std::fs::read_to_string(dir.join("cmp.csv")).unwrap();
    assert!(text.starts_with("x,mc_estimate,mc_se,fd_value,abs_diff\n"));
    let bad = [ComparisonRow { mc_se: f64::NAN, ..rows[0] }];
    assert!(write_comparison_csv(&bad, dir.join("bad.csv")).is_err());
}

#[test]
fn interpolation_reproduces_cubics() {
    let sol = solve_fd_semilinear(&heat(Arc::new(|x| x), zero_gen()), 2, 12).unwrap();
    let mut cubic = sol.clone();
    cubic.values[0] = sol.xs.iter().map(|x| x * x * x - x).collect();
    for x in [-5.9, -1.234, 0.0, 3.3, 6.0] {
        assert!((cubic.value_at(0, x).unwrap() - (x * x * x - x)).abs() < 1e-10);
    }
    assert!(matches!(cubic.value_at(0, 7.0), Err(PdeError::OffGrid { .. })));
    assert!(default_domain(&ForwardModel::arithmetic(0.1, 2.0, 1.0), 1.0) == (1.0 - 12.1, 1.0 + 12.1));
}

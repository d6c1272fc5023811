//! End-to-end runs across the public API: LSMC routes against the
//! finite-difference solution of the same problem.

use std::sync::Arc;

use roughbsde::bsde::{
    solve_backward_lsmc, solve_rough_qbsde, solve_via_zvonkin, BsdeProblem, Discretization, ForwardModel,
    RoughConfig, RoughPart, ZvonkinConfig,
};
use roughbsde::flows::{AffineField, Driver};
use roughbsde::pde::{default_domain, solve_composed, solve_fd_semilinear, PdeProblem};
use roughbsde::rough_path::{brownian_lift, dyadic_grid};
use roughbsde::transforms::{IntegrableFn, QuadraticGenerator};

fn cole_hopf() -> BsdeProblem {
    BsdeProblem {
        terminal: Arc::new(|x| x),
        generator: Arc::new(QuadraticGenerator {
            f: IntegrableFn::Constant {
                value: 0.25,
                lo: -10.0,
                hi: 10.0,
            },
        }),
        rough: None,
        forward: ForwardModel::arithmetic(0.0, 1.0, 0.0),
        horizon: 1.0,
    }
}

fn disc(n_steps: usize, n_paths: usize, seed: u64) -> Discretization {
    Discretization {
        n_steps,
        n_paths,
        seed,
        ..Discretization::default()
    }
}

#[test]
fn three_solvers_on_cole_hopf() {
    // exp(2cY) is a martingale, so Y_0 = c T
    let p = cole_hopf();
    let d = disc(40, 8_000, 11);
    let lsmc = solve_backward_lsmc(&p, &d).unwrap().y0();
    let zv = solve_via_zvonkin(&p, &d, &RoughConfig::default(), &ZvonkinConfig::default()).unwrap().y0();
    let domain = default_domain(&p.forward, p.horizon);
    let fd = solve_fd_semilinear(&PdeProblem::plain(&p, domain), 200, 400).unwrap();
    let fd0 = fd.value_at(0, 0.0).unwrap();
    assert!((fd0 - 0.25).abs() < 1e-3, "fd {fd0}");
    assert!((lsmc - 0.25).abs() < 5e-2, "lsmc {lsmc}");
    assert!((zv - 0.25).abs() < 5e-2, "zvonkin {zv}");
}

#[test]
fn rough_brownian_driver_against_composed_pde() {
    let mut p = cole_hopf();
    let grid = dyadic_grid(1.0, 6);
    p.rough = Some(RoughPart {
        fields: vec![Arc::new(AffineField::linear(0.4))],
        driver: Driver::Rough(brownian_lift(5, &grid, 1, 16).unwrap()),
    });
    let config = RoughConfig::default();
    let mc = solve_rough_qbsde(&p, &disc(32, 10_000, 12), &config).unwrap();
    let composed = solve_composed(&p, 64, 200, (-6.0, 6.0), &config).unwrap();
    let fd0 = composed.u.value_at(0, 0.0).unwrap();
    let gap = (mc.y0() - fd0).abs();
    assert!(gap <= 3.0 * mc.y_se[0] + 2e-2, "mc {} fd {fd0}", mc.y0());
    assert!(mc.diagnostics.min_dphi.unwrap() > 0.0);
}

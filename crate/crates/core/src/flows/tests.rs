use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::rough_path::{brownian_lift, dyadic_grid, lift_smooth_path_with, RoughPath, SmoothPath};

fn smooth_spec(fields: Vec<SharedField>, path: SmoothPath) -> FlowSpec {
    FlowSpec::new(fields, Driver::Smooth(path)).unwrap()
}

fn linear_flow() -> Flow {
    let spec = smooth_spec(vec![Arc::new(AffineField::linear(1.0))], SmoothPath::linear(vec![1.0], 1.0));
    Flow::new(spec, FlowConfig::default()).unwrap()
}

/// `G_1 = 1`, `G_2 = sin`: non-commuting, bounded with all derivatives.
fn noncommuting() -> Vec<SharedField> {
    vec![
        Arc::new(AffineField::constant(1.0)),
        Arc::new(SineField {
            amplitude: 1.0,
            frequency: 1.0,
        }),
    ]
}

fn curve() -> SmoothPath {
    SmoothPath::sine(vec![0.8, 0.6], vec![3.0, 5.0], 1.0)
}

#[test]
fn zero_field_gives_identity() {
    let spec = smooth_spec(vec![Arc::new(ZeroField)], SmoothPath::linear(vec![2.0], 1.0));
    let v = solve_ode_flow(&spec, FlowConfig::default(), 0.3, 1.7).unwrap();
    assert_eq!(v, FlowValue::identity(0.3, 1.7));
    let rp = brownian_lift(3, &dyadic_grid(1.0, 4), 1, 4).unwrap();
    let spec = FlowSpec::new(vec![Arc::new(ZeroField)], Driver::Rough(rp)).unwrap();
    let v = solve_rde_flow(&spec, FlowConfig::default(), 0.5, -2.0).unwrap();
    assert_eq!((v.phi, v.dphi, v.d2phi), (-2.0, 1.0, 0.0));
    let flow = Flow::new(spec, FlowConfig::default()).unwrap();
    assert_eq!(flow_inverse(&flow, 0.5, 3.25, &InverseConfig::default()).unwrap(), 3.25);
}

#[test]
fn linear_field_exponential() {
    let v = linear_flow().solve(0.0, 1.0).unwrap();
    let e = std::f64::consts::E;
    assert!((v.phi - e).abs() < 1e-8);
    assert!((v.dphi - e).abs() < 1e-8);
    assert!(v.d2phi.abs() < 1e-8);
}

#[test]
fn terminal_value_is_exact_identity() {
    let flow = Flow::new(smooth_spec(noncommuting(), curve()), FlowConfig::default()).unwrap();
    assert_eq!(flow.solve(1.0, 0.37).unwrap(), FlowValue::identity(1.0, 0.37));
}

#[test]
fn constant_field_translates_by_increment() {
    let path = curve();
    let spec = smooth_spec(
        vec![Arc::new(AffineField::constant(1.0)), Arc::new(AffineField::constant(0.0))],
        path.clone(),
    );
    for t in [0.0, 0.25, 0.6] {
        let v = solve_ode_flow(&spec, FlowConfig::default(), t, 0.5).unwrap();
        let inc = path.value(1.0)[0] - path.value(t)[0];
        assert!((v.phi - (0.5 + inc)).abs() < 1e-10, "t = {t}");
        assert!((v.dphi - 1.0).abs() < 1e-12);
    }
}

#[test]
fn commuting_fields_ignore_area() {
    let grid = dyadic_grid(1.0, 6);
    let rp = brownian_lift(11, &grid, 2, 8).unwrap();
    let (l1, l2) = (0.7, -0.4);
    let spec = FlowSpec::new(
        vec![Arc::new(AffineField::linear(l1)), Arc::new(AffineField::linear(l2))],
        Driver::Rough(rp.clone()),
    )
    .unwrap();
    // fine inner stepping so only the bracket cancellation is under test
    let config = FlowConfig {
        inner_steps: 16,
        ..FlowConfig::default()
    };
    let flow = Flow::new(spec, config).unwrap();
    let nodes = rp.node_values();
    let end = &nodes[nodes.len() - 1];
    for k in [0, 17, 40] {
        let t = grid[k];
        let exponent = l1 * (end[0] - nodes[k][0]) + l2 * (end[1] - nodes[k][1]);
        let v = flow.solve(t, 1.3).unwrap();
        assert!((v.phi - 1.3 * exponent.exp()).abs() < 1e-9, "t = {t}: {} vs {}", v.phi, 1.3 * exponent.exp());
        assert!((v.dphi - exponent.exp()).abs() < 1e-9);
    }
}

fn ode_reference(fields: Vec<SharedField>, path: SmoothPath) -> Flow {
    let config = FlowConfig {
        steps: 20_000,
        ..FlowConfig::default()
    };
    Flow::new(smooth_spec(fields, path), config).unwrap()
}

fn lifted_flow(fields: Vec<SharedField>, path: &SmoothPath, level: u32, degree: usize, refinement: usize) -> Flow {
    let rp = lift_smooth_path_with(path, &dyadic_grid(1.0, level), degree, refinement).unwrap();
    Flow::new(FlowSpec::new(fields, Driver::Rough(rp)).unwrap(), FlowConfig::default()).unwrap()
}

#[test]
fn rough_route_matches_ode_on_smooth_lift() {
    let fields: Vec<SharedField> = vec![Arc::new(AffineField::constant(1.0)), Arc::new(AffineField::linear(1.0))];
    let reference = ode_reference(fields.clone(), curve());
    let rough = lifted_flow(fields, &curve(), 8, 2, 16);
    for t in [0.0, 0.5] {
        let a = reference.solve(t, 0.4).unwrap();
        let b = rough.solve(t, 0.4).unwrap();
        assert!((a.phi - b.phi).abs() < 1e-4, "{a:?} vs {b:?}");
        assert!((a.dphi - b.dphi).abs() < 1e-4);
        assert!((a.d2phi - b.d2phi).abs() < 1e-4);
    }
}

#[test]
fn rough_route_converges_with_mesh() {
    let reference = ode_reference(noncommuting(), curve()).solve(0.0, 0.3).unwrap();
    let errors: Vec<f64> = [4, 5, 6]
        .iter()
        .map(|&level| {
            let v = lifted_flow(noncommuting(), &curve(), level, 2, 64).solve(0.0, 0.3).unwrap();
            (v.phi - reference.phi).abs()
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn level_three_terms_improve_coarse_steps() {
    let reference = ode_reference(noncommuting(), curve()).solve(0.0, 0.3).unwrap();
    let err = |degree| {
        let v = lifted_flow(noncommuting(), &curve(), 3, degree, 256).solve(0.0, 0.3).unwrap();
        (v.phi - reference.phi).abs()
    };
    let (e2, e3) = (err(2), err(3));
    assert!(e3 < e2, "degree 3 error {e3} vs degree 2 error {e2}");
}

#[test]
fn area_enters_with_bracket_sign() {
    // A single cell carrying the full L-path signature against the ODE on
    // the polyline: the level-2 error is third order, so halving the legs
    // cuts it by about eight.
    let gap = |leg: f64| {
        let path = SmoothPath::polyline(
            vec![0.0, 0.5, 1.0],
            vec![vec![0.0, 0.0], vec![leg, 0.0], vec![leg, leg]],
        )
        .unwrap();
        let fields = noncommuting();
        let exact = ode_reference(fields.clone(), path.clone()).solve(0.0, 0.2).unwrap();
        let rp = lift_smooth_path_with(&path, &[0.0, 1.0], 2, 1).unwrap();
        let one_cell = Flow::new(FlowSpec::new(fields, Driver::Rough(rp)).unwrap(), FlowConfig::default())
            .unwrap()
            .solve(0.0, 0.2)
            .unwrap();
        (exact.phi - one_cell.phi).abs()
    };
    let (a, b) = (gap(0.4), gap(0.2));
    assert!(b < a / 6.0, "{a} {b}");
}

#[test]
fn variational_derivatives_match_differences() {
    let h = 1e-4;
    for flow in [
        Flow::new(smooth_spec(noncommuting(), curve()), FlowConfig::default()).unwrap(),
        lifted_flow(noncommuting(), &curve(), 6, 2, 16),
    ] {
        let y = 0.45;
        let v = flow.solve(0.0, y).unwrap();
        let up = flow.solve(0.0, y + h).unwrap();
        let down = flow.solve(0.0, y - h).unwrap();
        let d1 = (up.phi - down.phi) / (2.0 * h);
        let d2 = (up.dphi - down.dphi) / (2.0 * h);
        assert!((v.dphi - d1).abs() < 1e-6, "{} vs {d1}", v.dphi);
        assert!((v.d2phi - d2).abs() < 1e-6, "{} vs {d2}", v.d2phi);
    }
}

#[test]
fn inverse_of_linear_flow() {
    let y = flow_inverse(&linear_flow(), 0.0, std::f64::consts::E, &InverseConfig::default()).unwrap();
    assert!((y - 1.0).abs() < 1e-8);
}

#[test]
fn inverse_round_trip_on_random_points() {
    use rand::Rng;
    let flow = Flow::new(smooth_spec(noncommuting(), curve()), FlowConfig { steps: 200, ..Default::default() }).unwrap();
    let mut rng = crate::rng::substream(5, 0);
    for _ in 0..100 {
        let y: f64 = rng.random_range(-3.0..3.0);
        let x = flow.solve(0.2, y).unwrap().phi;
        let back = flow_inverse(&flow, 0.2, x, &InverseConfig::default()).unwrap();
        assert!((back - y).abs() < 1e-8, "{y} -> {x} -> {back}");
    }
}

#[test]
fn inverse_derivative_identities() {
    let flow = Flow::new(smooth_spec(noncommuting(), curve()), FlowConfig { steps: 400, ..Default::default() }).unwrap();
    // second differences divide the inverse residual by h², so solve tightly
    let cfg = InverseConfig {
        tol: 1e-13,
        ..InverseConfig::default()
    };
    let h = 1e-3;
    for y in [-1.0, 0.3, 2.0] {
        let v = flow.solve(0.0, y).unwrap();
        let x = v.phi;
        let (psi, dpsi, d2psi) = flow_inverse_with_derivatives(&flow, 0.0, x, &cfg).unwrap();
        assert!((psi - y).abs() < 1e-8);
        assert!((dpsi * v.dphi - 1.0).abs() < 1e-9);
        let up = flow_inverse(&flow, 0.0, x + h, &cfg).unwrap();
        let down = flow_inverse(&flow, 0.0, x - h, &cfg).unwrap();
        let fd1 = (up - down) / (2.0 * h);
        let fd2 = (up - 2.0 * psi + down) / (h * h);
        assert!((fd1 - dpsi).abs() < 1e-5, "{fd1} vs {dpsi}");
        assert!((fd2 - d2psi).abs() < 1e-5, "{fd2} vs {d2psi}");
        assert!((d2psi + v.d2phi / v.dphi.powi(3)).abs() < 1e-12);
    }
}

#[test]
fn explosion_is_reported() {
    let spec = smooth_spec(vec![Arc::new(AffineField::linear(1.0))], SmoothPath::linear(vec![30.0], 1.0));
    let err = solve_ode_flow(&spec, FlowConfig::default(), 0.0, 1.0).unwrap_err();
    assert!(matches!(err, FlowError::Explosion { .. }), "{err}");
}

#[test]
fn nonpositive_derivative_is_reported() {
    let flow = linear_flow();
    let err = flow.check(0.5, &[0.0, -1e-3, 0.0]).unwrap_err();
    assert!(matches!(err, FlowError::Positivity { .. }));
}

#[test]
fn invalid_inputs() {
    let spec = smooth_spec(noncommuting(), curve());
    assert!(matches!(
        Flow::new(spec.clone(), FlowConfig { steps: 0, ..Default::default() }),
        Err(FlowError::InvalidSteps)
    ));
    assert!(matches!(
        solve_rde_flow(&spec, FlowConfig::default(), 0.0, 0.0),
        Err(FlowError::DriverMismatch { .. })
    ));
    assert!(matches!(
        FlowSpec::new(vec![Arc::new(ZeroField)], Driver::Smooth(curve())),
        Err(FlowError::DimensionMismatch { .. })
    ));
    let rough = lifted_flow(noncommuting(), &curve(), 3, 2, 4);
    assert!(matches!(rough.solve(0.3, 0.0), Err(FlowError::OffGrid { .. })));
    assert!(matches!(rough.solve(1.5, 0.0), Err(FlowError::TimeOutOfRange { .. })));
}

#[test]
fn field_bound_check() {
    let spec = smooth_spec(noncommuting(), curve());
    assert!(spec.check_field_bound(1.0, -5.0, 5.0, 101).is_ok());
    let spec = smooth_spec(vec![Arc::new(AffineField::linear(1.0))], SmoothPath::linear(vec![1.0], 1.0));
    assert!(matches!(
        spec.check_field_bound(2.0, -5.0, 5.0, 11),
        Err(FlowError::FieldBound { .. })
    ));
}

#[test]
fn trajectory_matches_pointwise_solves() {
    let flow = lifted_flow(noncommuting(), &curve(), 5, 2, 8);
    let times = [0.5, 0.0, 1.0, 0.25];
    let traj = flow.trajectory(0.7, &times).unwrap();
    for (v, &t) in traj.iter().zip(&times) {
        assert_eq!(*v, flow.solve(t, 0.7).unwrap());
    }
    let dir = tempfile_dir();
    let file = dir.join("traj.csv");
    write_trajectory_csv(&traj, &file).unwrap();
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.starts_with("t,phi,dphi,d2phi"));
    assert_eq!(text.lines().count(), 5);
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("flows-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn table_interpolates_flow() {
    let rp: RoughPath = lift_smooth_path_with(&curve(), &dyadic_grid(1.0, 5), 2, 4).unwrap();
    let times = rp.times().to_vec();
    let flow = Flow::new(FlowSpec::new(noncommuting(), Driver::Rough(rp)).unwrap(), FlowConfig::default()).unwrap();
    let table = FlowTable::build(&flow, &times, -4.0, 4.0, 400).unwrap();
    for &t in &[0.0, 0.5, 0.96875] {
        for y in [-3.3, 0.0, 0.123, 2.71] {
            let a = flow.solve(t, y).unwrap();
            let b = table.value(t, y).unwrap();
            assert!((a.phi - b.phi).abs() < 1e-9, "phi at ({t}, {y})");
            assert!((a.dphi - b.dphi).abs() < 1e-6);
            assert!((a.d2phi - b.d2phi).abs() < 1e-3);
        }
    }
    assert_eq!(table.value(1.0, 9.0).unwrap(), FlowValue::identity(1.0, 9.0));
    assert!(matches!(table.value(0.1, 0.0), Err(FlowError::OffGrid { .. })));
    assert!(matches!(table.value(0.5, 5.0), Err(FlowError::OutOfTable { .. })));
    let stats = table.stats();
    assert!(stats.min_dphi > 0.0 && stats.min_dphi <= 1.0 && stats.max_dphi >= 1.0);
    let x = flow.solve(0.5, 1.1).unwrap().phi;
    let y = flow_inverse(&table, 0.5, x, &InverseConfig::default()).unwrap();
    assert!((y - 1.1).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn derivative_stays_positive(seed in 0u64..1000, y in -3.0f64..3.0) {
        let rp = brownian_lift(seed, &dyadic_grid(1.0, 6), 2, 4).unwrap();
        let flow = Flow::new(FlowSpec::new(noncommuting(), Driver::Rough(rp)).unwrap(), FlowConfig::default()).unwrap();
        let v = flow.solve(0.0, y).unwrap();
        prop_assert!(v.dphi > 0.0);
    }

    #[test]
    fn inverse_round_trip(y in -3.0f64..3.0, k in 0usize..16) {
        let flow = lifted_flow(noncommuting(), &curve(), 4, 2, 8);
        let t = k as f64 / 16.0;
        let x = flow.solve(t, y).unwrap().phi;
        let back = flow_inverse(&flow, t, x, &InverseConfig::default()).unwrap();
        prop_assert!((back - y).abs() < 1e-8);
    }
}

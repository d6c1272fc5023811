//! Built-in scenario library; one scenario per acceptance criterion.

use std::f64::consts::PI;

use crate::config::{
    BasisSpec, BsdeScenario, Config, DensitySpec, DiscretizationSpec, DriverSpec, FeynmanKacSpec, FieldSpec,
    ForwardSpec, GeneratorSpec, Oracle, Route, Scenario, Task, TerminalSpec,
};

fn quad(c: f64) -> GeneratorSpec {
    GeneratorSpec::Quad {
        f: DensitySpec::Constant {
            value: c,
            lo: -10.0,
            hi: 10.0,
        },
    }
}

fn disc(n_steps: usize, n_paths: usize, seed: u64) -> DiscretizationSpec {
    DiscretizationSpec {
        n_steps,
        n_paths,
        basis: BasisSpec::Polynomial { degree: 4 },
        seed,
        truncation: 1e6,
    }
}

/// `g = 0.25 z²` (density truncated to `|y| ≤ 10`), `ψ(x) = x`, `X = W`.
pub fn cole_hopf() -> BsdeScenario {
    BsdeScenario {
        driver: DriverSpec::None,
        fields: Vec::new(),
        generator: quad(0.25),
        forward: ForwardSpec::default(),
        terminal: TerminalSpec::Identity,
        horizon: 1.0,
        discretization: disc(50, 10_000, 1),
        route: Route::DossSussmann,
        feynman_kac: None,
    }
}

fn scenario(name: &str, criterion: u32, task: Task, oracles: Vec<Oracle>) -> Scenario {
    Scenario {
        name: name.into(),
        criterion: Some(criterion),
        task,
        oracles,
    }
}

pub fn acceptance() -> Config {
    let route_agreement = BsdeScenario {
        driver: DriverSpec::Linear { velocity: vec![1.0] },
        fields: vec![FieldSpec::Affine { a: 0.0, b: 0.5 }],
        route: Route::Both,
        ..cole_hopf()
    };
    let feynman_kac = BsdeScenario {
        driver: DriverSpec::Sine {
            amplitude: vec![0.5],
            frequency: vec![2.0 * PI],
        },
        fields: vec![FieldSpec::Sine {
            amplitude: 0.3,
            frequency: 1.0,
        }],
        terminal: TerminalSpec::Tanh,
        discretization: disc(25, 10_000, 3),
        feynman_kac: Some(FeynmanKacSpec {
            xs: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            nt: 100,
            nx: 200,
            se_multiplier: 3.0,
            floor: 2e-2,
        }),
        ..cole_hopf()
    };
    let brownian_rough = BsdeScenario {
        driver: DriverSpec::Brownian {
            level: 6,
            subfactor: 16,
            seed: 7,
        },
        fields: vec![FieldSpec::Affine { a: 0.5, b: 0.0 }, FieldSpec::Affine { a: 0.0, b: 0.5 }],
        terminal: TerminalSpec::Tanh,
        discretization: disc(32, 10_000, 4),
        ..cole_hopf()
    };
    Config {
        scenarios: vec![
            scenario(
                "flow_exactness",
                1,
                Task::FlowLinear { steps: 1000 },
                vec![
                    Oracle::at_most("phi_error", 1e-8),
                    Oracle::at_most("dphi_error", 1e-8),
                    Oracle::at_most("runtime_s", 1.0),
                ],
            ),
            scenario(
                "ode_rde_consistency",
                2,
                Task::OdeRde {
                    levels: vec![6, 7, 8, 9, 10],
                    reference_steps: 20_000,
                },
                vec![
                    Oracle::at_most("max_diff", 1e-4),
                    Oracle::at_least("decreasing", 1.0),
                    Oracle::at_most("runtime_s", 10.0),
                ],
            ),
            scenario(
                "zvonkin_structure",
                3,
                Task::ZvonkinStructure { pairs: 100, seed: 5 },
                vec![
                    Oracle::at_most("u1_error", 1e-8),
                    Oracle::at_most("ode_residual", 1e-5),
                    Oracle::at_most("isometry_violations", 0.0),
                ],
            ),
            scenario(
                "cole_hopf",
                4,
                Task::Bsde(cole_hopf()),
                vec![
                    Oracle::near("y0", 0.25, 5e-2),
                    Oracle::near("z0", 1.0, 5e-2),
                    Oracle::at_most("runtime_s", 60.0),
                ],
            ),
            scenario(
                "route_agreement",
                5,
                Task::Bsde(route_agreement),
                vec![Oracle::at_most("route_gap", 1e-2)],
            ),
            scenario(
                "feynman_kac",
                6,
                Task::Bsde(feynman_kac),
                vec![Oracle::at_most("fk_excess", 0.0), Oracle::at_most("runtime_s", 300.0)],
            ),
            scenario(
                "levy_area",
                7,
                Task::LevyArea {
                    samples: 100_000,
                    subfactor: 256,
                    seed: 11,
                },
                vec![
                    Oracle::at_most("area_var_rel_error", 0.05),
                    Oracle::at_most("antisymmetry_defect", 0.0),
                    Oracle::at_most("chen_defect", 1e-12),
                ],
            ),
            scenario(
                "fbm_lift",
                8,
                Task::FbmLift {
                    hurst: 0.35,
                    p: 3.5,
                    level: 6,
                    samples: 10_000,
                    pairs: vec![(0.25, 0.5), (0.5, 1.0), (1.0, 1.0)],
                    seed: 13,
                },
                vec![
                    Oracle::at_least("constructed", 1.0),
                    Oracle::at_most("cov_z_max", 3.0),
                    Oracle::at_least("low_hurst_rejected", 1.0),
                ],
            ),
            scenario(
                "determinism",
                9,
                Task::Determinism {
                    scenario: Box::new(brownian_rough),
                    threads: vec![1, 4],
                },
                vec![Oracle::at_least("identical", 1.0)],
            ),
            scenario(
                "uniqueness",
                10,
                Task::Uniqueness {
                    scenario: Box::new(cole_hopf()),
                    seeds: (1, 2),
                },
                vec![Oracle::at_most("seed_gap_in_se", 3.0)],
            ),
        ],
    }
}

/// Scenarios with closed-form or reference oracles for `study`.
pub fn study() -> Config {
    let linear = BsdeScenario {
        generator: GeneratorSpec::Linear { alpha: 1.0 },
        forward: ForwardSpec::Arithmetic {
            mu: 1.0,
            sigma: 1.0,
            x0: 1.0,
        },
        discretization: disc(4, 1_000, 21),
        ..cole_hopf()
    };
    let zero = BsdeScenario {
        generator: GeneratorSpec::Zero,
        forward: ForwardSpec::Arithmetic {
            mu: 0.0,
            sigma: 1.0,
            x0: 0.5,
        },
        discretization: disc(4, 1_000, 22),
        ..cole_hopf()
    };
    let e2 = 2.0 * std::f64::consts::E;
    Config {
        scenarios: vec![
            Scenario {
                name: "linear_bsde".into(),
                criterion: None,
                task: Task::Bsde(linear),
                oracles: vec![Oracle::near("y0", e2, 1.0)],
            },
            Scenario {
                name: "ode_rde_flow".into(),
                criterion: None,
                task: Task::OdeRde {
                    levels: vec![4, 5, 6],
                    reference_steps: 20_000,
                },
                oracles: vec![Oracle::at_least("decreasing", 1.0)],
            },
            Scenario {
                name: "zero_generator".into(),
                criterion: None,
                task: Task::Bsde(zero),
                oracles: vec![Oracle::near("y0", 0.5, 0.0).with_se(3.0)],
            },
        ],
    }
}

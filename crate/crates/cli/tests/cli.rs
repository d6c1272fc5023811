use std::path::Path;
use std::process::{Command, Output};

use roughbsde_cli::builtin;
use roughbsde_cli::config::{
    BsdeScenario, Config, DiscretizationSpec, DriverSpec, FieldSpec, Oracle, Scenario, Task,
};
use roughbsde_cli::run::write_config;

fn roughbsde(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roughbsde"))
        .args(args)
        .env("ROUGHBSDE_OUT", out)
        .output()
        .expect("binary runs")
}

fn single(name: &str, task: Task, oracles: Vec<Oracle>) -> Config {
    Config {
        scenarios: vec![Scenario {
            name: name.into(),
            criterion: None,
            task,
            oracles,
        }],
    }
}

fn small_cole_hopf() -> BsdeScenario {
    BsdeScenario {
        discretization: DiscretizationSpec {
            n_steps: 20,
            n_paths: 2_000,
            ..builtin::cole_hopf().discretization
        },
        ..builtin::cole_hopf()
    }
}

#[test]
fn empty_scenario_list_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("empty.json");
    std::fs::write(&config, r#"{"scenarios": []}"#).unwrap();
    let out = roughbsde(&["run", config.to_str().unwrap()], &dir.path().join("out"));
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 scenarios, 0 failed"));
}

#[test]
fn cole_hopf_scenario_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("ch.json");
    let cfg = Config {
        scenarios: builtin::acceptance()
            .scenarios
            .into_iter()
            .filter(|s| s.name == "cole_hopf")
            .collect(),
    };
    write_config(&cfg, &config).unwrap();
    // output directory from the environment
    let out_dir = dir.path().join("env_out");
    let out = roughbsde(&["run", config.to_str().unwrap()], &out_dir);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    let y0 = report.lines().find(|l| l.starts_with("cole_hopf,4,y0,")).unwrap();
    let value: f64 = y0.split(',').nth(3).unwrap().parse().unwrap();
    assert!((value - 0.25).abs() <= 5e-2);
    let csv = std::fs::read_to_string(out_dir.join("cole_hopf/solution_doss_sussmann.csv")).unwrap();
    assert!(csv.starts_with("t,mean_Y,se_Y,mean_Z,se_Z\n"));
    assert_eq!(csv.lines().count(), 52);
    let meta = std::fs::read_to_string(out_dir.join("cole_hopf/solution_doss_sussmann.meta")).unwrap();
    assert!(meta.contains("seed=1\n") && meta.contains("n_paths=10000\n") && meta.contains("created_unix="));
}

#[test]
fn low_hurst_driver_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = small_cole_hopf();
    s.driver = DriverSpec::Fbm {
        hurst: 0.2,
        p: 6.0,
        level: 5,
        seed: 1,
    };
    s.fields = vec![FieldSpec::Affine { a: 0.0, b: 0.5 }];
    let mut cfg = single("rough_fbm", Task::Bsde(s), Vec::new());
    cfg.scenarios.insert(0, single("first", Task::Bsde(small_cole_hopf()), Vec::new()).scenarios.remove(0));
    let config = dir.path().join("fbm.json");
    write_config(&cfg, &config).unwrap();
    let out_dir = dir.path().join("out");
    let out = roughbsde(&["run", config.to_str().unwrap()], &out_dir);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("rough_fbm") && err.contains("H > 1/4"), "{err}");
    // nothing ran, not even the valid first scenario
    assert!(!out_dir.join("first").exists());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, "{\n  \"scenarios\": [\n    {\"name\": \"x\", \"task\": \"nonsense\"}\n  ]\n}\n").unwrap();
    let out = roughbsde(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.json:3:"), "{err}");
}

#[test]
fn failing_oracle_sets_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = single(
        "wrong_target",
        Task::Bsde(small_cole_hopf()),
        vec![Oracle::near("y0", 1.0, 1e-3)],
    );
    let config = dir.path().join("c.json");
    write_config(&cfg, &config).unwrap();
    let out = roughbsde(&["run", config.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL y0"));
}

#[test]
fn reruns_are_byte_identical_and_seed_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let mut rough = small_cole_hopf();
    rough.driver = DriverSpec::Brownian {
        level: 5,
        subfactor: 4,
        seed: 3,
    };
    rough.fields = vec![FieldSpec::Affine { a: 0.2, b: 0.0 }, FieldSpec::Affine { a: 0.0, b: 0.3 }];
    rough.discretization.n_steps = 16;
    let cfg = single("rough", Task::Bsde(rough), Vec::new());
    let config = dir.path().join("r.json");
    write_config(&cfg, &config).unwrap();
    let body = |tag: &str, extra: &[&str]| {
        let out = dir.path().join(tag);
        let mut args = vec!["run", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert!(roughbsde(&args, dir.path()).status.success());
        std::fs::read(out.join("rough/solution_doss_sussmann.csv")).unwrap()
    };
    let a = body("a", &[]);
    let b = body("b", &["--threads", "3"]);
    let c = body("c", &["--seed", "77"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    let meta = std::fs::read_to_string(dir.path().join("c/rough/solution_doss_sussmann.meta")).unwrap();
    assert!(meta.contains("seed=77\n"));
}

#[test]
fn study_columns_follow_refinement() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("study.json");
    write_config(&builtin::study(), &config).unwrap();
    let out_dir = dir.path().join("out");
    let out = roughbsde(&["study", config.to_str().unwrap(), "--levels", "3", "--out", out_dir.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let column = |name: &str, col: usize| -> Vec<f64> {
        std::fs::read_to_string(out_dir.join(format!("study_{name}.csv")))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(col).unwrap().parse().unwrap())
            .collect()
    };
    let linear = column("linear_bsde", 6);
    assert_eq!(linear.len(), 3);
    assert!(linear[0] > linear[1] && linear[1] > linear[2], "{linear:?}");
    let flow = column("ode_rde_flow", 6);
    assert!(flow[0] > flow[1] && flow[1] > flow[2], "{flow:?}");
    let (err, se) = (column("zero_generator", 6), column("zero_generator", 5));
    assert!(err.iter().zip(&se).all(|(e, s)| *e <= 3.0 * s), "{err:?} {se:?}");
}

#[test]
fn study_needs_a_reference() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("s.json");
    write_config(&single("plain", Task::Bsde(small_cole_hopf()), Vec::new()), &config).unwrap();
    let out = roughbsde(&["study", config.to_str().unwrap(), "--out", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reference"));
}

#[test]
fn checked_in_configs_match_the_builtins() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (file, cfg) in [("acceptance.json", builtin::acceptance()), ("study.json", builtin::study())] {
        let parsed = roughbsde_cli::config::load(&root.join(file)).unwrap();
        assert_eq!(parsed, cfg, "{file} is stale; regenerate with `roughbsde builtin`");
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equicontrol")).args(args).output().unwrap()
}

fn run_in(out: &Path, cmd: &str, config: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn csv_column(text: &str, col: usize) -> Vec<f64> {
    text.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect()
}

#[test]
fn solve_mean_variance_writes_constant_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &configs().join("mean_variance.toml"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("t,y,beta,control_at_x0,value_at_x0\n"));
    let beta = csv_column(&csv, 2);
    assert_eq!(beta.len(), 513);
    assert!(beta.iter().all(|b| (b - 3.75).abs() < 1e-12));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solution.json")).unwrap())
            .unwrap();
    assert_eq!(json["solver"], "closed_form");
}

#[test]
fn auto_choice_is_recorded_and_manifest_reruns_bytewise() {
    let first = tempfile::tempdir().unwrap();
    let out = run_in(first.path(), "solve", &configs().join("time_varying.toml"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest_path = first.path().join("manifest.toml");
    let manifest: toml::Table =
        toml::from_str(&fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["run"]["solver_used"].as_str(), Some("algebraic"));
    assert_eq!(manifest["run"]["config_sha256"].as_str().unwrap().len(), 64);

    let second = tempfile::tempdir().unwrap();
    let out = run_in(second.path(), "solve", &manifest_path, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let a = fs::read(first.path().join("solution.csv")).unwrap();
    let b = fs::read(second.path().join("solution.csv")).unwrap();
    assert_eq!(a, b);

    let mv = tempfile::tempdir().unwrap();
    run_in(mv.path(), "solve", &configs().join("mean_variance.toml"), &[]);
    let manifest: toml::Table =
        toml::from_str(&fs::read_to_string(mv.path().join("manifest.toml")).unwrap()).unwrap();
    assert_eq!(manifest["run"]["solver_used"].as_str(), Some("closed_form"));
}

#[test]
fn cos_domain_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "solve", &configs().join("cos_out_of_domain.toml"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cos-domain"));
}

#[test]
fn config_errors_exit_with_status_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    assert_eq!(run_in(dir.path(), "solve", &missing, &[]).status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "horizon = 1.0\n[coefficients]\nb = 0.3\n").unwrap();
    assert_eq!(run_in(dir.path(), "solve", &bad, &[]).status.code(), Some(2));

    let negative = dir.path().join("negative.toml");
    let text = fs::read_to_string(configs().join("mean_variance.toml"))
        .unwrap()
        .replace("weights = [2.0]", "weights = [-2.0]");
    fs::write(&negative, text).unwrap();
    assert_eq!(run_in(dir.path(), "solve", &negative, &[]).status.code(), Some(2));

    let out =
        run_in(dir.path(), "solve", &configs().join("mean_variance.toml"), &["--solver", "magic"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_default_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    for config in ["mean_variance.toml", "exp_penalty.toml", "time_varying.toml"] {
        let out = run_in(dir.path(), "verify", &configs().join(config), &[]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(out.status.code(), Some(0), "{config}: {stdout}");
        assert!(stdout.contains("overall: PASS"));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(report["pass"], true);
    }
}

#[test]
fn zero_tolerances_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("strict.toml");
    let mut text = fs::read_to_string(configs().join("mean_variance.toml")).unwrap();
    text.push_str(
        "\n[verification.tolerances]\nintegral_equation = 0.0\nself_consistency = 0.0\nevf = 0.0\n\
         spike_relative = 0.0\nspike_nonpositive = 0.0\nfbsde = 0.0\npde = 0.0\n",
    );
    fs::write(&config, text).unwrap();
    let out = run_in(dir.path(), "verify", &config, &[]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn monte_carlo_seed_changes_only_the_noise() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mc.toml");
    let text = fs::read_to_string(configs().join("mean_variance.toml"))
        .unwrap()
        .replace("mc = false", "mc = true\nspike = false\npde = false\nfbsde = false")
        .replace("num_paths = 1000000", "num_paths = 200000")
        .replace("num_steps = 2048", "num_steps = 256");
    fs::write(&config, text).unwrap();
    let mut estimates = Vec::new();
    for seed in ["1", "2"] {
        let out = run_in(dir.path(), "verify", &config, &["--seed", seed]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let report: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        let mc = report["checks"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == "monte_carlo")
            .unwrap();
        assert_eq!(mc["detail"]["seed"].as_u64().unwrap(), seed.parse::<u64>().unwrap());
        estimates.push(mc["detail"]["moments"][1]["estimate"].as_f64().unwrap());
    }
    assert_ne!(estimates[0], estimates[1]);
}

#[test]
fn sweep_variance_weight_scales_beta() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "sweep",
        &configs().join("mean_variance.toml"),
        &["--param", "kappa_2", "--values", "1,2,4"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep_kappa_2.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout), csv);
    let beta = csv_column(&csv, 1);
    for (got, want) in beta.iter().zip([7.5, 3.75, 1.875]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn sweep_kappa_and_c() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        "sweep",
        &configs().join("mean_variance.toml"),
        &["--param", "kappa", "--values", "0,1"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let beta = csv_column(&String::from_utf8_lossy(&out.stdout), 1);
    assert_eq!(beta[0], 0.0);
    assert!((beta[1] - 3.75).abs() < 1e-12);

    let out = run_in(
        dir.path(),
        "sweep",
        &configs().join("exp_penalty.toml"),
        &["--param", "c", "--values", "0.5,1,2"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let beta = csv_column(&String::from_utf8_lossy(&out.stdout), 1);
    assert!(beta[0] > beta[1] && beta[1] > beta[2], "{beta:?}");

    let out = run_in(
        dir.path(),
        "sweep",
        &configs().join("mean_variance.toml"),
        &["--param", "gamma", "--values", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run_in(
        dir.path(),
        "sweep",
        &configs().join("mean_variance.toml"),
        &["--param", "c", "--values", "1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

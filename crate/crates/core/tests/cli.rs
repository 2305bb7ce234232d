use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use handy::harness::csv_io::{read_trajectory, trajectory_to_string};

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
}

fn handy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_handy"))
        .args(args)
        .output()
        .expect("spawn handy")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn check_lines(path: &Path) -> Vec<Value> {
    report(path)
        .into_iter()
        .filter(|v| v["kind"] == "check")
        .collect()
}

fn simulate_fig1_right(dir: &Path) -> PathBuf {
    let cfg = scenario("fig1-right.toml");
    let out = handy(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(dir),
        "--t-end",
        "300",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("fig1-right.csv")
}

#[test]
fn simulate_writes_csv_summary_and_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_fig1_right(dir.path());
    let header = std::fs::read_to_string(&csv)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, handy::harness::COLUMNS.join(","));

    let summary: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("fig1-right.summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["samples"], 3001);
    assert_eq!(summary["clamp_count"], 0);
    assert_eq!(summary["scenario"]["integration"]["t_end"], 300.0);
    assert_eq!(
        summary["scenario"]["integration"]["collapse_threshold"],
        1e-3
    );
    assert!(summary["scenario"]["check_settings"]["region"]["b4"].is_number());

    // the echoed config reproduces the run
    let again = tempfile::tempdir().unwrap();
    let resolved = dir.path().join("fig1-right.resolved.toml");
    let out = handy(&[
        "simulate",
        "--config",
        s(&resolved),
        "--out",
        s(again.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        std::fs::read(&csv).unwrap(),
        std::fs::read(again.path().join("fig1-right.csv")).unwrap()
    );
}

#[test]
fn check_from_csv_matches_in_memory_checks() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_fig1_right(dir.path());
    let from_csv = dir.path().join("csv");
    let out = handy(&["check", "--trajectory", s(&csv), "--out", s(&from_csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    let resolved = dir.path().join("fig1-right.resolved.toml");
    let in_memory = dir.path().join("mem");
    let out = handy(&["check", "--config", s(&resolved), "--out", s(&in_memory)]);
    assert_eq!(code(&out), 0);

    let a = check_lines(&from_csv.join("fig1-right.report.jsonl"));
    let b = check_lines(&in_memory.join("fig1-right.report.jsonl"));
    assert_eq!(a.len(), 7);
    assert_eq!(a, b);
    assert!(a.iter().all(|l| l["passed"] == true));
}

#[test]
fn tampered_ratio_fails_lyapunov_check() {
    let dir = tempfile::tempdir().unwrap();
    let csv = simulate_fig1_right(dir.path());
    let mut traj = read_trajectory(std::fs::File::open(&csv).unwrap(), 1e-300).unwrap();
    let v = traj.samples[100].v_ratio.unwrap();
    traj.samples[100].v_ratio = Some(v * 1.01);
    let tampered = dir.path().join("tampered.csv");
    std::fs::write(&tampered, trajectory_to_string(&traj).unwrap()).unwrap();

    let cfg = scenario("fig1-right.toml");
    let out = handy(&[
        "check",
        "--trajectory",
        s(&tampered),
        "--config",
        s(&cfg),
        "--checks",
        "lyapunov_ratio,rate_ordering",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
    let lines = check_lines(&dir.path().join("fig1-right.report.jsonl"));
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["name"], "lyapunov_ratio");
    assert_eq!(lines[0]["passed"], false);
    assert_eq!(lines[0]["witness_t"], 10.0);
    assert_eq!(lines[1]["passed"], true);
}

#[test]
fn zero_elites_is_a_precondition_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("fig1-left.toml");
    let out = handy(&[
        "check",
        "--config",
        s(&cfg),
        "--t-end",
        "100",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    let lines = check_lines(&dir.path().join("fig1-left.report.jsonl"));
    let errored: Vec<&str> = lines
        .iter()
        .filter(|l| {
            l["error"]
                .as_str()
                .is_some_and(|e| e.contains("population is zero"))
        })
        .map(|l| l["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        errored,
        ["rate_ordering", "rate_gap", "lyapunov_ratio", "contraction"]
    );
}

#[test]
fn missing_columns_and_empty_files_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("fig1-right.toml");
    let short = dir.path().join("short.csv");
    std::fs::write(&short, "t,b_env,b_stor,c,e\n0,1,1,1,1\n").unwrap();
    let out = handy(&[
        "check",
        "--trajectory",
        s(&short),
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing"));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, handy::harness::COLUMNS.join(",") + "\n").unwrap();
    let out = handy(&[
        "check",
        "--trajectory",
        s(&empty),
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_config_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("fig1-right.toml");
    let out = handy(&[
        "simulate",
        "--config",
        s(&cfg),
        "--set",
        "params.kappa=0.5",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    let out = handy(&["simulate", "--config", s(&dir.path().join("nope.toml"))]);
    assert_eq!(code(&out), 2);
    let out = handy(&["simulate", "--config", s(&cfg), "--set", "params.kappa"]);
    assert_eq!(code(&out), 2);

    let out = handy(&[
        "simulate",
        "--config",
        s(&cfg),
        "--set",
        "params.kappa=2.0",
        "--set",
        "params.rho=250.0",
        "--t-end",
        "10",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let resolved: toml::Table =
        std::fs::read_to_string(dir.path().join("fig1-right.resolved.toml"))
            .unwrap()
            .parse()
            .unwrap();
    assert_eq!(resolved["params"]["kappa"].as_float(), Some(2.0));
    assert_eq!(resolved["params"]["rho_inv"].as_float(), Some(1.0 / 250.0));
}

#[test]
fn equilibrium_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("mobility.toml");
    let out = handy(&[
        "equilibrium",
        "--config",
        s(&cfg),
        "--set",
        "params.mu=0.0",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 2);

    // with the small distribution rate an interior equilibrium exists
    let out = handy(&[
        "equilibrium",
        "--config",
        s(&cfg),
        "--set",
        "params.rho=0.005",
        "--probe-t-end",
        "10",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("mobility.equilibrium.json")).unwrap(),
    )
    .unwrap();
    let eq = &report["result"]["numerical"];
    assert!((eq["b_env"].as_f64().unwrap() - 26.1295).abs() < 1e-3);
    assert!(report["result"]["residual_numerical"].as_f64().unwrap() < 1e-10);
    assert!(report["result"]["closed_form"].is_object());
    assert!(report["stability"].is_object());

    // the shipped parameters only have the Elite-free boundary state
    let out = handy(&["equilibrium", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(code(&out), 3);
}

#[test]
fn sweeps_keep_input_order() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(
        scenario("fig1-right.toml"),
        dir.path().join("fig1-right.toml"),
    )
    .unwrap();
    let spec = dir.path().join("k.toml");
    std::fs::write(
        &spec,
        "template = \"fig1-right.toml\"\n[integration]\nt_end = 50.0\n[sweep]\naxis = \"params.kappa\"\nvalues = [3.0, 1.1, 2.0]\n",
    )
    .unwrap();
    let out = handy(&["sweep", "--config", s(&spec), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("k.sweep.csv")).unwrap();
    let values: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(values, ["3.0", "1.1", "2.0"]);
    let json: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("k.sweep.json")).unwrap())
            .unwrap();
    assert_eq!(json["template"]["integration"]["t_end"], 50.0);

    std::fs::write(
        &spec,
        "template = \"fig1-right.toml\"\n[sweep]\naxis = \"params.kappa\"\nvalues = []\n",
    )
    .unwrap();
    let out = handy(&["sweep", "--config", s(&spec), "--out", s(dir.path())]);
    assert_eq!(code(&out), 0);
    let csv = std::fs::read_to_string(dir.path().join("k.sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn figure_data_writes_every_scenario_csv() {
    let dir = tempfile::tempdir().unwrap();
    let spec = scenario("figures.toml");
    let out = handy(&[
        "figure-data",
        "--config",
        s(&spec),
        "--t-end",
        "20",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "fig1-left.csv",
        "fig1-right.csv",
        "mobility.csv",
        "figures.toml",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

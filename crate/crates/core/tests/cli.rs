use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spikeloop::output::parse_csv;
use spikeloop::scenario::{execute, preset, preset_toml};

fn spikeloop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spikeloop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn out_dir(dir: &Path) -> &str {
    dir.to_str().unwrap()
}

#[test]
fn gain_of_scalar_pair_prints_two() {
    let o = spikeloop(&["gain", "--f", "[[-1]]", "--g", "[[1]]"]);
    assert!(o.status.success());
    assert!(
        stdout(&o).lines().next().unwrap() == "gamma 2",
        "{}",
        stdout(&o)
    );
    let o = spikeloop(&["gain", "--f", "-2", "--g", "1"]);
    assert!(stdout(&o).starts_with("gamma 2\n"));
}

#[test]
fn simulate_is_byte_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = spikeloop(&[
            "simulate",
            "--preset",
            "scalar-demo",
            "--out-dir",
            out_dir(d.path()),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trajectory.csv", "spikes.csv"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn trajectory_round_trips_at_nine_digits() {
    let dir = tempfile::tempdir().unwrap();
    let o = spikeloop(&[
        "certify",
        "--preset",
        "scalar-demo",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success());
    let (header, rows) =
        parse_csv(&fs::read_to_string(dir.path().join("trajectory.csv")).unwrap()).unwrap();
    assert_eq!(header, ["t", "x1", "xbar1", "xtilde_norm"]);
    let run = execute(&preset("scalar-demo").unwrap()).unwrap();
    assert_eq!(rows.len(), run.sim.times.len());
    let close = |a: f64, b: f64| (a - b).abs() <= 5e-9 * b.abs().max(1e-300);
    for (row, k) in rows.iter().zip(0..) {
        assert!(close(row[0], run.sim.times[k]) || run.sim.times[k] == 0.0);
        assert!(close(row[1], run.sim.states[k][0]) || run.sim.states[k][0] == row[1]);
        assert!(close(row[2], run.sim.reference[k][0]));
    }
    let (_, spikes) =
        parse_csv(&fs::read_to_string(dir.path().join("spikes.csv")).unwrap()).unwrap();
    assert_eq!(spikes.len(), run.sim.spikes.len());
    for (row, s) in spikes.iter().zip(&run.sim.spikes) {
        assert!(close(row[0], s.time));
        assert_eq!(row[1] as usize, s.neuron_id);
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn rest_preset_writes_empty_spikes_and_zero_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = spikeloop(&[
        "simulate",
        "--preset",
        "batch-reactor-rest",
        "--t-end",
        "0.5",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success());
    let spikes = fs::read_to_string(dir.path().join("spikes.csv")).unwrap();
    assert_eq!(spikes, "t,neuron_id,channel,signed_amplitude\n");
    let (_, rows) =
        parse_csv(&fs::read_to_string(dir.path().join("trajectory.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r[1..].iter().all(|&v| v == 0.0)));
}

#[test]
fn validation_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = preset_toml("scalar-demo")
        .unwrap()
        .replace("A = [[1.0]]\n", "");
    fs::write(&path, text).unwrap();
    let o = spikeloop(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("plant.A"));

    let typo = preset_toml("scalar-demo")
        .unwrap()
        .replace("alpha2 = 0.1", "alpha2 = 0.1\nalpah = 3");
    fs::write(&path, typo).unwrap();
    let o = spikeloop(&[
        "simulate",
        "--strict",
        "--scenario",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = spikeloop(&[
        "simulate",
        "--scenario",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("controller.alpah"));

    let o = spikeloop(&["simulate", "--preset", "scalar-demo", "--step", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zeno_guard_exits_three() {
    // a wide merge window drags the resting row-0 neuron into the first
    // firing of its primed row-1 twin, long before it could charge to Δ
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeno.toml");
    let text = r#"schema_version = 1

[plant]
A = [[-1.0]]
B = [[1.0, -1.0]]
C = [[1.0]]

[controller]
kind = "mimo_rowgain"
K = [[1.0], [1.0]]
alpha1 = [0.003, 0.003]
alpha2 = [0.003, 0.003]
xi0 = [0.0, 0.0, 0.00299, 0.0]

[reference]
x0 = [1.0]

[sim]
t_end = 0.1
base_step = 0.01
merge_window = 0.0099
"#;
    fs::write(&path, text).unwrap();
    let o = spikeloop(&[
        "simulate",
        "--scenario",
        path.to_str().unwrap(),
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(String::from_utf8_lossy(&o.stderr).contains("Zeno"));
}

#[test]
fn pwa_approx_reports_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = spikeloop(&[
        "pwa-approx",
        "--preset",
        "pwa-abs",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pass true"));
    let o = spikeloop(&[
        "pwa-approx",
        "--preset",
        "scalar-demo",
        "--out-dir",
        out_dir(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

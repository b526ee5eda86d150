//! End-to-end tests of the `pedl` binary: exit codes, stdout contracts,
//! and file artifacts.

use std::path::Path;
use std::process::{Command, Output};

fn pedl<I, S>(args: I, cwd: &Path) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_pedl"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("failed to launch pedl")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

#[test]
fn gen_entropy_round_trip_in_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let gen = pedl(
        [
            "dist",
            "gen",
            "--kind",
            r#"{"kind": "spiked-uniform", "n": 10, "spike": 0.25, "point": 3}"#,
            "--out",
            "spiked.json",
        ],
        dir.path(),
    );
    assert_eq!(gen.status.code(), Some(0));

    // Same distribution, binary container.
    let gen_bin = pedl(
        [
            "dist",
            "gen",
            "--kind",
            r#"{"kind": "spiked-uniform", "n": 10, "spike": 0.25, "point": 3}"#,
            "--out",
            "spiked.bin",
        ],
        dir.path(),
    );
    assert_eq!(gen_bin.status.code(), Some(0));
    let dist = pedl(
        ["dist", "distance", "--a", "spiked.json", "--b", "spiked.bin"],
        dir.path(),
    );
    assert_eq!(dist.status.code(), Some(0));
    let v = stdout_json(&dist);
    assert_eq!(v["statistical_distance"], 0.0);

    let entropy = pedl(
        ["dist", "entropy", "--input", "spiked.json", "--delta", "0.125"],
        dir.path(),
    );
    assert_eq!(entropy.status.code(), Some(0));
    let v = stdout_json(&entropy);
    assert_eq!(v["min_entropy"], 2.0);
    // Removing delta = 1/8 of the mass can't erase the 1/4 spike entirely.
    assert!(v["smooth_min_entropy"].as_f64().unwrap() < 10.0);
    assert!(v["witness_distance"].as_f64().unwrap() <= 0.125 + 1e-12);

    let csv = pedl(
        ["--format", "csv", "dist", "entropy", "--input", "spiked.json"],
        dir.path(),
    );
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("delta,input,"));
    assert_eq!(lines.count(), 1);
}

#[test]
fn attack_run_meets_thresholds_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"scenario": "pushforward", "n": 16, "k": 8, "trials": 40}"#,
    )
    .unwrap();
    let out = pedl(
        ["attack", "run", "--config", "run.json", "--out-dir", "arts"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["thresholds_met"], true);
    assert_eq!(v["successes"], 40);
    assert!(v["wilson_lower"].as_f64().unwrap() >= 1.0 / 17.0);

    let report = std::fs::read_to_string(dir.path().join("arts/report.json")).unwrap();
    let file_v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(file_v, v);
    let csv = std::fs::read_to_string(dir.path().join("arts/trials.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    assert!(csv.starts_with("trial,seed,advantage,bound,success,guaranteed"));
}

#[test]
fn identical_scenario_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"scenario": "identical", "n": 10, "k": 5, "trials": 30, "t": 4}"#,
    )
    .unwrap();
    let out = pedl(["attack", "run", "--config", "run.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["successes"], 0);
    assert_eq!(v["guaranteed"], false);
}

#[test]
fn config_and_usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"scenario": "pushforward", "n": 30}"#,
    )
    .unwrap();
    let out = pedl(["attack", "run", "--config", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid configuration"), "{err}");
    assert!(err.contains("missing field `k`"), "{err}");

    let missing = pedl(["attack", "run", "--config", "nope.json"], dir.path());
    assert_eq!(missing.status.code(), Some(2));

    let usage = pedl(["attack", "run", "--no-such-flag"], dir.path());
    assert_eq!(usage.status.code(), Some(2));

    let bad_kind = pedl(
        ["dist", "gen", "--kind", r#"{"kind": "wat"}"#, "--out", "x.json"],
        dir.path(),
    );
    assert_eq!(bad_kind.status.code(), Some(2));
}

#[test]
fn sweep_writes_rows_for_every_target() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"scenario": "pushforward", "n": 16, "k": 8, "trials": 30}"#,
    )
    .unwrap();
    let out = pedl(
        [
            "attack",
            "sweep",
            "--config",
            "run.json",
            "--log2-eps-min",
            "-8",
            "--log2-eps-max",
            "-4",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["feasible_rows"], 3);
    assert_eq!(v["all_feasible_pass"], true);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert_eq!(csv.matches("skipped").count(), 2);
}

#[test]
fn moments_check_passes_exhaustively() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedl(
        [
            "moments",
            "check",
            "--spec",
            r#"{"weights": [1, 1, 1, 1], "independence": {"mode": "exhaustive-small-field", "field_bits": 4}}"#,
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["moments"]["m2"], 4.0);
    assert_eq!(v["tail"]["exact"], true);
}

#[test]
fn ballsbins_reports_the_offset_mismatch_honestly() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedl(
        ["ballsbins", "run", "--k", "8", "--k-prime", "10", "--trials", "200"],
        dir.path(),
    );
    // The measured offset tracks 2^(-k/2) but sits well below the predicted
    // constant, so the 20% gate fails by design.
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["pass"], false);
    assert!(v["offset_gap"].as_f64().unwrap() > 0.0);
    assert!(v["coarse"]["offset_relative_error"].as_f64().unwrap() > 0.2);
}

#[test]
fn worst_case_rebuilds_from_the_trial_seed() {
    let dir = tempfile::tempdir().unwrap();
    // X carries a heavy spike, so no Y with min-entropy >= 2 can imitate it.
    let gen_x = pedl(
        [
            "dist",
            "gen",
            "--kind",
            r#"{"kind": "spiked-uniform", "n": 6, "spike": 0.875, "point": 0}"#,
            "--out",
            "x.json",
        ],
        dir.path(),
    );
    assert_eq!(gen_x.status.code(), Some(0));
    let gen_y = pedl(
        ["dist", "gen", "--kind", r#"{"kind": "uniform", "n": 6}"#, "--out", "y.json"],
        dir.path(),
    );
    assert_eq!(gen_y.status.code(), Some(0));
    let out = pedl(
        [
            "attack",
            "worst-case",
            "--x",
            "x.json",
            "--y",
            "y.json",
            "--k",
            "2",
            "--t",
            "4",
            "--trial-seed",
            "11",
            "--witness-out",
            "w.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let worst = v["worst_case_advantage"].as_f64().unwrap();
    let observed = v["observed_advantage"].as_f64().unwrap();
    assert!(worst <= observed + 1e-12);
    assert!(v["witness_min_entropy"].as_f64().unwrap() >= 2.0 - 1e-9);
    assert!(dir.path().join("w.json").is_file());
}

//! End-to-end checks of the `cfb` binary: run, audit and report.

use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"{
    "name": "cli",
    "problem": {"generated": {"generator": "random-tabular", "contexts": 5, "actions": 3, "members": 10, "instance_seed": 1}},
    "agent": {"kind": "uccb", "memoize": true},
    "horizon": 3000,
    "replications": 3,
    "seed_base": 40
}"#;

fn cfb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfb"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config-in.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_audit_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let out = dir.path().join("run");
    let out_s = out.to_string_lossy().into_owned();
    let o = cfb(&[
        "run",
        "--config",
        &config,
        "--out",
        &out_s,
        "--parallel",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut traces: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("trace_seed"))
        .collect();
    traces.sort();
    assert_eq!(
        traces,
        [
            "trace_seed40.jsonl",
            "trace_seed41.jsonl",
            "trace_seed42.jsonl"
        ]
    );

    let trace = out.join("trace_seed41.jsonl");
    let o = cfb(&[
        "audit",
        "--trace",
        &trace.to_string_lossy(),
        "--checks",
        "lemma2,replay",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["replay"]["checked"], 2997);

    let csv_path = dir.path().join("curve.csv");
    let o = cfb(&[
        "report",
        "--runs",
        &out_s,
        "--out",
        &csv_path.to_string_lossy(),
    ]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(&csv_path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        [
            "t",
            "n",
            "mean_pseudo",
            "q10_pseudo",
            "q90_pseudo",
            "mean_pathwise",
            "q10_pathwise",
            "q90_pathwise",
            "bound"
        ]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3000);
    let last = &rows[2999];
    let bound: f64 = last[8].parse().unwrap();
    assert!((bound - 34041.34066294273).abs() <= 1e-9 * bound);
    for row in &rows {
        let q10: f64 = row[3].parse().unwrap();
        let q90: f64 = row[4].parse().unwrap();
        assert!(q10 <= q90);
    }
}

#[test]
fn summary_header_and_single_seed_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &CONFIG.replace("\"horizon\": 3000", "\"horizon\": 200"),
    );
    let out = dir.path().join("run");
    let out_s = out.to_string_lossy().into_owned();
    assert!(
        cfb(&["run", "--config", &config, "--out", &out_s, "--seeds", "1"])
            .status
            .success()
    );
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("seed,t,cum_pathwise_regret,cum_pseudo_regret\n"));
    assert_eq!(summary.lines().count(), 201);

    let curve = cfbandit::harness::aggregate(&out).unwrap();
    let rows = cfbandit::trace::read_summary(&out.join("summary.csv")).unwrap();
    for (c, r) in curve.iter().zip(&rows) {
        assert_eq!(c.mean_pseudo, r.cum_pseudo_regret);
        assert_eq!(c.mean_pathwise, r.cum_pathwise_regret);
    }
}

#[test]
fn tampered_trace_fails_replay_at_that_round() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &CONFIG.replace("\"horizon\": 3000", "\"horizon\": 400"),
    );
    let out = dir.path().join("run");
    assert!(
        cfb(&["run", "--config", &config, "--out", &out.to_string_lossy()])
            .status
            .success()
    );
    let trace = out.join("trace_seed40.jsonl");
    let mut lines: Vec<String> = std::fs::read_to_string(&trace)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let mut rec: serde_json::Value = serde_json::from_str(&lines[199]).unwrap();
    let a = rec["a"].as_u64().unwrap();
    rec["a"] = ((a + 1) % 3).into();
    lines[199] = rec.to_string();
    std::fs::write(&trace, lines.join("\n") + "\n").unwrap();

    let o = cfb(&[
        "audit",
        "--trace",
        &trace.to_string_lossy(),
        "--checks",
        "replay",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["replay"]["mismatches"][0], 200);
}

#[test]
fn malformed_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        &CONFIG.replace("\"replications\": 3", "\"replications\": 0"),
    );
    let o = cfb(&[
        "run",
        "--config",
        &config,
        "--out",
        &dir.path().join("x").to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`replications`"));

    let config = write_config(
        dir.path(),
        &CONFIG.replace("\"kind\": \"uccb\"", "\"kind\": \"ucb\""),
    );
    let o = cfb(&[
        "run",
        "--config",
        &config,
        "--out",
        &dir.path().join("x").to_string_lossy(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`agent"));

    let run = dir.path().join("run");
    std::fs::create_dir_all(&run).unwrap();
    std::fs::write(run.join("config.json"), CONFIG).unwrap();
    let trace = run.join("trace_seed0.jsonl");
    std::fs::write(
        &trace,
        "{\"t\":1,\"x\":0,\"a\":0,\"r\":1.0,\"fhat\":0,\"beta\":1.0}\n{\"t\":2,\"x\":0\n",
    )
    .unwrap();
    let o = cfb(&["audit", "--trace", &trace.to_string_lossy()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let o = cfb(&[
        "audit",
        "--trace",
        &trace.to_string_lossy(),
        "--checks",
        "bogus",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

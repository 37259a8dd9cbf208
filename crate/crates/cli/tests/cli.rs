use std::path::Path;
use std::process::{Command, Output};

fn ssk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssk-edge"))
        .args(args)
        .env_remove("SSK_EDGE_THREADS")
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn residue_method_on_two_point_spectrum() {
    let out = ssk(&[
        "free-energy",
        "--alpha",
        "1",
        "--n",
        "2",
        "--spectrum",
        "1,-1",
        "--beta",
        "1",
        "--method",
        "residue",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    let got = v["result"]["log_i_over_c"].as_f64().unwrap();
    assert!((got - 2f64.sinh().ln()).abs() < 1e-12, "{got}");
}

#[test]
fn contour_methods_agree_with_residue() {
    let run = |m: &str| {
        let out = ssk(&[
            "free-energy",
            "--alpha",
            "1",
            "--spectrum",
            "-0.9,-0.2,0.4,1.3",
            "--b",
            "-0.5",
            "--method",
            m,
        ]);
        assert!(
            out.status.success(),
            "{m}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        json(&out)["result"]["log_i"].as_f64().unwrap()
    };
    let exact = run("residue");
    for m in ["vertical", "keyhole"] {
        let got = run(m);
        assert!(
            (got - exact).abs() <= 1e-6 * exact.abs().max(1.0),
            "{m}: {got} vs {exact}"
        );
    }
}

#[test]
fn sample_is_reproducible() {
    let a = ssk(&["sample", "--alpha", "2", "--n", "4", "--seed", "7"]);
    let b = ssk(&["sample", "--alpha", "2", "--n", "4", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["diag"].as_array().unwrap().len(), 4);
    assert_eq!(v["offdiag"].as_array().unwrap().len(), 3);
    let c = ssk(&["sample", "--alpha", "2", "--n", "4", "--seed", "8"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sample_eigenvalues_are_sorted_descending() {
    let out = ssk(&["sample", "--alpha", "1", "--n", "50", "--eigenvalues"]);
    let ev: Vec<f64> = json(&out)["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert_eq!(ev.len(), 50);
    assert!(ev.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn bad_input_exits_one() {
    let missing = ssk(&["experiment", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(missing.stdout.is_empty());

    let unknown = ssk(&["sample", "--alpha", "2", "--n", "4", "--colour"]);
    assert_eq!(unknown.status.code(), Some(1));

    let alpha = ssk(&["sample", "--alpha", "3", "--n", "4"]);
    assert_eq!(alpha.status.code(), Some(1));

    let both = ssk(&[
        "free-energy",
        "--alpha",
        "1",
        "--n",
        "4",
        "--b",
        "0",
        "--beta",
        "1",
    ]);
    assert_eq!(both.status.code(), Some(1));
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.json",
        "{\n  \"suite\": \"clt2\",\n  \"m_replicas\": ,\n}\n",
    );
    let out = ssk(&["experiment", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn experiment_then_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "stick.json",
        r#"{"suite":"stickiness","ensemble":{"alpha":2,"n":150},"m_replicas":6,"master_seed":4,
            "params":{"spike_values":[0.0]}}"#,
    );
    let records = dir.path().join("r.jsonl");
    let rec = records.to_str().unwrap();
    let out = ssk(&[
        "--threads",
        "2",
        "experiment",
        "--config",
        &cfg,
        "--out",
        rec,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = json(&out);
    assert_eq!(summary["suite"], "stickiness");
    assert_eq!(
        std::fs::read_to_string(&records).unwrap().lines().count(),
        6
    );

    let again = ssk(&["report", rec]);
    assert!(
        again.status.success(),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    assert_eq!(json(&again), summary);
}

#[test]
fn failing_suite_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // A KS threshold of zero cannot be met.
    let cfg = write(
        dir.path(),
        "t.json",
        r#"{"suite":"clt2","ensemble":{"alpha":2,"n":200},"m_replicas":20,"master_seed":1,
            "thresholds":{"ks":0.0}}"#,
    );
    let out = ssk(&["experiment", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn tw_table_rejects_small_sizes() {
    let out = ssk(&["tw-table", "--alpha", "2", "--n", "300", "--samples", "200"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

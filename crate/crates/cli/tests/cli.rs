use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qib_core::qstate::{kraus_to_choi, validate_cptp, KrausChannel};

const SMALL: &str = r#"{"population": 16, "survivors": 4, "iterations": 60, "restarts": 1, "stall_generations": 30}"#;

fn qib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qib"))
        .args(args)
        .env_remove("QIB_SEED")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.json");
    std::fs::write(&path, SMALL).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn rate_curve_writes_csv_witnesses_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("run");
    let o = qib(&[
        "rate-curve", "--preset", "classical", "--params", "0.1,0.2,0.3,0.4", "--grid", "0.2:0.8:4",
        "--config", s(&cfg), "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("curve.csv"));
    assert_eq!(rows[0].join(","), "J,rate,I_xty_nats,I_xpxt_nats,feasible,evals,channel_file");
    assert_eq!(rows.len(), 5);
    let mut last = 0.0;
    for row in &rows[1..] {
        assert_eq!(row[4], "true");
        let rate: f64 = row[1].parse().unwrap();
        assert!(rate >= last);
        last = rate;
        // Every referenced witness reloads as a valid channel.
        let text = std::fs::read_to_string(out.join(&row[6])).unwrap();
        let ch = KrausChannel::from_json(&text).unwrap();
        assert!(validate_cptp(&kraus_to_choi(&ch), 1e-9).pass());
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "rate-curve");
    assert_eq!(manifest["config"]["population"], 16);
    assert_eq!(manifest["input_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 5);
}

#[test]
fn manifest_argv_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let first = dir.path().join("a");
    let o = qib(&["rate-curve", "--preset", "vw_mix", "--params", "0.4,0.6", "--grid", "0.3:0.7:3", "--seed", "4",
        "--config", s(&cfg), "--out", s(&first)]);
    assert!(o.status.success());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(first.join("manifest.json")).unwrap()).unwrap();
    let mut argv: Vec<String> = manifest["argv"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    let second = dir.path().join("b");
    let at = argv.iter().position(|a| a == "--out").unwrap();
    argv[at + 1] = s(&second).to_string();
    let args: Vec<&str> = argv[1..].iter().map(String::as_str).collect();
    assert!(qib(&args).status.success());
    assert_eq!(std::fs::read(first.join("curve.csv")).unwrap(), std::fs::read(second.join("curve.csv")).unwrap());
}

#[test]
fn svg_does_not_change_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("plain"), dir.path().join("plot"));
    let base = ["rate-curve", "--preset", "bell_mix", "--grid", "0.25:0.75:3", "--config", s(&cfg)];
    assert!(qib(&[&base[..], &["--out", s(&a)]].concat()).status.success());
    assert!(qib(&[&base[..], &["--out", s(&b), "--svg"]].concat()).status.success());
    assert_eq!(std::fs::read(a.join("curve.csv")).unwrap(), std::fs::read(b.join("curve.csv")).unwrap());
    let svg = std::fs::read_to_string(b.join("curve.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 800 600""#));
    assert!(svg.contains(r#"stroke="red""#));
    assert_eq!(svg.matches(r#"stroke="blue""#).count(), 2);
    assert!(!a.join("curve.svg").exists());
}

#[test]
fn seed_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |out: &Path, seed_flag: Option<&str>, env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_qib"));
        c.args(["rate-curve", "--preset", "bell_mix", "--grid", "0.5:0.5:1", "--config", s(&cfg), "--out", s(out)]);
        if let Some(f) = seed_flag {
            c.args(["--seed", f]);
        }
        match env {
            Some(v) => c.env("QIB_SEED", v),
            None => c.env_remove("QIB_SEED"),
        };
        assert!(c.output().unwrap().status.success());
        std::fs::read(out.join("curve.csv")).unwrap()
    };
    let from_env = run(&dir.path().join("e"), None, Some("5"));
    let from_flag = run(&dir.path().join("f"), Some("5"), None);
    let both = run(&dir.path().join("b"), Some("5"), Some("6"));
    assert_eq!(from_env, from_flag);
    assert_eq!(both, from_flag);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("e/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
}

#[test]
fn fixed_point_optimizer_gives_a_feasible_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fp");
    let o = qib(&[
        "rate-curve", "--preset", "classical", "--params", "0.1,0.2,0.3,0.4", "--grid", "0.1:0.9:5",
        "--optimizer", "fixed-point", "--beta-grid", "100:1000:8", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("curve.csv"));
    assert!(rows[1..].iter().all(|r| r[4] == "true"));
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["optimizer"], "fixed-point");
    assert_eq!(manifest["config"]["beta_grid"].as_array().unwrap().len(), 8);
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["rate-curve", "--preset", "classical", "--params", "0.1,0.2,0.3,0.4", "--grid", "0.5:0.1:3"],
        &["rate-curve", "--preset", "classical", "--params", "0.5,0.5"],
        &["rate-curve", "--preset", "ghz"],
        &["rate-curve"],
        &["rate-curve", "--preset", "bell_mix", "--threads", "0"],
        &["classical", "--preset", "bell_mix"],
        &["no-such-command"],
    ];
    for args in cases {
        let o = qib(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn degenerate_inputs_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = qib(&["rate-curve", "--preset", "classical", "--params", "0.25,0.25,0.25,0.25", "--out", s(&dir.path().join("q"))]);
    assert_eq!(o.status.code(), Some(3));
    let table = dir.path().join("uniform.json");
    std::fs::write(&table, r#"{"px_y": [[0.125, 0.125], [0.125, 0.125], [0.25, 0.25]]}"#).unwrap();
    let o = qib(&["classical", "--state", s(&table), "--out", s(&dir.path().join("c"))]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn unreachable_target_exits_4_with_marked_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    std::fs::write(&cfg, r#"{"population": 2, "survivors": 1, "iterations": 1, "restarts": 1}"#).unwrap();
    let out = dir.path().join("x");
    let o = qib(&["rate-curve", "--preset", "bell_mix", "--grid", "0.9999:0.9999:1", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("curve.csv"));
    // Two initial members plus one child.
    assert_eq!(rows[1], vec!["0.9999", "", "", "", "false", "3", ""]);
}

#[test]
fn classical_curve_embeds_channels_and_traces_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c");
    let o = qib(&[
        "classical", "--preset", "classical", "--params", "0.1,0.2,0.3,0.4", "--grid", "0.1:0.9:5",
        "--beta-grid", "1:4096:13", "--sweep", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("classical.csv"));
    assert_eq!(rows[0].join(","), "J,rate,I_xty_nats,I_xxt_nats,feasible,evals,channel_json");
    for row in &rows[1..] {
        let m: Vec<Vec<f64>> = serde_json::from_str(&row[6]).unwrap();
        for x in 0..2 {
            let col: f64 = m.iter().map(|r| r[x]).sum();
            assert!((col - 1.0).abs() < 1e-9);
        }
    }
    let sweep = read_csv(&out.join("sweep.csv"));
    assert_eq!(sweep[0].join(","), "beta,restart,I_xxt_nats,I_xty_nats,iterations,residual");
    assert_eq!(sweep.len(), 1 + 13 * 5);
    assert!(String::from_utf8_lossy(&o.stdout).contains("beta sweep"));
}

#[test]
fn classical_accepts_joint_tables() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.json");
    std::fs::write(&table, r#"{"px_y": [[0.3, 0.05], [0.1, 0.55]]}"#).unwrap();
    let out = dir.path().join("o");
    let o = qib(&["classical", "--state", s(&table), "--grid", "0.5:1:2", "--normalization", "raw", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("classical.csv"));
    // The full-relevance point costs H(X) nats with the copy channel.
    let h = -(0.35f64 * 0.35f64.ln() + 0.65 * 0.65f64.ln());
    let rate: f64 = rows[2][1].parse().unwrap();
    assert!((rate - h).abs() < 1e-6, "{rate} vs {h}");
}

#[test]
fn verify_passes_and_is_deterministic() {
    let a = qib(&["verify", "--seed", "7"]);
    let b = qib(&["verify", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7);
}

#[test]
fn verify_fails_below_the_finite_difference_floor() {
    let o = qib(&["verify", "--grad-tol", "1e-12"]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("FAIL") && l.contains("gradient")));
}

#[test]
fn channel_info_reports() {
    let dir = tempfile::tempdir().unwrap();
    let id = dir.path().join("id.json");
    std::fs::write(&id, KrausChannel::identity(2).to_json()).unwrap();
    let o = qib(&["channel-info", s(&id)]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("CPTP: pass"));
    assert!(text.contains("Choi eigenvalues: 2.000000, 0.000000, 0.000000, 0.000000"));

    let deph = dir.path().join("deph.json");
    std::fs::write(&deph, KrausChannel::dephasing().to_json()).unwrap();
    let o = qib(&["channel-info", s(&deph), "--preset", "classical", "--params", "0.1,0.2,0.3,0.4"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("J_norm = 1.000000"), "{text}");
    assert!(text.contains("R_norm = 0.500000"), "{text}");

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, r#"{"d_in": 2, "d_out": 2, "kraus": [[[1, 0], [0, 0]"#).unwrap();
    assert_eq!(qib(&["channel-info", s(&broken)]).status.code(), Some(2));

    let not_tp = dir.path().join("half.json");
    std::fs::write(&not_tp, r#"{"d_in": 2, "d_out": 2, "kraus": [[[1, 0], [0, 0], [0, 0], [0, 0]]]}"#).unwrap();
    let o = qib(&["channel-info", s(&not_tp)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stdout).contains("CPTP: fail"));
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tessellate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tessellate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn report_of(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    v["payload"]["report"].clone()
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn keys(v: &Value) -> Vec<String> {
    let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
    k.sort();
    k
}

#[test]
fn lemmas_report_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lemmas.json");
    let out = tessellate(&["lemmas", "--grid-step", "1e-5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = read(&path);
    let r = &v["payload"]["report"];
    let ratio = r["arccos"]["max_ratio"].as_f64().unwrap();
    assert!((ratio - 0.2854).abs() < 1e-4);
    assert_eq!(r["violations"], 0);
    assert_eq!(v["payload"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["payload"]["config"]["grid-step"], 1e-5);

    assert_eq!(tessellate(&["lemmas", "--grid-step", "0.5"]).status.code(), Some(64));
    assert_eq!(tessellate(&["lemmas"]).status.code(), Some(0));
    assert_eq!(tessellate(&["lemmas", "--no-such-flag", "1"]).status.code(), Some(64));
    // A constant below the true maximum is a violated inequality.
    assert_eq!(tessellate(&["lemmas", "--c0", "0.2", "--sweep", "1000"]).status.code(), Some(2));
}

#[test]
fn width_examples() {
    let out = tessellate(&["width", "--set", "ball:n=3,r=1", "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    let (mean, se) = (r["mean"].as_f64().unwrap(), r["std_err"].as_f64().unwrap());
    assert!((mean - 1.5958).abs() <= 4.0 * se);

    let out = tessellate(&["width", "--set", "segball:a=1,eps=0,n=1"]);
    let r = report_of(&out);
    assert!((r["mean"].as_f64().unwrap() - 0.7979).abs() <= 4.0 * r["std_err"].as_f64().unwrap());

    assert_eq!(tessellate(&["width", "--set", "blob:x=1"]).status.code(), Some(64));
    assert_eq!(tessellate(&["width"]).status.code(), Some(64));
}

#[test]
fn check_examples_and_guard() {
    let out = tessellate(&["check", "--set", "subsphere:n=3,k=1", "--delta", "0.01", "--m", "40", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert_eq!(r["passes"], 3);
    for t in r["reports"].as_array().unwrap() {
        assert_eq!(t["max_violation"], 0.0);
        assert_eq!(
            keys(t),
            ["delta", "max_violation", "passed", "quantiles", "worst_pair_index"]
        );
    }

    let out = tessellate(&["check", "--set", "subsphere:n=6,k=4", "--delta", "1", "--m", "3", "--trials", "5"]);
    assert_eq!(report_of(&out)["pass_rate"], 1.0);

    // A single point gives only the pair (x, x).
    let out = tessellate(&["check", "--set", "cloud:0.3;0.1", "--delta", "0", "--m", "10", "--lambda", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report_of(&out)["pass_rate"], 1.0);

    let out = tessellate(&["check", "--set", "segball:a=0.6,eps=0.1,n=4", "--delta", "0.2", "--m", "1", "--lambda", "4"]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn witness_report_fields() {
    let out = tessellate(&["witness", "--delta", "0.2", "--m", "1600", "--trials", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert_eq!(r["successes"], 4);
    for w in r["reports"].as_array().unwrap() {
        assert_eq!(keys(w), ["k", "norm_x", "residual", "succeeded", "violation"]);
        assert!(w["violation"].as_f64().unwrap() > 0.2);
        assert!(w["norm_x"].as_f64().unwrap() <= 0.2 + 1e-9);
    }
    // k above m / 6 is rejected.
    assert_eq!(tessellate(&["witness", "--m", "600", "--k", "101"]).status.code(), Some(64));
    // m not above lambda / 2.
    assert_eq!(tessellate(&["witness", "--m", "1"]).status.code(), Some(65));
}

#[test]
fn phase_csv_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut inputs = Vec::new();
    for d in ["0.3", "0.25", "0.2"] {
        let json = dir.path().join(format!("phase-{d}.json"));
        let csv = dir.path().join(format!("phase-{d}.csv"));
        let out = tessellate(&[
            "phase",
            "--delta",
            d,
            "--grid",
            "200,400,800,1600,3200,6400,12800",
            "--trials",
            "6",
            "--out",
            json.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let text = std::fs::read_to_string(&csv).unwrap();
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "delta,m,trials,passes,pass_rate");
        assert_eq!(rows.len(), 8);
        assert!(text.lines().any(|l| l.starts_with("# tessellate ")));
        inputs.push(json.to_str().unwrap().to_string());
    }
    let out = tessellate(&["fit", "--inputs", &inputs.join(",")]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report_of(&out);
    assert_eq!(keys(&r["fit"]), ["intercept", "r2", "slope"]);
    assert!(r["fit"]["slope"].as_f64().unwrap() > 0.0);
    // Two deltas are not enough for a fit.
    let out = tessellate(&["fit", "--inputs", &inputs[..2].join(",")]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn config_file_matches_flags_and_runs_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# witness run\ndelta = 0.2\nm = 800\ntrials = 3\nseed = 9\n").unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let c = dir.path().join("c.json");
    let cfg_s = cfg.to_str().unwrap();
    assert_eq!(tessellate(&["witness", "--config", cfg_s, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    assert_eq!(
        tessellate(&["witness", "--config", cfg_s, "--threads", "3", "--out", b.to_str().unwrap()]).status.code(),
        Some(0)
    );
    let flags = ["witness", "--delta", "0.2", "--m", "800", "--trials", "3", "--seed", "9", "--out", c.to_str().unwrap()];
    assert_eq!(tessellate(&flags).status.code(), Some(0));
    let (va, vb, vc) = (read(&a), read(&b), read(&c));
    let pa = serde_json::to_string(&va["payload"]).unwrap();
    assert_eq!(pa, serde_json::to_string(&vb["payload"]).unwrap());
    assert_eq!(pa, serde_json::to_string(&vc["payload"]).unwrap());
    assert!(va["metadata"]["timestamp_unix"].as_u64().unwrap() > 0);
    assert_eq!(va["payload"]["config"]["seed"], 9);

    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(tessellate(&["lemmas", "--config", cfg_s]).status.code(), Some(64));
}

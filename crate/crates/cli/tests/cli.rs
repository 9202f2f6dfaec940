use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_unwrap"))
        .current_dir(dir)
        .env_remove("UNWRAP_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_unwrap_metrics_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::create_dir(d.join("profiles")).unwrap();
    for (i, kappa) in ["0.006", "-0.01", "0:0.012;100:-0.012"].iter().enumerate() {
        let mask = format!("m{i}.pgm");
        ok(d, &["synth", "--length", "200", "--width", "21", "--kappa-spec", kappa, "--noise", "1", "--seed", &i.to_string(), "--out", &mask, "--truth", &format!("t{i}.json")]);
        assert_eq!(json(&d.join(format!("t{i}.json")))["seed"], i);
        ok(d, &["unwrap-neutral", "--mask", &mask, "--out-profile", &format!("profiles/p{i}.csv"), "--report", &format!("n{i}.json"), "--svg", &format!("n{i}.svg")]);
        let r = json(&d.join(format!("n{i}.json")));
        let length = r["measures"]["length"].as_f64().unwrap();
        assert!((length - 200.0).abs() < 8.0, "length {length}");
    }
    ok(d, &["metrics", "--profiles", "profiles", "--report", "metrics.json"]);
    let m = json(&d.join("metrics.json"));
    let per = m["per_instance"].as_array().unwrap();
    assert_eq!(per.len(), 3);
    for row in per {
        let row = row.as_array().unwrap();
        assert_eq!(row.len(), 5);
        assert!(row.iter().all(|v| v.as_f64().unwrap().abs() < 5.0));
    }
}

#[test]
fn morph_and_contour_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--length", "150", "--width", "19", "--kappa-spec", "0.008", "--out", "m.png"]);
    ok(d, &["contour", "--mask", "m.png", "--out", "c.csv", "--report", "c.json"]);
    assert!(json(&d.join("c.json"))["points"].as_u64().unwrap() > 100);
    ok(d, &["unwrap-morph", "--image", "m.png", "--mask", "m.png", "--out", "s.png", "--out-profile", "w.csv", "--fields-dir", "fields", "--report", "r.json"]);
    for f in ["s.png", "w.csv", "fields/phi0.pgm", "fields/phi0.pgm.range", "fields/s0.pgm"] {
        assert!(d.join(f).exists(), "{f}");
    }
}

#[test]
fn train_then_classify_reports_confusion() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::create_dir(d.join("p")).unwrap();
    let mut labels = String::from("name,label\n");
    for (fam, width) in [("thin", "13"), ("thick", "23")] {
        for i in 0..4 {
            let name = format!("{fam}{i}");
            let kappa = format!("{}", 0.004 * (i as f64 - 1.5));
            ok(d, &["synth", "--length", "160", "--width", width, "--cap", "taper", "--kappa-spec", &kappa, "--noise", "1", "--seed", &i.to_string(), "--out", &format!("{name}.pgm")]);
            ok(d, &["unwrap-neutral", "--mask", &format!("{name}.pgm"), "--out-profile", &format!("p/{name}.csv"), "--report", "n.json"]);
            labels.push_str(&format!("{name},{fam}\n"));
        }
    }
    std::fs::write(d.join("labels.csv"), labels).unwrap();
    ok(d, &["train", "--profiles", "p", "--labels", "labels.csv", "--out", "ens.json", "--report", "train.json"]);
    ok(d, &["classify", "--profiles", "p", "--ensemble", "ens.json", "--labels", "labels.csv", "--report", "cls.json"]);
    let r = json(&d.join("cls.json"));
    assert_eq!(r["accuracy"], 1.0);
    assert_eq!(r["confusion"]["thin"]["thin"], 4);
    assert_eq!(r["family_errors"].as_array().unwrap().len(), 2);
}

#[test]
fn missing_input_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(tmp.path(), &["unwrap-neutral", "--mask", "absent.pgm", "--out-profile", "p.csv"]);
    assert!(!out.status.success());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["path"], "absent.pgm");
    assert_eq!(err["error"]["module"], "neutral-line");
}

#[test]
fn unknown_config_key_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["synth", "--out", "m.pgm"]);
    std::fs::write(d.join("c.toml"), "max_delta_phi = 0.2\nsmoothing = 3\n").unwrap();
    let out = run(d, &["unwrap-neutral", "--mask", "m.pgm", "--out-profile", "p.csv", "--config", "c.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("smoothing"));
}

#[test]
fn same_seed_gives_identical_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let mut reports = Vec::new();
    for k in 0..2 {
        let mask = format!("m{k}.pgm");
        ok(d, &["synth", "--kappa-spec", "0.01", "--noise", "1", "--seed", "42", "--out", &mask]);
        ok(d, &["unwrap-neutral", "--mask", &mask, "--out-profile", &format!("p{k}.csv"), "--report", &format!("r{k}.json")]);
        reports.push((std::fs::read(d.join(&mask)).unwrap(), std::fs::read(d.join(format!("r{k}.json"))).unwrap()));
    }
    assert_eq!(reports[0].0, reports[1].0);
    let strip = |b: &[u8]| String::from_utf8_lossy(b).replace("m0.pgm", "").replace("m1.pgm", "");
    assert_eq!(strip(&reports[0].1), strip(&reports[1].1));
}

#[test]
fn eval_roundtrip_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(d, &["eval-roundtrip", "--seed", "5", "--report", "a.json"]);
    ok(d, &["eval-roundtrip", "--seed", "5", "--report", "b.json"]);
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    assert_eq!(json(&d.join("a.json"))["cases"].as_array().unwrap().len(), 24);
}

#[test]
fn out_dir_override_applies_to_relative_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = Command::new(env!("CARGO_BIN_EXE_unwrap"))
        .current_dir(d)
        .env("UNWRAP_OUT_DIR", "outs")
        .args(["synth", "--out", "m.pgm"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(d.join("outs/m.pgm").exists());
}

#[test]
fn version_flag_prints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(tmp.path(), &["--version"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

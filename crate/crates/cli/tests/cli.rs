use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apselect"))
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(v).unwrap()).unwrap();
    p
}

fn run(scenario: &str, config: &Path, out: &Path) -> Output {
    bin().arg(scenario).arg("--config").arg(config).arg("--out").arg(out).output().unwrap()
}

fn small_metrics(expect: f64) -> Value {
    json!({
        "scenario": "metrics",
        "space": {"dim": 1, "metric": "euclidean"},
        "scheme": {"b_list": [100, 200, 400], "step": 0.0078125, "window": 2},
        "inputs": {
            "basis": {"reals": [1]},
            "f": {"op": "sin", "freq": [1]},
            "g": {"op": "constant", "value": [0.0]},
            "p": 2,
            "lambdas": [1],
            "expect": {"value": expect, "tol": 0.01}
        },
        "seed": 0
    })
}

fn small_partition(max_centers: Option<usize>) -> Value {
    let mut options = json!({
        "J": 0,
        "resid_target": 0.05,
        "probe_scheme": {"b_list": [25, 50], "step": 0.03125, "window": 1}
    });
    if let Some(m) = max_centers {
        options["max_centers"] = json!(m);
    }
    json!({
        "scenario": "partition",
        "space": {"dim": 1, "metric": "euclidean"},
        "scheme": {"b_list": [100, 200], "step": 0.03125, "window": 1},
        "inputs": {
            "basis": {"reals": [1, "sqrt(2)"]},
            "f": {"op": "trig", "terms": [
                {"kind": "sin", "freq": [1, 0]},
                {"kind": "sin", "freq": [0, 1], "amp": 0.5}
            ]},
            "eps": 0.5,
            "options": options,
            "samples": {"start": -99.99, "spacing": 0.1, "count": 2000}
        },
        "seed": 3
    })
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn metrics_run_reports_rms_of_sine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.json", &small_metrics(0.5f64.sqrt()));
    let out = tmp.path().join("out");
    let o = run("metrics", &cfg, &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["status"], "pass");
    let db = r["results"]["besicovitch"]["value"].as_f64().unwrap();
    assert!((db - 0.5f64.sqrt()).abs() < 1e-2, "{db}");
    // the coefficient of e^{it} in sin t is -i/2
    let c = &r["results"]["fourier_bohr"][0]["value"][0];
    assert!((c[1].as_f64().unwrap() + 0.5).abs() < 1e-2, "{c}");
    assert!(out.join("trace.csv").exists());
}

#[test]
fn wrong_expectation_exits_one_and_still_writes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.json", &small_metrics(0.9));
    let out = tmp.path().join("out");
    let o = run("metrics", &cfg, &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expected_value"));
    assert_eq!(report(&out)["status"], "certificate_failure");
}

#[test]
fn malformed_json_exits_two_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{ \"scenario\": \"metrics\", ").unwrap();
    let out = tmp.path().join("out");
    assert_eq!(run("metrics", &cfg, &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_field_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut v = small_metrics(0.7);
    v["inputs"]["colour"] = json!("blue");
    let cfg = write_config(tmp.path(), "m.json", &v);
    let out = tmp.path().join("out");
    let o = run("metrics", &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    assert!(!out.exists());
}

#[test]
fn scenario_mismatch_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.json", &small_metrics(0.7));
    let out = tmp.path().join("out");
    assert_eq!(run("partition", &cfg, &out).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_scenario_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.json", &small_metrics(0.7));
    let o = bin().arg("frobnicate").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exhausted_center_budget_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", &small_partition(Some(1)));
    let out = tmp.path().join("out");
    let o = run("partition", &cfg, &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("numerical failure"));
    assert!(!out.exists());
}

#[test]
fn small_partition_passes_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.json", &small_partition(None));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run("partition", &cfg, &a).status.code(), Some(0));
    assert_eq!(run("partition", &cfg, &b).status.code(), Some(0));
    for name in ["report.json", "partition.json", "samples.csv"] {
        let (x, y) = (std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
        assert_eq!(x, y, "{name} differs");
        assert!(!x.contains(&b'\r'));
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.json", &json!({"scenario": "verify", "inputs": {"seeds": 1}, "seed": 1}));
    let out = tmp.path().join("out");
    let o = bin().args(["verify", "--seed", "9", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["seed"], 9);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        apselect::load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 7);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rialign"))
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn run(config: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(config).args(args).output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const IC2: &str = r#"{"kind":"ic","K":2,"J":2,"M":[1,1],"N":[1,1],"seed":3}"#;
const X22: &str = r#"{"kind":"x","K":2,"J":2,"M":[1,1],"N":[1,1]}"#;

#[test]
fn formulas_report_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "x.json", X22);
    let out = run(&cfg, &["formulas"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let rows = v["formulas"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["row"] == "KJN/(K+J-1) = 4/3"));
    assert_eq!(v["meta"]["seed"], 0);
    assert_eq!(v["meta"]["config_sha256"].as_str().unwrap().len(), 64);

    let csv = run(&cfg, &["--format", "csv", "formulas"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("# config_sha256="));
    assert!(text.lines().nth(1) == Some("label,value,witness"));
}

#[test]
fn regions_queries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ic.json", IC2);
    let out = run(&cfg, &["regions", "--contains", "1/2,1/2", "--maximize-sum", "--vertices"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    let regions = v["regions"].as_array().unwrap();
    assert_eq!(regions.len(), 2);
    for r in regions {
        assert_eq!(r["contains"], true);
        assert_eq!(r["maximize"]["value"], "1");
    }
    let out = run(&cfg, &["regions", "--contains", "2/3,1/2"]);
    assert_eq!(json_of(&out)["regions"][0]["contains"], false);

    let csv = run(&cfg, &["--format", "csv", "regions", "--vertices"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    assert_eq!(text.lines().nth(1), Some("d1,d2"));
    assert_eq!(run(&cfg, &["--format", "csv", "regions"]).status.code(), Some(1));
}

#[test]
fn directions_respect_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ic.json", IC2);
    let v = json_of(&run(&cfg, &["directions", "--n", "2"]));
    assert_eq!(v["families"][0]["D"], "4");
    assert_eq!(v["families"][0]["D_ext"], "9");
    assert_eq!(v["families"][0]["generators"], serde_json::json!([[1, 2, 1, 1], [2, 1, 1, 1]]));
    assert_eq!(v["families"][0]["directions"].as_array().unwrap().len(), 4);

    let v = json_of(&run(&cfg, &["--cap-directions", "10", "directions", "--n", "3"]));
    assert_eq!(v["families"][0]["D"], "9");
    assert!(v["families"][0]["directions"].is_null());
}

#[test]
fn align_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ic.json", IC2);
    let out = run(&cfg, &["align-check", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("receiver 1: checked"));
    assert!(err.contains("violations: 0"));

    let out = run(&cfg, &["--cap-directions", "20", "align-check", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "bad.json", r#"{"kind":"ic","K":2,"J":2,"M":[1,1],"N":[1,1],"extra":1}"#);
    assert_eq!(run(&unknown, &["formulas"]).status.code(), Some(1));
    let shape = write_config(dir.path(), "shape.json", r#"{"kind":"ic","K":2,"J":2,"M":[1],"N":[1,1]}"#);
    assert_eq!(run(&shape, &["formulas"]).status.code(), Some(1));
    assert_eq!(run(&dir.path().join("missing.json"), &["formulas"]).status.code(), Some(1));
    let cfg = write_config(dir.path(), "ic.json", IC2);
    assert_eq!(run(&cfg, &["regions", "--contains", "1/0,1"]).status.code(), Some(1));
    assert_eq!(run(&cfg, &["simulate", "--n", "1", "--p0", "1e4,1e2"]).status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn mindist_reports_distance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ic.json", IC2);
    let dump = dir.path().join("model.csv");
    let out = run(&cfg, &["mindist", "--n", "1", "--q", "1", "--box", "structural", "--whiten", "--dump-model", dump.to_str().unwrap()]);
    let model = std::fs::read_to_string(&dump).unwrap();
    assert!(model.contains("# j=1,rows=1,G=5"));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!(v["report"]["d_min"].as_f64().unwrap() > 0.0);
    assert_eq!(v["report"]["columns"], 5);
    assert_eq!(run(&cfg, &["--cap-enum", "5", "mindist", "--n", "2", "--q", "3"]).status.code(), Some(2));
    assert_eq!(run(&cfg, &["mindist", "--n", "1", "--q", "1", "--receiver", "3"]).status.code(), Some(1));
}

#[test]
fn simulate_is_reproducible_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ic.json", IC2);
    let target = dir.path().join("sweep.csv");
    let args = ["--format", "csv", "simulate", "--n", "1", "--trials", "300", "--p0", "1e2,1e4,1e6"];
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&target)
        .args(args)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = std::fs::read_to_string(&target).unwrap();
    assert!(first.starts_with("# config_sha256="));
    assert!(first.contains(",seed=3\n"));
    assert_eq!(first.lines().count(), 2 + 3 * 2);
    let sidecar: Value = serde_json::from_str(&std::fs::read_to_string(target.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["report"]["rows"].as_array().unwrap().len(), 6);
    assert_eq!(sidecar["meta"]["seed"], 3);

    let again = run(&cfg, &args);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), first);
    let other = bin().arg("--config").arg(&cfg).args(["--seed", "4", "--threads", "1"]).args(args).output().unwrap();
    let other = String::from_utf8(other.stdout).unwrap();
    assert!(other.contains(",seed=4\n"));
    assert_ne!(other, first);
}

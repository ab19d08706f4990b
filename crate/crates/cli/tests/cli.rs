use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const POLYMER: &str = r#"{
  "seed": 11,
  "experiment": {"kind": "polymer-build", "gamma": 3.0, "k": 3, "curves": 3, "n_first": 1, "n_last": 5, "oracle": true}
}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gibbs-lines"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).args(extra).output().unwrap()
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn zero_trials_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a1.json",
        r#"{"seed": 1, "experiment": {"kind": "verify-A1", "hamiltonian": {"type": "zero"}, "trials": 0}}"#,
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("experiment.trials"), "{err}");
    assert!(!out.exists());
}

#[test]
fn unknown_keys_are_rejected_at_every_level() {
    let dir = tempfile::tempdir().unwrap();
    for (i, body) in [
        r#"{"seed": 1, "sede": 2, "experiment": {"kind": "verify-A1", "hamiltonian": {"type": "zero"}, "trials": 5}}"#,
        r#"{"seed": 1, "experiment": {"kind": "verify-A1", "hamiltonian": {"type": "zero"}, "trials": 5, "trails": 5}}"#,
        r#"{"seed": 1, "experiment": {"kind": "verify-A1", "hamiltonian": {"type": "zero", "scale": 1}, "trials": 5}}"#,
        r#"{"seed": 1, "experiment": {"kind": "verify-A9", "trials": 5}}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), body);
        let out = dir.path().join(format!("out{i}"));
        let o = run(&cfg, &out, &[]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists());
    }
}

#[test]
fn non_empty_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", POLYMER);
    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    fs::write(out.join("keep.txt"), "x").unwrap();
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 1);
}

#[test]
fn same_seed_gives_byte_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", POLYMER);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run(&cfg, &a, &["--workers", "1"]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &["--workers", "3"]).status.code(), Some(0));
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv") || n.to_string_lossy().ends_with(".svg"))
        .collect();
    names.sort();
    assert!(names.len() >= 3);
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());

    let c = dir.path().join("c");
    assert_eq!(run(&cfg, &c, &["--seed", "12"]).status.code(), Some(0));
    assert_ne!(
        fs::read(a.join("environment.csv")).unwrap(),
        fs::read(c.join("environment.csv")).unwrap()
    );
}

#[test]
fn polymer_build_records_oracle_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", POLYMER);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &[]).status.code(), Some(0));
    let m = manifest(&out);
    assert_eq!(m["notes"]["oracle"]["agrees"], Value::Bool(true));
    assert!(m["notes"]["oracle"]["max_relative_error"].as_f64().unwrap() <= 1e-9);
    assert_eq!(m["checks"][0]["status"], "PASS");
    assert!(m.get("timestamp").is_none());
}

#[test]
fn manifest_reruns_to_the_same_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", POLYMER);
    let first = dir.path().join("first");
    assert_eq!(run(&cfg, &first, &["--seed", "99"]).status.code(), Some(0));
    let second = dir.path().join("second");
    assert_eq!(run(&first.join("manifest.json"), &second, &[]).status.code(), Some(0));
    assert_eq!(manifest(&second)["seed"], 99);
    assert_eq!(
        fs::read(first.join("line_ensemble.csv")).unwrap(),
        fs::read(second.join("line_ensemble.csv")).unwrap()
    );
}

#[test]
fn oracle_subcommand_writes_only_oracle_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", POLYMER);
    let out = dir.path().join("out");
    let o = bin().arg("oracle").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("oracle.csv").exists());
    assert!(!out.join("line_ensemble.csv").exists());
    assert_eq!(manifest(&out)["mode"], "oracle");

    let other = write_config(
        dir.path(),
        "a1.json",
        r#"{"seed": 1, "experiment": {"kind": "verify-A1", "hamiltonian": {"type": "zero"}, "trials": 5}}"#,
    );
    let o = bin().arg("oracle").arg(&other).arg("--out").arg(dir.path().join("x")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn no_plots_skips_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "p.json", POLYMER);
    let out = dir.path().join("out");
    assert_eq!(run(&cfg, &out, &["--no-plots"]).status.code(), Some(0));
    assert!(fs::read_dir(&out)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".svg")));
}

#[test]
fn failing_check_exits_one_and_keeps_artifacts() {
    // The smallest constant that works for these curves is near 0.5.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "a3.json",
        r#"{"seed": 1, "experiment": {"kind": "verify-A3", "ns": [16, 64], "family": "smooth", "trials": 200, "c1": 0.01}}"#,
    );
    let out = dir.path().join("out");
    let o = run(&cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("[FAIL] A3"));
    let m = manifest(&out);
    assert!(m["checks"].as_array().unwrap().iter().any(|c| c["status"] == "FAIL"));
}

#[test]
fn shipped_example_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "json") {
            gibbs_lines_cli::config::load(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
            seen += 1;
        }
    }
    assert_eq!(seen, 11);
}

//! End-to-end checks of the `mslab` binary: exit codes, diagnostics,
//! provenance and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mslab"));
    c.env_remove("MSLAB_THREADS");
    c
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn entropy_config(formula: &str, tol: f64) -> String {
    format!(
        r#"{{"kind": "entropy", "params": {{"spec": {{"d": 1, "r": 2.0, "kind": "quantifier_free",
            "constraints": [{{"formula": "{formula}", "target": 1.0, "tol": {tol}}}]}},
            "n_list": [3], "samples": 2000}}}}"#
    )
}

#[test]
fn shipped_configs_validate_cleanly() {
    let mut seen = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        if !text.contains("\"params\"") {
            continue;
        }
        let o = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}: {}", path.display(), stderr(&o));
        assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "[]");
        seen += 1;
    }
    assert_eq!(seen, 9);
}

#[test]
fn invalid_formula_reports_parse_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &entropy_config("tr.re(x1 x1", 0.1));
    for cmd in ["validate", "entropy"] {
        let o = bin().args([cmd, "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(o.status.code(), Some(2));
        let e = stderr(&o);
        assert!(e.contains("constraints[0].formula") && e.contains("parse error at byte 11"), "{e}");
    }
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &entropy_config("tr.re(x1 x1)", 0.0));
    let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("tol must be positive"));
}

#[test]
fn variable_count_mismatch_names_the_index() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &entropy_config("tr.re(x1 x2)", 0.1));
    let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("variable index 2 out of range for a 1-tuple"), "{}", stderr(&o));
    let pot = r#"{"kind": "gibbs", "params": {"n": 4, "potential": {"formula": "tr.re(x1 x1*) + tr.re(x3 x3*)",
        "bounds": {"a": 0, "b": 1, "A": 0, "B": 1}, "d": 2}}}"#;
    let cfg = write(dir.path(), "g.json", pot);
    let o = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("variable index 3"), "{}", stderr(&o));
}

#[test]
fn schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"kind": "specht", "params": {"source": {"kind": "cubic_fixture"}, "maxlen": 3}}"#);
    let o = bin().args(["validate", "--config"]).arg(&unknown).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("maxlen"));
    let o = bin().args(["wasserstein", "--config"]).arg(configs_dir().join("specht.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("config is for `specht`"));
    let o = bin().args(["nonsense", "--config", "x.json"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().args(["specht", "--config"]).arg(dir.path().join("missing.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_microstate_space_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    // tr(x x*) is never negative
    let cfg = write(dir.path(), "c.json", &entropy_config("tr.re(x1 x1*) + 2", 0.5));
    let o = bin().args(["entropy", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("r.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("no hits"));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn reruns_are_byte_identical_and_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, file) in [("specht", "specht.json"), ("wasserstein", "wasserstein.json"), ("hopf-lax", "hopf_lax.json")] {
        let cfg = configs_dir().join(file);
        let mut outs = Vec::new();
        for (run, threads) in [(0, "1"), (1, "2")] {
            let out = dir.path().join(format!("{kind}-{run}.json"));
            let o = bin().env("MSLAB_THREADS", threads).args([kind, "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            outs.push((std::fs::read(&out).unwrap(), std::fs::read(out.with_extension("csv")).unwrap()));
        }
        assert_eq!(outs[0], outs[1], "{kind} reruns differ");
        let v: serde_json::Value = serde_json::from_slice(&outs[0].0).unwrap();
        assert_eq!(v["kind"], kind);
        assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
        assert!(v["seed"].is_u64());
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs_dir().join("wasserstein.json");
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let o = bin().args(["wasserstein", "--config"]).arg(&cfg).args(["--seed", seed, "--out"]).arg(&out).output().unwrap();
        assert_eq!(o.status.code(), Some(0));
        serde_json::from_slice::<serde_json::Value>(&std::fs::read(out).unwrap()).unwrap()
    };
    let a = run("11", "a.json");
    let b = run("12", "b.json");
    assert_eq!(a["seed"], 11);
    assert_ne!(a["result"], b["result"]);
}

#[test]
fn thread_cap_must_be_positive() {
    let o = bin().env("MSLAB_THREADS", "0").args(["validate", "--config"]).arg(configs_dir().join("specht.json")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("MSLAB_THREADS"));
}

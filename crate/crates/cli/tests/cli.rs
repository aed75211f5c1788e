// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::Command;

fn rdslab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rdslab"))
}

const CONFIG: &str = r#"
seed = 11
analyses = ["stationary", "cocycle_check"]
eps = 0.05

[system]
map = "doubling"

[kernel]
variant = "additive"

[resolution]
bins = 300
test_sets = 8
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn listings_name_the_builtins() {
    let out = rdslab().arg("list-systems").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success());
    for name in ["doubling", "rotation", "cat_map", "ou", "double_well"] {
        assert!(text.contains(name), "{name} missing");
    }
    let out = rdslab().arg("list-kernels").output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["random_jump", "additive", "parametric", "trap", "delta"] {
        assert!(text.contains(name));
    }
}

#[test]
fn run_writes_artifacts_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let st = rdslab().arg("run").arg(&cfg).arg("--out").arg(dir).status().unwrap();
        assert!(st.success());
    }
    for f in ["stationary_measure.csv", "stationary_summary.csv", "cocycle_check.csv", "manifest.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_changes_the_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), CONFIG);
    let out = tmp.path().join("o");
    rdslab().arg("run").arg(&cfg).arg("--out").arg(&out).arg("--seed").arg("12").status().unwrap();
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 12"));
}

#[test]
fn bad_config_exits_before_work() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &CONFIG.replace("stationary", "spectral"));
    let out = tmp.path().join("o");
    let r = rdslab().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failing_analysis_sets_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &CONFIG.replace("\"cocycle_check\"", "\"lyapunov\"").replace("additive", "random_jump"));
    let out = tmp.path().join("o");
    let r = rdslab().arg("run").arg(&cfg).arg("--out").arg(&out).env("RDSLAB_THREADS", "2").output().unwrap();
    assert_eq!(r.status.code(), Some(1));
    assert!(out.join("stationary_measure.csv").exists());
    assert!(out.join("manifest.toml").exists());
}

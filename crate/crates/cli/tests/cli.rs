use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kernel_lsq::experiment::{verify_manifest, Manifest, REPORT_FILES};
use kernel_lsq::geometry::{write_points_csv, SpherePoint};

fn kernel_lsq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kernel-lsq"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn minimal(out: &str) -> String {
    format!(
        r#"{{"kernel":{{"type":"sobolev","beta":4.0}},"generator":{{"type":"fibonacci","levels":[50]}},"seed":7,"output_dir":"{out}"}}"#
    )
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn validate_minimal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &minimal("out"));
    let o = kernel_lsq(&["validate", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("ok: 1 level"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dup = write_config(
        dir.path(),
        "dup.json",
        r#"{"kernel":{"type":"sobolev","beta":4.0},"generator":{"type":"fibonacci","levels":[100,100]},"seed":1}"#,
    );
    for cmd in ["validate", "run"] {
        let o = kernel_lsq(&[cmd, dup.to_str().unwrap()]);
        assert_eq!(code(&o), 2);
        assert!(String::from_utf8_lossy(&o.stderr).contains("generator.levels[1]"));
    }
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&kernel_lsq(&["run", missing.to_str().unwrap()])), 2);
    let garbage = write_config(dir.path(), "bad.json", "{");
    assert_eq!(code(&kernel_lsq(&["validate", garbage.to_str().unwrap()])), 2);
}

#[test]
fn run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let cfg = write_config(dir.path(), &format!("{out}.json"), &minimal(out));
        let o = kernel_lsq(&["run", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in REPORT_FILES {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a.iter().filter(|c| **c == b'\n').count() >= 2, "{name} has no data rows");
        assert_eq!(a, b, "{name} differs between runs");
    }
    let out = dir.path().join("a");
    let m = Manifest::read(&out).unwrap();
    assert!(verify_manifest(&out, &m).is_empty());
    assert!(m.levels.iter().all(|l| l.ok));
}

#[test]
fn all_levels_failing_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = SpherePoint::north();
    let near = vec![p, p.step([0.0, 1.0, 0.0], 1e-7).unwrap(), SpherePoint::south()];
    write_points_csv(&near, dir.path().join("near.csv")).unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"kernel":{"type":"sobolev","beta":4.0},"generator":{"type":"file","paths":["near.csv"]},"seed":1}"#,
    );
    let o = kernel_lsq(&["run", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let m = Manifest::read(dir.path().join("out")).unwrap();
    assert!(m.all_failed());
}

#[test]
fn plotdata_output() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = kernel_lsq(&["plotdata", empty.to_str().unwrap()]);
    assert_ne!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("not found"));

    let cfg = write_config(dir.path(), "c.json", &minimal("out"));
    assert_eq!(code(&kernel_lsq(&["run", cfg.to_str().unwrap()])), 0);
    let out = dir.path().join("out");
    let o = kernel_lsq(&["plotdata", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("experiment,level,metric,value\n"));

    let file = dir.path().join("long.csv");
    let o = kernel_lsq(&["plotdata", out.to_str().unwrap(), "--out", file.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(file).unwrap(), stdout);
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn emff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emff"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn presets_list() {
    let out = emff(&["presets", "list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["maintenance_5rw", "reconfig_3rw", "maintenance_unloading"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn short_simulation_writes_csv() {
    let dir = scratch("short");
    let out = emff(&[
        "simulate",
        "--scenario",
        "maintenance_5rw",
        "--duration",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "states.csv",
        "momentum.csv",
        "dipoles.csv",
        "inversion.csv",
        "summary.txt",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let states = std::fs::read_to_string(dir.join("states.csv")).unwrap();
    assert!(states.starts_with("t,"));
    assert_eq!(states.lines().count(), 1 + 9);
}

#[test]
fn unknown_scenario_is_a_validation_error() {
    let dir = scratch("unknown");
    let out = emff(&[
        "simulate",
        "--scenario",
        "no_such_preset",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_duration_is_a_validation_error() {
    let dir = scratch("negative");
    let out = emff(&[
        "simulate",
        "--scenario",
        "maintenance_5rw",
        "--duration",
        "-1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_file_is_a_validation_error() {
    let dir = scratch("malformed");
    let path = dir.join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\naltitude_m = \"high\"\n").unwrap();
    let out = emff(&[
        "simulate",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("altitude_m"));
}

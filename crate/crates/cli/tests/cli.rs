use std::path::Path;
use std::process::{Command, Output};

use pfsim_core::driver::{frame_path, FRAMES_FILE};
use pfsim_core::validation::momentum_scene;

const DROP: &str = r#"{
    "frames": 6,
    "bodies": [
        { "mesh": { "kind": "box", "extent": [1, 0.1, 1], "cells": [2, 1, 2] },
          "boundary": [{ "select": { "kind": "all" }, "trajectory": { "kind": "fixed" } }] },
        { "mesh": { "kind": "box", "extent": [0.2, 0.2, 0.2], "cells": [2, 2, 2] },
          "translation": [0.01, 0.17, -0.02], "rotation": [0.1, 0.2, 0.0],
          "velocity": [0, -2, 0], "jitter": 0.002 }
    ]
}"#;

fn pfsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pfsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Parses `frames.csv` into a header and rows of fields.
fn frames_table(dir: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(dir.join(FRAMES_FILE)).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn empty_scene_writes_ten_frames() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "empty.json", "{}");
    let out = dir.path().join("out");
    let o = pfsim(&["run", &scene, "--frames", "10", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in 1..=10 {
        assert!(frame_path(&out, f).exists());
    }
    assert!(!frame_path(&out, 11).exists());
    let (header, rows) = frames_table(&out);
    assert_eq!(rows.len(), 10);
    let k = column(&header, "peak_constraints");
    assert!(rows.iter().all(|r| r[k] == "0"));
}

#[test]
fn single_thread_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "drop.json", DROP);
    let outs = ["a", "b"].map(|n| dir.path().join(n));
    for out in &outs {
        let o = pfsim(&["--threads", "1", "run", &scene, "--seed", "7", "--output", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in 1..=6 {
        let a = std::fs::read(frame_path(&outs[0], f)).unwrap();
        let b = std::fs::read(frame_path(&outs[1], f)).unwrap();
        assert_eq!(a, b, "frame {f}");
    }
    assert_eq!(
        std::fs::read(outs[0].join(FRAMES_FILE)).unwrap(),
        std::fs::read(outs[1].join(FRAMES_FILE)).unwrap()
    );
    let (header, rows) = frames_table(&outs[0]);
    let k = column(&header, "peak_constraints");
    assert!(rows.iter().any(|r| r[k] != "0"));
}

#[test]
fn seed_changes_the_jitter() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "drop.json", DROP);
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let o = pfsim(&["run", &scene, "--frames", "1", "--seed", seed, "--output", out.to_str().unwrap()]);
        assert!(o.status.success());
        std::fs::read(frame_path(&out, 1)).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
}

#[test]
fn momentum_is_logged_and_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "momentum.json", &momentum_scene().to_json());
    let out = dir.path().join("out");
    let o = pfsim(&["run", &scene, "--frames", "100", "--dump-every", "0", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!frame_path(&out, 1).exists());
    let (header, rows) = frames_table(&out);
    assert_eq!(rows.len(), 100);
    let cols = ["px", "py", "pz"].map(|c| column(&header, c));
    let p: Vec<[f64; 3]> = rows
        .iter()
        .map(|r| cols.map(|k| r[k].parse::<f64>().unwrap()))
        .collect();
    let norm = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let p0 = norm(p[0]);
    assert!(p0 > 0.0);
    for q in &p {
        let d = norm([q[0] - p[0][0], q[1] - p[0][1], q[2] - p[0][2]]);
        assert!(d < 0.01 * p0, "drift {d} of {p0}");
    }
}

#[test]
fn malformed_scene_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "bad.json", "{\n  \"frames\": 3,\n  \"bodies\": [ oops ]\n}");
    let o = pfsim(&["run", &scene]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn invalid_parameters_exit_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(dir.path(), "neg.json", r#"{ "step": { "h": -0.01 } }"#);
    let o = pfsim(&["run", &scene]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`step.h`"));
    let o = pfsim(&["run", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_mesh_file_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write(
        dir.path(),
        "mesh.json",
        r#"{ "bodies": [ { "mesh": { "kind": "file", "path": "nowhere.msh" } } ] }"#,
    );
    let o = pfsim(&["run", &scene]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn aborted_step_exits_with_failure_status() {
    let dir = tempfile::tempdir().unwrap();
    let text = DROP.replacen("\"frames\": 6,", "\"frames\": 6, \"step\": { \"max_outer\": 1 },", 1);
    let scene = write(dir.path(), "capped.json", &text);
    let out = dir.path().join("out");
    let o = pfsim(&["run", &scene, "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("aborted"));
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(diag.lines().count() > 1);
}

#[test]
fn validate_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = pfsim(&["validate", "al-convergence", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("PASS"));
    let csv = std::fs::read_to_string(out.join("al-convergence_violation.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}

#[test]
fn unknown_suite_is_rejected() {
    let o = pfsim(&["validate", "no-such-suite"]);
    assert_eq!(o.status.code(), Some(2));
}

use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn ringq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringq")).args(args).output().expect("failed to launch ringq")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    (header, lines.map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn column(text: &str, name: &str) -> Vec<String> {
    let (header, rows) = csv_rows(text);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[k].clone()).collect()
}

#[test]
fn ring_capacity_at_256() {
    let out = stdout(&ringq(&["capacity", "--ring", "0.5", "1.0", "--grid", "256"]));
    let err: f64 = column(&out, "rel_error")[0].parse().unwrap();
    let exact: f64 = column(&out, "exact")[0].parse().unwrap();
    assert!(err <= 0.03, "{out}");
    assert!((exact - 2.0 * std::f64::consts::PI / 2f64.ln()).abs() < 1e-12);
}

#[test]
fn constant_profile_fails_dini() {
    let out = stdout(&ringq(&["dini", "--profile", "const:1"]));
    assert_eq!(column(&out, "verdict"), ["diverges"]);
    let out = stdout(&ringq(&["dini", "--profile", "log2"]));
    assert_eq!(column(&out, "verdict"), ["converges"]);
}

#[test]
fn family_stays_above_sigma() {
    let out = stdout(&ringq(&["family", "--profile", "log2", "--m-max", "64"]));
    let above = column(&out, "above_sigma");
    assert_eq!(above.len(), 64);
    assert!(above.iter().all(|v| v == "true"), "{out}");
}

#[test]
fn csv_and_json_agree() {
    let args = ["qmean", "--profile", "log", "--radii", "0.5", "0.25", "0.125"];
    let csv = stdout(&ringq(&args));
    let json = stdout(&ringq(&[&["--format", "json"], &args[..]].concat()));
    let rows: Vec<Value> = serde_json::from_str(&json).unwrap();
    let (header, csv_rows) = csv_rows(&csv);
    assert_eq!(rows.len(), csv_rows.len());
    for (obj, row) in rows.iter().zip(&csv_rows) {
        let obj = obj.as_object().unwrap();
        assert_eq!(obj.keys().collect::<Vec<_>>(), header.iter().collect::<Vec<_>>());
        for (h, cell) in header.iter().zip(row) {
            let a = obj[h].as_f64().unwrap();
            assert_eq!(a, cell.parse::<f64>().unwrap());
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["verify-eq2", "--profile", "log2", "--map", "family:8", "--samples", "20", "--seed", "7"];
    assert_eq!(stdout(&ringq(&args)), stdout(&ringq(&args)));
}

#[test]
fn out_flag_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let out = ringq(&["--format", "json", "--out", path.to_str().unwrap(), "qmean", "--profile", "log2"]);
    assert!(stdout(&out).is_empty());
    let rows: Vec<Value> = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn modulus_between_set_files() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let small = write("e.txt", "# left disk\nball -0.5 0 0.1\n");
    let big = write("e2.txt", "ball -0.5 0 0.2\n");
    let f = write("f.txt", "segment 0.4 -0.2 0.4 0.2\npoint 0.6 0\n");
    let modulus = |e: &str| -> f64 {
        let out = stdout(&ringq(&["--grid", "64", "modulus", "--e", e, "--f", &f, "--domain-radius", "1.5"]));
        column(&out, "modulus")[0].parse().unwrap()
    };
    let (a, b) = (modulus(&small), modulus(&big));
    assert!(a > 0.0 && a.is_finite());
    assert!(b > a, "{a} {b}");

    let bad = write("bad.txt", "# comment\nsquare 0 0 1\n");
    let out = ringq(&["modulus", "--e", &bad, "--f", &f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn exit_codes() {
    assert_eq!(ringq(&["qmean", "--profile", "log"]).status.code(), Some(0));
    assert_eq!(ringq(&["--help"]).status.code(), Some(0));
    // usage and validation errors
    assert_eq!(ringq(&["qmean", "--bogus"]).status.code(), Some(1));
    assert_eq!(ringq(&["capacity", "--grid", "8"]).status.code(), Some(1));
    assert_eq!(ringq(&["capacity", "--ring", "1.0", "0.5"]).status.code(), Some(1));
    assert_eq!(ringq(&["qmean", "--profile", "nonsense"]).status.code(), Some(1));
    // a tolerance the solver cannot reach within its iteration budget
    let out = ringq(&["--tol", "1e-14", "--grid", "16", "capacity"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

//! One PASS/FAIL line per acceptance criterion at full resolution.
//!
//! Criteria 1-8 run in-process; criterion 9 runs `ringq report-all` twice with the same
//! seed and compares the two outputs byte for byte.

use std::process::{Command, ExitCode};
use std::time::Instant;

use ringq::report::{ReportConfig, CRITERIA};

fn line(id: usize, passed: bool, name: &str, measured: &str, threshold: &str) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {id}: {verdict} {name}: {measured} (threshold: {threshold})");
}

fn determinism(seed: u64) -> Result<(bool, String), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("report{k}.csv"));
        let status = Command::new(env!("CARGO_BIN_EXE_ringq"))
            .args(["--seed", &seed.to_string(), "--out", path.to_str().unwrap(), "report-all"])
            .status()
            .map_err(|e| e.to_string())?;
        if !status.success() {
            return Err(format!("report-all exited with {status}"));
        }
        outputs.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let same = outputs[0] == outputs[1];
    Ok((same, format!("{} bytes, identical = {same}", outputs[0].len())))
}

fn main() -> ExitCode {
    let cfg = ReportConfig::default();
    let mut failed = 0;
    for (k, f) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        match f(&cfg) {
            Ok(o) => {
                let measured = format!("{} [{:.1} s]", o.measured, start.elapsed().as_secs_f64());
                line(o.id, o.passed, o.name, &measured, &o.threshold);
                failed += usize::from(!o.passed);
            }
            Err(e) => {
                line(k + 1, false, "error", &e.to_string(), "runs without error");
                failed += 1;
            }
        }
    }
    let (passed, measured) = determinism(cfg.seed).unwrap_or_else(|e| (false, e));
    line(9, passed, "report-all determinism", &measured, "byte-identical outputs");
    failed += usize::from(!passed);

    if failed == 0 {
        println!("all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

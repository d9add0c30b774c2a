#![allow(dead_code)]

use std::io::Write;

use anls::harness::{Experiment, ExperimentConfig, Length};

/// Writes one verdict line straight to the process stdout, so it shows
/// even when the test harness captures `println!`.
pub fn verdict(criterion: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[acceptance] {tag} {criterion}: {detail}");
    let _ = out.flush();
}

/// Config rooted in a fresh temporary output directory.
pub fn config(experiment: Experiment, out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(experiment);
    cfg.out = out.to_path_buf();
    cfg
}

pub fn cells(xs: &[f64]) -> Vec<Length> {
    xs.iter().map(|&c| Length::Cells(c)).collect()
}

pub fn fmt_list(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|x| format!("{x:.4e}")).collect();
    format!("[{}]", cells.join(", "))
}

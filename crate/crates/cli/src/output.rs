//! Series tables and summary documents.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use dyson_core::diagnostics::{Check, DiagnosticsReport, InitialMapSummary, Tolerances};
use dyson_core::oscillator::{lr_phase, PtReport};
use serde::Serialize;

pub const SUMMARY_FORMAT: &str = "dyson-summary";
pub const SUMMARY_VERSION: u32 = 1;
pub const SERIES_FILE: &str = "series.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Seventeen significant digits, enough to round-trip an `f64`. Negative
/// zero prints as zero.
pub fn real(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

#[derive(Debug, Serialize)]
pub struct GridSummary {
    pub t0: f64,
    pub t1: f64,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
pub struct Summary<'a> {
    pub format: &'static str,
    pub version: u32,
    pub scenario: &'a str,
    pub passed: bool,
    pub failed: Vec<&'a str>,
    pub grid: GridSummary,
    pub dim: usize,
    pub guard: usize,
    pub substeps: usize,
    pub max_tail_mass: f64,
    pub max_condition: f64,
    pub refinement_change: Option<f64>,
    pub pt: &'a PtReport,
    pub initial_map: &'a InitialMapSummary,
    pub tolerances: &'a Tolerances,
    pub checks: &'a [Check],
}

pub fn summary<'a>(report: &'a DiagnosticsReport, dim: usize, guard: usize) -> Summary<'a> {
    Summary {
        format: SUMMARY_FORMAT,
        version: SUMMARY_VERSION,
        scenario: &report.scenario,
        passed: report.passed(),
        failed: report.failed(),
        grid: GridSummary {
            t0: report.grid.t0(),
            t1: report.grid.t1(),
            steps: report.grid.steps(),
        },
        dim,
        guard,
        substeps: report.substeps,
        max_tail_mass: report.max_tail_mass,
        max_condition: report.max_condition,
        refinement_change: report.refinement_change,
        pt: &report.pt,
        initial_map: &report.initial_map,
        tolerances: &report.tolerances,
        checks: &report.checks,
    }
}

pub fn summary_json(report: &DiagnosticsReport, dim: usize, guard: usize) -> String {
    let mut s = serde_json::to_string_pretty(&summary(report, dim, guard)).expect("summary serializes");
    s.push('\n');
    s
}

/// One row per grid point: `t`, the Lewis–Riesenfeld functions when the
/// scenario validated, then every residual series of the report.
pub fn series_csv(report: &DiagnosticsReport) -> String {
    let mut header = vec!["t".to_string()];
    let mut columns: Vec<Vec<f64>> = vec![report.grid.points()];
    if let Some(lr) = &report.lr {
        let split = |name: &str, v: &[dyson_core::C64], header: &mut Vec<String>, columns: &mut Vec<Vec<f64>>| {
            header.push(format!("{name}_re"));
            header.push(format!("{name}_im"));
            columns.push(v.iter().map(|z| z.re).collect());
            columns.push(v.iter().map(|z| z.im).collect());
        };
        split("u", &lr.u, &mut header, &mut columns);
        header.push("f".into());
        columns.push(lr.f.clone());
        split("theta", &lr.theta, &mut header, &mut columns);
        header.push("chi".into());
        columns.push(lr.chi.clone());
        for m in 0..4 {
            if let Ok(phase) = lr_phase(lr, m) {
                header.push(format!("phi{m}"));
                columns.push(phase);
            }
        }
    }
    for s in &report.series {
        header.push(s.name.clone());
        columns.push(s.samples.clone());
    }
    let mut out = header.join(",");
    out.push('\n');
    for k in 0..report.grid.len() {
        for (i, col) in columns.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&real(col[k]));
        }
        out.push('\n');
    }
    out
}

/// Writes both artifacts into `dir`, creating it if needed.
pub fn write_run(dir: &Path, report: &DiagnosticsReport, dim: usize, guard: usize) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(SERIES_FILE), series_csv(report))?;
    std::fs::write(dir.join(SUMMARY_FILE), summary_json(report, dim, guard))?;
    Ok(())
}

/// Aligned check table for the terminal.
pub fn check_table(report: &DiagnosticsReport) -> String {
    let width = report.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in &report.checks {
        let _ = writeln!(
            out,
            "{:<4} {:<width$}  {:>10.3e}  (tol {:.1e})",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
    let _ = writeln!(
        out,
        "PT {}  tail mass {:.2e}  condition {:.2e}  substeps {}",
        report.pt.phase, report.max_tail_mass, report.max_condition, report.substeps
    );
    out
}

//! Benchmark artifacts: per-replication CSV, JSON summary and curve CSV.

use std::io::Write;
use std::path::Path;

use super::{BenchmarkReport, RegressionFit};
use crate::error::{Error, Result};
use crate::models::io::create;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const REPORT_COLUMNS: [&str; 14] = [
    "replication",
    "rmse",
    "coverage",
    "converged",
    "iterations",
    "burn_in_iterations",
    "ess",
    "restarts",
    "acc_locations",
    "acc_jumps",
    "acc_total_mass",
    "mean_sigma2",
    "function",
    "error",
];

/// One row per replication. With `header` false rows can be appended to a
/// file holding several functions.
pub fn write_report_rows(w: &mut impl Write, report: &BenchmarkReport, header: bool) -> std::io::Result<()> {
    if header {
        writeln!(w, "{}", REPORT_COLUMNS.join(","))?;
    }
    for r in &report.replications {
        let c = r.convergence.as_ref();
        let err = r
            .error
            .as_deref()
            .unwrap_or("")
            .replace(['"', '\n', ','], " ");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.index,
            opt(r.rmse),
            opt(r.coverage),
            r.rmse.is_some(),
            c.map(|c| c.iterations.to_string()).unwrap_or_default(),
            c.map(|c| c.burn_in_iterations.to_string()).unwrap_or_default(),
            opt(c.map(|c| c.ess)),
            c.map(|c| c.restarts.to_string()).unwrap_or_default(),
            r.acc_locations,
            r.acc_jumps,
            r.acc_total_mass,
            opt(r.mean_sigma2),
            report.function,
            err
        )?;
    }
    Ok(())
}

pub fn write_report_csv(path: &Path, reports: &[BenchmarkReport]) -> Result<()> {
    let mut w = create(path)?;
    let res = (|| -> std::io::Result<()> {
        for (i, r) in reports.iter().enumerate() {
            write_report_rows(&mut w, r, i == 0)?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// JSON summary; the wall-clock entry is dropped unless `timing` is set so
/// that repeated runs produce identical files.
pub fn write_report_json(path: &Path, reports: &[BenchmarkReport], timing: bool) -> Result<()> {
    let reports: Vec<BenchmarkReport> = reports
        .iter()
        .cloned()
        .map(|mut r| {
            if !timing {
                r.wall_clock_secs = None;
            }
            r
        })
        .collect();
    let text = serde_json::to_string_pretty(&reports)
        .map_err(|e| Error::Numeric(format!("cannot serialise report: {e}")))?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.write_all(b"\n"))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Columns `x,mean,lower,upper`, plus `truth` when given.
pub fn write_curve_csv(path: &Path, fit: &RegressionFit, truth: Option<&[f64]>) -> Result<()> {
    if let Some(t) = truth {
        if t.len() != fit.x.len() {
            return Err(Error::param("truth length differs from the design"));
        }
    }
    let mut w = create(path)?;
    let b = &fit.bands;
    let res = (|| -> std::io::Result<()> {
        if truth.is_some() {
            writeln!(w, "x,mean,lower,upper,truth")?;
        } else {
            writeln!(w, "x,mean,lower,upper")?;
        }
        for i in 0..fit.x.len() {
            write!(w, "{},{},{},{}", fit.x[i], b.mean[i], b.lower[i], b.upper[i])?;
            match truth {
                Some(t) => writeln!(w, ",{}", t[i])?,
                None => writeln!(w)?,
            }
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

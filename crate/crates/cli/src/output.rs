//! Artifact writers. Every file goes through a temp-file-and-rename.

use std::fmt::Write as _;
use std::path::Path;

use echo_core::observables::{DecayTrace, RateFit};
use echo_core::phase_space::snapshot::write_atomic;
use serde::Serialize;

use crate::error::CliError;

pub const TRACE_HEADER: &str = "t,m_bar,m_stderr,purity,sigma_bar,sigma_echo";
pub const SCAN_HEADER: &str = "d,rate_lyapunov,rate_fgr,rate_err,lambda_ref";

fn cell(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        write!(out, "{v}").unwrap();
    }
}

/// Trace as CSV; columns that were not computed are left empty.
pub fn trace_csv(trace: &DecayTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    let col = |c: &Option<Vec<f64>>, i: usize| c.as_ref().map(|v| v[i]);
    for i in 0..trace.len() {
        write!(out, "{},{},{},", trace.times[i], trace.m_bar[i], trace.m_stderr[i]).unwrap();
        cell(&mut out, col(&trace.purity, i));
        out.push(',');
        cell(&mut out, col(&trace.sigma_bar, i));
        out.push(',');
        cell(&mut out, col(&trace.sigma_echo, i));
        out.push('\n');
    }
    out
}

/// Parses a trace CSV back into `(header, rows)` with empty cells as `None`.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<Option<f64>>>), CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Io("empty csv".into()))?;
    let names: Vec<String> = header.split(',').map(str::to_owned).collect();
    let mut rows = Vec::new();
    for line in lines {
        let row = line
            .split(',')
            .map(|c| if c.is_empty() { Ok(None) } else { c.parse::<f64>().map(Some) })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Io(format!("bad csv cell: {e}")))?;
        rows.push(row);
    }
    Ok((names, rows))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(write_atomic(path, text.as_bytes())?)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_trace(dir: &Path, trace: &DecayTrace) -> Result<(), CliError> {
    write_text(&dir.join("trace.csv"), &trace_csv(trace))
}

pub fn write_ratefit(dir: &Path, fit: &RateFit) -> Result<(), CliError> {
    write_json(&dir.join("ratefit.json"), fit)
}

/// One row of `scan.csv`; `None` rates mark a failed D value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub d: f64,
    pub rate_lyapunov: Option<f64>,
    pub rate_fgr: Option<f64>,
    pub rate_err: Option<f64>,
}

pub fn scan_csv(rows: &[ScanRow], lambda_ref: Option<f64>) -> String {
    let mut out = String::from(SCAN_HEADER);
    out.push('\n');
    for r in rows {
        write!(out, "{},", r.d).unwrap();
        cell(&mut out, r.rate_lyapunov);
        out.push(',');
        cell(&mut out, r.rate_fgr);
        out.push(',');
        cell(&mut out, r.rate_err);
        out.push(',');
        cell(&mut out, lambda_ref);
        out.push('\n');
    }
    out
}

/// File-name friendly time stamp.
pub fn time_tag(t: f64) -> String {
    format!("{t:.4}")
}

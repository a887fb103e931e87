//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stiffsense_core::{
    AveragingWindow, ModelParams, ObjectiveResult, Record, Regime, RunningPoint, SimConfig,
    Status, Trajectory,
};

use crate::CliError;

pub const TRAJECTORY_HEADER: &str = "step,time,x,xd_alpha,xd_beta";

/// Shortest string that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn status_label(s: &Status) -> String {
    match s {
        Status::Completed => "completed".into(),
        Status::PrimalOverflowAt(k) => format!("primal_overflow_at:{k}"),
        Status::TangentOverflowAt(k) => format!("tangent_overflow_at:{k}"),
        Status::NewtonFailedAt(k) => format!("newton_failed_at:{k}"),
    }
}

pub fn write_csv<I>(path: &Path, header: &str, rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = String>,
{
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for row in rows {
        writeln!(w, "{row}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn trajectory_row(r: &Record) -> String {
    format!(
        "{},{},{},{},{}",
        r.step,
        fmt_f64(r.time),
        fmt_f64(r.x),
        fmt_f64(r.d_alpha),
        fmt_f64(r.d_beta)
    )
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    write_csv(path, TRAJECTORY_HEADER, traj.records.iter().map(trajectory_row))
}

/// Running-average history with physical time alongside the step.
pub fn running_rows(series: &[RunningPoint], dt: f64, with_derivative: bool) -> Vec<String> {
    series
        .iter()
        .map(|p| {
            let head = format!("{},{},{}", p.step, fmt_f64(p.step as f64 * dt), fmt_f64(p.j));
            if with_derivative {
                format!("{head},{}", fmt_f64(p.dj_dalpha))
            } else {
                head
            }
        })
        .collect()
}

/// Summary of one CLI run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub params: ModelParams,
    pub config: SimConfig,
    pub window: AveragingWindow,
    pub status: Status,
    pub regime: Option<Regime>,
    /// Present when the trajectory covers the averaging window.
    pub objective: Option<ObjectiveResult>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

//! Time-averaged objective `J = x_ave` and its tangent derivatives.
//!
//! The sum runs inclusively over `[start_step, end_step]` while the divisor
//! is `end_step - start_step`, so a constant trajectory `c` averages to
//! `c * (n + 1) / n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Record, Trajectory};
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AveragingWindow {
    pub start_step: u64,
    pub end_step: u64,
}

impl Default for AveragingWindow {
    fn default() -> Self {
        Self { start_step: 2000, end_step: 100_000 }
    }
}

impl AveragingWindow {
    pub fn new(start_step: u64, end_step: u64) -> Result<Self> {
        if start_step >= end_step {
            return Err(Error::InvalidWindow {
                start: start_step,
                end: end_step,
                reason: "start must be below end".into(),
            });
        }
        Ok(Self { start_step, end_step })
    }

    pub fn divisor(&self) -> f64 {
        (self.end_step - self.start_step) as f64
    }

    /// Also checks that the window fits inside a run of `n_steps`.
    pub fn validate_for(&self, n_steps: u64) -> Result<()> {
        Self::new(self.start_step, self.end_step)?;
        if self.end_step > n_steps {
            return Err(Error::InvalidWindow {
                start: self.start_step,
                end: self.end_step,
                reason: format!("end exceeds the run length {n_steps}"),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveResult {
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "dJ_dalpha")]
    pub dj_dalpha: f64,
    #[serde(rename = "dJ_dbeta")]
    pub dj_dbeta: f64,
    /// False when the tangent overflowed at or before `end_step`; the
    /// derivatives were then summed from frozen values.
    pub valid: bool,
}

/// One point of the running-average convergence history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningPoint {
    pub step: u64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "dJ_dalpha")]
    pub dj_dalpha: f64,
    #[serde(rename = "dJ_dbeta")]
    pub dj_dbeta: f64,
}

#[derive(Default)]
struct Accumulator {
    x: NeumaierSum,
    d_alpha: NeumaierSum,
    d_beta: NeumaierSum,
}

impl Accumulator {
    fn push(&mut self, r: &Record) {
        self.x.add(r.x);
        self.d_alpha.add(r.d_alpha);
        self.d_beta.add(r.d_beta);
    }

    fn averages(&self, divisor: f64) -> (f64, f64, f64) {
        (
            self.x.value() / divisor,
            self.d_alpha.value() / divisor,
            self.d_beta.value() / divisor,
        )
    }
}

fn tangents_valid(traj: &Trajectory, w: &AveragingWindow) -> bool {
    traj.tangent_overflow_step.is_none_or(|k| k > w.end_step)
}

/// Averages the state and tangent columns over the window in ascending step order.
pub fn time_average(traj: &Trajectory, w: &AveragingWindow) -> Result<ObjectiveResult> {
    AveragingWindow::new(w.start_step, w.end_step)?;
    let records = traj.window(w.start_step, w.end_step)?;
    let mut acc = Accumulator::default();
    records.iter().for_each(|r| acc.push(r));
    let (j, dj_dalpha, dj_dbeta) = acc.averages(w.divisor());
    Ok(ObjectiveResult { j, dj_dalpha, dj_dbeta, valid: tangents_valid(traj, w) })
}

/// Partial averages over `[start_step, n]` with divisor `n - start_step`, for
/// every `n` in `(start_step, end_step]`. The last point equals
/// [`time_average`] bit for bit.
pub fn running_average_series(traj: &Trajectory, w: &AveragingWindow) -> Result<Vec<RunningPoint>> {
    AveragingWindow::new(w.start_step, w.end_step)?;
    let records = traj.window(w.start_step, w.end_step)?;
    let mut acc = Accumulator::default();
    acc.push(&records[0]);
    let series = records[1..]
        .iter()
        .map(|r| {
            acc.push(r);
            let (j, dj_dalpha, dj_dbeta) = acc.averages((r.step - w.start_step) as f64);
            RunningPoint { step: r.step, j, dj_dalpha, dj_dbeta }
        })
        .collect();
    Ok(series)
}

//! Four-way classification of a discrete trajectory and the Lyapunov
//! exponent estimate used as its chaos gate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{
    implicit_map_derivative, map_derivative, Integrator, Record, SimConfig, Status, Trajectory,
};
use crate::model::ModelParams;

/// `|g'|` below this is treated as an exact zero and left out of the average.
const MIN_MULTIPLIER: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Monotone,
    Oscillating,
    Chaotic,
    Divergent,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Monotone => "monotone",
            Regime::Oscillating => "oscillating",
            Regime::Chaotic => "chaotic",
            Regime::Divergent => "divergent",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds of the decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSettings {
    /// Per-step Lyapunov exponent above which the orbit counts as chaotic.
    pub lyapunov_tol: f64,
    /// Fraction of sign flips in successive differences above which the orbit oscillates.
    pub sign_flip_threshold: f64,
    /// Trailing fraction of the completed steps used as the diagnostic window.
    pub window_fraction: f64,
    /// Differences smaller than this count as zero when looking for flips.
    pub dead_band: f64,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            lyapunov_tol: 0.01,
            sign_flip_threshold: 0.5,
            window_fraction: 0.25,
            dead_band: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Per-step exponent; `None` for divergent runs. May be `-inf` for a
    /// superattracting orbit (serialized as `null` in JSON).
    pub lyapunov: Option<f64>,
    pub window: (u64, u64),
    pub sign_flip_fraction: f64,
    /// Peak deviation from the window mean over its last tenth divided by
    /// the same over its first tenth.
    pub envelope_ratio: f64,
}

/// Mean of `ln |1 + dt f'(x_n)|` over the recorded steps in `window` (inclusive).
///
/// Terms with a vanishing multiplier are skipped. If the window holds samples
/// but all of them were skipped the orbit is superattracting and the result
/// is `-inf`.
pub fn estimate_lyapunov(
    traj: &Trajectory,
    p: &ModelParams,
    dt: f64,
    window: (u64, u64),
) -> Result<f64> {
    lyapunov_by(in_window(traj, window), window, |r| map_derivative(r.x, p, dt))
}

fn lyapunov_by<'a>(
    records: impl Iterator<Item = &'a Record>,
    window: (u64, u64),
    multiplier: impl Fn(&Record) -> f64,
) -> Result<f64> {
    let mut samples = 0usize;
    let mut used = 0usize;
    let mut acc = 0.0;
    for r in records {
        samples += 1;
        let g = multiplier(r).abs();
        if g >= MIN_MULTIPLIER {
            acc += g.ln();
            used += 1;
        }
    }
    match (samples, used) {
        (0, _) => Err(Error::EmptyWindow { start: window.0, end: window.1 }),
        (_, 0) => Ok(f64::NEG_INFINITY),
        _ => Ok(acc / used as f64),
    }
}

fn in_window(traj: &Trajectory, window: (u64, u64)) -> impl Iterator<Item = &Record> {
    let lo = traj.records.partition_point(|r| r.step < window.0);
    traj.records[lo..].iter().take_while(move |r| r.step <= window.1)
}

pub fn classify(traj: &Trajectory, p: &ModelParams, cfg: &SimConfig) -> RegimeReport {
    classify_with(traj, p, cfg, &ClassifierSettings::default())
}

/// Divergent, then Chaotic, then Oscillating, then Monotone; first match wins.
pub fn classify_with(
    traj: &Trajectory,
    p: &ModelParams,
    cfg: &SimConfig,
    settings: &ClassifierSettings,
) -> RegimeReport {
    let last = traj.last_step();
    let span = (last as f64 * settings.window_fraction).floor() as u64;
    let window = (last - span, last);
    let xs: Vec<f64> = in_window(traj, window).map(|r| r.x).collect();

    let divergent = matches!(traj.status, Status::PrimalOverflowAt(_))
        || traj.records.iter().any(|r| !r.x.is_finite());
    let sign_flip_fraction = sign_flip_fraction(&xs, settings.dead_band);
    let envelope_ratio = envelope_ratio(&xs);

    let lyapunov = if divergent {
        None
    } else {
        let est = match cfg.integrator {
            Integrator::ExplicitEuler => estimate_lyapunov(traj, p, cfg.dt, window),
            Integrator::ImplicitEuler => lyapunov_by(in_window(traj, window), window, |r| {
                implicit_map_derivative(r.x, p, cfg.dt)
            }),
        };
        est.ok()
    };

    let regime = if divergent {
        Regime::Divergent
    } else if lyapunov.is_some_and(|l| l > settings.lyapunov_tol) {
        Regime::Chaotic
    } else if sign_flip_fraction > settings.sign_flip_threshold {
        Regime::Oscillating
    } else {
        Regime::Monotone
    };

    RegimeReport { regime, lyapunov, window, sign_flip_fraction, envelope_ratio }
}

/// Fraction of adjacent difference pairs that change sign, ignoring
/// differences inside the dead band.
fn sign_flip_fraction(xs: &[f64], dead_band: f64) -> f64 {
    let diffs: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.len() < 2 {
        return 0.0;
    }
    let flips = diffs
        .windows(2)
        .filter(|d| {
            d[0].abs() > dead_band && d[1].abs() > dead_band && (d[0] > 0.0) != (d[1] > 0.0)
        })
        .count();
    flips as f64 / (diffs.len() - 1) as f64
}

fn envelope_ratio(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 1.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let tenth = (xs.len() / 10).max(1);
    let peak = |s: &[f64]| s.iter().fold(0.0f64, |m, &x| m.max((x - mean).abs()));
    let early = peak(&xs[..tenth]);
    let late = peak(&xs[xs.len() - tenth..]);
    match (early == 0.0, late == 0.0) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => late / early,
    }
}

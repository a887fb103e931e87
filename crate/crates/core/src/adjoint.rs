//! Discrete adjoint of explicit Euler followed by a weighted sum of states.
//!
//! For `J = sum_n w_n x_n` with `x_{n+1} = x_n + dt f(x_n)`, the costates obey
//!
//! ```text
//! lambda_N = w_N
//! lambda_n = w_n + lambda_{n+1} (1 + dt f_x(x_n))
//! dJ/dp    = sum_{n<N} lambda_{n+1} dt f_p(x_n)
//! ```
//!
//! which is the transpose of the tangent recursion and yields the same
//! gradient in one reverse sweep over the stored states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{Integrator, SimConfig, Trajectory};
use crate::model::{rhs_partials, ModelParams};
use crate::objective::AveragingWindow;
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointResult {
    #[serde(rename = "dJ_dalpha")]
    pub dj_dalpha: f64,
    #[serde(rename = "dJ_dbeta")]
    pub dj_dbeta: f64,
    /// Largest `|lambda_n|` seen during the sweep; may be infinite in chaotic runs.
    pub max_costate_magnitude: f64,
}

/// Gradient of the time-averaged objective over `w`.
pub fn adjoint_gradient(
    traj: &Trajectory,
    p: &ModelParams,
    cfg: &SimConfig,
    w: &AveragingWindow,
) -> Result<AdjointResult> {
    w.validate_for(cfg.n_steps)?;
    let inv = 1.0 / w.divisor();
    let weight = |n: u64| {
        if n >= w.start_step && n <= w.end_step {
            inv
        } else {
            0.0
        }
    };
    adjoint_with_weights(traj, p, cfg, weight)
}

/// Reverse sweep for an arbitrary per-step weighting `J = sum_n weight(n) x_n`.
pub fn adjoint_with_weights(
    traj: &Trajectory,
    p: &ModelParams,
    cfg: &SimConfig,
    weight: impl Fn(u64) -> f64,
) -> Result<AdjointResult> {
    let xs = full_states(traj, cfg)?;
    let n_last = xs.len() - 1;
    let dt = cfg.dt;

    let mut lambda = weight(n_last as u64);
    let mut max_mag = lambda.abs();
    let mut g_alpha = NeumaierSum::default();
    let mut g_beta = NeumaierSum::default();
    for n in (0..n_last).rev() {
        let d = rhs_partials(xs[n], p);
        g_alpha.add(lambda * dt * d.df_dalpha);
        g_beta.add(lambda * dt * d.df_dbeta);
        lambda = weight(n as u64) + lambda * (1.0 + dt * d.df_dx);
        max_mag = max_mag.max(lambda.abs());
    }

    Ok(AdjointResult {
        dj_dalpha: g_alpha.value(),
        dj_dbeta: g_beta.value(),
        max_costate_magnitude: max_mag,
    })
}

/// The state column `x_0..=x_N`, checking that every step was recorded.
fn full_states(traj: &Trajectory, cfg: &SimConfig) -> Result<Vec<f64>> {
    let incomplete = |msg: String| Err(Error::TrajectoryIncomplete(msg));
    if cfg.integrator != Integrator::ExplicitEuler {
        return incomplete("the adjoint is defined for explicit Euler only".into());
    }
    if !traj.status.primal_complete() {
        return incomplete(format!("primal did not complete: {:?}", traj.status));
    }
    if traj.records.len() as u64 != cfg.n_steps + 1 {
        return incomplete(format!(
            "expected {} records (record_stride = 1), found {}",
            cfg.n_steps + 1,
            traj.records.len()
        ));
    }
    if let Some(r) = traj.records.iter().enumerate().find(|(i, r)| r.step != *i as u64) {
        return incomplete(format!("record {} holds step {}", r.0, r.1.step));
    }
    Ok(traj.records.iter().map(|r| r.x).collect())
}

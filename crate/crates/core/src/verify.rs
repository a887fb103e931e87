//! Central finite-difference oracle for `dJ/dalpha` and `dJ/dbeta`, and a
//! side-by-side comparison of tangent, adjoint and finite-difference gradients.
//!
//! The oracle runs its own primal-only time stepping and never touches
//! tangent columns, so it stays independent of the paths it checks.

use serde::{Deserialize, Serialize};

use crate::adjoint::adjoint_gradient;
use crate::error::{Error, Result};
use crate::integrate::{explicit_euler_step, implicit_euler_step, simulate, Integrator, SimConfig};
use crate::model::ModelParams;
use crate::objective::{time_average, AveragingWindow};
use crate::sum::NeumaierSum;

pub const DEFAULT_H_REL: f64 = 1e-6;

/// Central-difference gradient; a component is `None` when either perturbed
/// run overflowed or failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdGradient {
    pub d_alpha: Option<f64>,
    pub d_beta: Option<f64>,
    /// Absolute steps `(h_alpha, h_beta)`.
    pub h: (f64, f64),
}

/// `|a - b| / max(|a|, |b|, 1e-300)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// `(J(q + h) - J(q - h)) / 2h` per parameter with `h = h_rel * max(1, |q|)`.
pub fn fd_gradient(
    p: &ModelParams,
    cfg: &SimConfig,
    w: &AveragingWindow,
    h_rel: f64,
) -> Result<FdGradient> {
    if !(h_rel.is_finite() && h_rel > 0.0) {
        return Err(Error::InvalidConfig(format!("h_rel must be finite and > 0, got {h_rel}")));
    }
    p.validate()?;
    cfg.validate()?;
    w.validate_for(cfg.n_steps)?;

    let h_alpha = h_rel * p.alpha.abs().max(1.0);
    let h_beta = h_rel * p.beta.abs().max(1.0);
    let central = |plus: ModelParams, minus: ModelParams, h: f64| {
        let jp = primal_objective(&plus, cfg, w)?;
        let jm = primal_objective(&minus, cfg, w)?;
        Some((jp - jm) / (2.0 * h))
    };
    let d_alpha = central(
        ModelParams { alpha: p.alpha + h_alpha, ..*p },
        ModelParams { alpha: p.alpha - h_alpha, ..*p },
        h_alpha,
    );
    let d_beta = central(
        ModelParams { beta: p.beta + h_beta, ..*p },
        ModelParams { beta: p.beta - h_beta, ..*p },
        h_beta,
    );
    Ok(FdGradient { d_alpha, d_beta, h: (h_alpha, h_beta) })
}

/// Time stepping without tangents, accumulating J on the fly in the same
/// order and arithmetic as [`time_average`].
fn primal_objective(p: &ModelParams, cfg: &SimConfig, w: &AveragingWindow) -> Option<f64> {
    let mut x = p.sigma;
    let mut acc = NeumaierSum::default();
    for step in 0..=w.end_step {
        if step > 0 {
            x = match cfg.integrator {
                Integrator::ExplicitEuler => explicit_euler_step(x, p, cfg.dt),
                Integrator::ImplicitEuler => implicit_euler_step(x, p, cfg).ok()?.0,
            };
            if !x.is_finite() || x.abs() > cfg.overflow_guard {
                return None;
            }
        }
        if step >= w.start_step {
            acc.add(x);
        }
    }
    Some(acc.value() / w.divisor())
}

/// Tangent, adjoint and finite-difference gradients on identical inputs.
///
/// Undefined components are `None`; the flags record why.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientComparison {
    pub tangent: (Option<f64>, Option<f64>),
    pub adjoint: (Option<f64>, Option<f64>),
    pub finite_difference: (Option<f64>, Option<f64>),
    pub rel_err_tangent_fd: (Option<f64>, Option<f64>),
    pub rel_err_tangent_adjoint: (Option<f64>, Option<f64>),
    pub h_used: (f64, f64),
    pub tangent_overflow: bool,
    pub primal_overflow: bool,
    pub fd_undefined: (bool, bool),
    pub adjoint_undefined: bool,
}

impl GradientComparison {
    /// True when every requested comparison is defined and within its bound.
    pub fn within(&self, tol_fd: Option<f64>, tol_adjoint: Option<f64>) -> bool {
        let ok = |pair: (Option<f64>, Option<f64>), tol: f64| {
            [pair.0, pair.1].iter().all(|e| e.is_some_and(|e| e <= tol))
        };
        tol_fd.is_none_or(|t| ok(self.rel_err_tangent_fd, t))
            && tol_adjoint.is_none_or(|t| ok(self.rel_err_tangent_adjoint, t))
    }
}

pub fn compare_gradients(
    p: &ModelParams,
    cfg: &SimConfig,
    w: &AveragingWindow,
) -> Result<GradientComparison> {
    compare_gradients_with(p, cfg, w, DEFAULT_H_REL)
}

pub fn compare_gradients_with(
    p: &ModelParams,
    cfg: &SimConfig,
    w: &AveragingWindow,
    h_rel: f64,
) -> Result<GradientComparison> {
    let finite = |v: f64| Some(v).filter(|v| v.is_finite());

    let traj = simulate(p, cfg)?;
    w.validate_for(cfg.n_steps)?;
    let primal_overflow = !traj.status.primal_complete();
    let objective = time_average(&traj, w).ok();
    let tangent_overflow = objective.is_some_and(|o| !o.valid)
        || (traj.tangent_overflow_step.is_some_and(|k| k <= w.end_step));
    let tangent = match objective {
        Some(o) if o.valid => (finite(o.dj_dalpha), finite(o.dj_dbeta)),
        _ => (None, None),
    };

    let adj = adjoint_gradient(&traj, p, cfg, w).ok();
    let adjoint = adj.map_or((None, None), |a| (finite(a.dj_dalpha), finite(a.dj_dbeta)));
    let adjoint_undefined = adjoint.0.is_none() || adjoint.1.is_none();

    let fd = fd_gradient(p, cfg, w, h_rel)?;
    let finite_difference = (fd.d_alpha.and_then(finite), fd.d_beta.and_then(finite));

    let pair_err = |a: (Option<f64>, Option<f64>), b: (Option<f64>, Option<f64>)| {
        let e = |x: Option<f64>, y: Option<f64>| Some(rel_err(x?, y?));
        (e(a.0, b.0), e(a.1, b.1))
    };

    Ok(GradientComparison {
        tangent,
        adjoint,
        finite_difference,
        rel_err_tangent_fd: pair_err(tangent, finite_difference),
        rel_err_tangent_adjoint: pair_err(tangent, adjoint),
        h_used: fd.h,
        tangent_overflow,
        primal_overflow,
        fd_undefined: (finite_difference.0.is_none(), finite_difference.1.is_none()),
        adjoint_undefined,
    })
}

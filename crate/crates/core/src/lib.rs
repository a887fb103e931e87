//! Sensitivity analysis of the stiff flame-propagation ODE
//! `x' = alpha x^2 - beta x^3` under explicit (and implicit) Euler.
//!
//! The crate propagates exact forward-mode tangents with respect to
//! `alpha` and `beta`, computes the same gradient of the time-averaged
//! objective through a discrete adjoint, checks both against central
//! finite differences, and classifies the discrete trajectory as
//! monotone, oscillating, chaotic or divergent.
//!
//! ```
//! use stiffsense_core::{simulate, time_average, AveragingWindow, ModelParams, SimConfig};
//!
//! let params = ModelParams::default();
//! let traj = simulate(&params, &SimConfig::explicit(1.0)).unwrap();
//! let obj = time_average(&traj, &AveragingWindow::default()).unwrap();
//! assert!((obj.j - 0.918).abs() < 1e-3);
//! ```

pub mod adjoint;
pub mod error;
pub mod integrate;
pub mod model;
pub mod objective;
pub mod regime;
mod sum;
pub mod tangent;
pub mod verify;

pub use adjoint::{adjoint_gradient, adjoint_with_weights, AdjointResult};
pub use error::{Error, Result};
pub use integrate::{
    explicit_euler_step, explicit_euler_tangent_step, implicit_euler_step,
    implicit_euler_tangent_step, implicit_map_derivative, map_derivative, simulate, Integrator,
    Record, SimConfig, Status, Trajectory,
};
pub use model::{rhs, rhs_partials, rhs_tangent, ModelParams, Partials};
pub use objective::{running_average_series, time_average, AveragingWindow, ObjectiveResult, RunningPoint};
pub use regime::{classify, classify_with, estimate_lyapunov, ClassifierSettings, Regime, RegimeReport};
pub use tangent::TangentScalar;
pub use verify::{
    compare_gradients, compare_gradients_with, fd_gradient, rel_err, FdGradient, GradientComparison,
    DEFAULT_H_REL,
};

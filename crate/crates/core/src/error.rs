use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("invalid averaging window [{start}, {end}]: {reason}")]
    InvalidWindow { start: u64, end: u64, reason: String },

    /// The trajectory has no record for `step` although it lies in the window.
    #[error("trajectory does not cover step {step} of the averaging window")]
    WindowNotCovered { step: u64 },

    #[error("Newton iteration failed from x = {x} after {iters} iterations")]
    NewtonFailed { x: f64, iters: u32 },

    #[error("trajectory unusable for the adjoint sweep: {0}")]
    TrajectoryIncomplete(String),

    #[error("no samples in Lyapunov window [{start}, {end}]")]
    EmptyWindow { start: u64, end: u64 },
}

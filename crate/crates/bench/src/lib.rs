//! Shared fixtures for the criterion benches.

use stiffsense_core::{simulate, ModelParams, SimConfig, Trajectory};

/// The canned step sizes for the monotone, oscillating and chaotic cases.
pub const CASE_DTS: [f64; 3] = [1.0, 2.0, 2.8];

pub fn full_run(cfg: &SimConfig) -> Trajectory {
    simulate(&ModelParams::default(), cfg).expect("default inputs are valid")
}

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use stiffsense_core::{AveragingWindow, Integrator, ModelParams, SimConfig};

use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "stiffsense",
    version,
    about = "Tangent, adjoint and finite-difference sensitivities of the explicit-Euler flame model"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one simulation; write trajectory.csv and manifest.json.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "stiffsense-out")]
        out_dir: PathBuf,
    },
    /// Run one simulation and print the regime report as JSON.
    Classify {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a grid of step sizes and write one summary row per dt.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, allow_negative_numbers = true)]
        dt_min: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        dt_max: Option<f64>,
        #[arg(long)]
        dt_count: Option<usize>,
        /// Explicit comma-separated grid, instead of min/max/count.
        #[arg(long, value_delimiter = ',', conflicts_with_all = ["dt_min", "dt_max", "dt_count"])]
        dt_list: Option<Vec<f64>>,
        #[arg(long, default_value = "sweep.csv")]
        output: PathBuf,
    },
    /// Compare tangent, adjoint and finite-difference gradients.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Bound on the tangent/finite-difference relative error.
        #[arg(long)]
        tol_fd: Option<f64>,
        /// Bound on the tangent/adjoint relative error.
        #[arg(long)]
        tol_adjoint: Option<f64>,
        #[arg(long, default_value_t = stiffsense_core::DEFAULT_H_REL)]
        h_rel: f64,
    },
    /// Write figure data for one of the four canned cases.
    Reproduce {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
        case: u8,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorArg {
    Explicit,
    Implicit,
}

impl From<IntegratorArg> for Integrator {
    fn from(a: IntegratorArg) -> Self {
        match a {
            IntegratorArg::Explicit => Integrator::ExplicitEuler,
            IntegratorArg::Implicit => Integrator::ImplicitEuler,
        }
    }
}

/// Model, discretization and window settings shared by the run-based commands.
#[derive(Args, Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunArgs {
    /// JSON file with any of these settings; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, value_enum)]
    pub integrator: Option<IntegratorArg>,
    #[arg(long, allow_negative_numbers = true)]
    pub overflow_guard: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub newton_tol: Option<f64>,
    #[arg(long)]
    pub newton_max_iter: Option<u32>,
    #[arg(long)]
    pub record_stride: Option<u64>,
    #[arg(long)]
    pub window_start: Option<u64>,
    /// Defaults to the number of steps.
    #[arg(long)]
    pub window_end: Option<u64>,
}

/// Fully validated inputs for a run.
#[derive(Debug, Clone, Copy)]
pub struct Resolved {
    pub params: ModelParams,
    pub config: SimConfig,
    pub window: AveragingWindow,
}

macro_rules! merge {
    ($dst:ident, $src:ident; $($field:ident),*) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field; } )*
    };
}

impl RunArgs {
    fn with_file(&self) -> Result<RunArgs, CliError> {
        let mut merged = self.clone();
        if let Some(path) = &self.config {
            let file = load_config(path)?;
            merge!(merged, file; alpha, beta, sigma, dt, steps, integrator, overflow_guard,
                newton_tol, newton_max_iter, record_stride, window_start, window_end);
        }
        Ok(merged)
    }

    /// Applies flags over the config file over the defaults, then validates.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let a = self.with_file()?;
        let dp = ModelParams::default();
        let dc = SimConfig::default();
        let params = ModelParams::new(
            a.alpha.unwrap_or(dp.alpha),
            a.beta.unwrap_or(dp.beta),
            a.sigma.unwrap_or(dp.sigma),
        )?;
        let config = SimConfig {
            dt: a.dt.unwrap_or(dc.dt),
            n_steps: a.steps.unwrap_or(dc.n_steps),
            integrator: a.integrator.map(Into::into).unwrap_or(dc.integrator),
            overflow_guard: a.overflow_guard.unwrap_or(dc.overflow_guard),
            newton_tol: a.newton_tol.unwrap_or(dc.newton_tol),
            newton_max_iter: a.newton_max_iter.unwrap_or(dc.newton_max_iter),
            record_stride: a.record_stride.unwrap_or(dc.record_stride),
        };
        config.validate()?;
        let window = AveragingWindow {
            start_step: a.window_start.unwrap_or(AveragingWindow::default().start_step),
            end_step: a.window_end.unwrap_or(config.n_steps),
        };
        window.validate_for(config.n_steps)?;
        Ok(Resolved { params, config, window })
    }
}

fn load_config(path: &Path) -> Result<RunArgs, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("bad config {}: {e}", path.display())))
}

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use stiffsense_core::{
    classify, compare_gradients_with, running_average_series, simulate, time_average,
    AveragingWindow, ModelParams, Regime, SimConfig, Status, Trajectory,
};

use crate::args::RunArgs;
use crate::output::{
    fmt_f64, fmt_opt, running_rows, status_label, write_csv, write_trajectory, RunManifest,
};
use crate::{CliError, ExitStatus};

const THREADS_ENV: &str = "STIFFSENSE_THREADS";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    use std::io::Write;
    let json = serde_json::to_string_pretty(value).expect("report serializes");
    match writeln!(std::io::stdout().lock(), "{json}") {
        // a closed pipe (e.g. `| head`) is not an error for a report
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(format!("stdout: {e}"))),
        _ => Ok(()),
    }
}

pub fn simulate_cmd(run: &RunArgs, out_dir: &Path) -> Result<ExitStatus, CliError> {
    let r = run.resolve()?;
    let traj = simulate(&r.params, &r.config)?;
    create_dir(out_dir)?;

    let csv = out_dir.join("trajectory.csv");
    write_trajectory(&csv, &traj)?;
    let manifest = RunManifest {
        params: r.params,
        config: r.config,
        window: r.window,
        status: traj.status,
        regime: None,
        objective: time_average(&traj, &r.window).ok(),
        outputs: vec![csv],
    };
    manifest.write(&out_dir.join("manifest.json"))?;

    Ok(if traj.status.is_completed() { ExitStatus::Success } else { ExitStatus::Overflow })
}

pub fn classify_cmd(run: &RunArgs) -> Result<ExitStatus, CliError> {
    let r = run.resolve()?;
    let traj = simulate(&r.params, &r.config)?;
    print_json(&classify(&traj, &r.params, &r.config))?;
    Ok(ExitStatus::Success)
}

/// Ascending grid from either an explicit list or `count` evenly spaced points.
pub fn sweep_grid(
    min: Option<f64>,
    max: Option<f64>,
    count: Option<usize>,
    list: Option<&[f64]>,
) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| Err(CliError::Invalid(m.to_string()));
    let mut grid = match (list, min, max, count) {
        (Some(list), ..) => list.to_vec(),
        (None, Some(lo), Some(hi), Some(n)) => {
            if !(lo < hi) {
                return bad("--dt-min must be below --dt-max");
            }
            if n < 2 {
                return bad("--dt-count must be at least 2");
            }
            (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
        }
        _ => return bad("give --dt-min, --dt-max and --dt-count, or --dt-list"),
    };
    if grid.is_empty() || grid.iter().any(|dt| !(dt.is_finite() && *dt > 0.0)) {
        return bad("every dt must be finite and > 0");
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

#[derive(Debug, Clone)]
struct SweepRow {
    dt: f64,
    regime: Regime,
    lyapunov: Option<f64>,
    j: Option<f64>,
    dj: (Option<f64>, Option<f64>),
    status: Status,
}

fn sweep_point(params: &ModelParams, base: &SimConfig, window: &AveragingWindow, dt: f64) -> Result<SweepRow, CliError> {
    let cfg = SimConfig { dt, record_stride: 1, ..*base };
    let traj = simulate(params, &cfg)?;
    let report = classify(&traj, params, &cfg);
    let obj = time_average(&traj, window).ok();
    let dj = match obj {
        Some(o) if o.valid => (Some(o.dj_dalpha), Some(o.dj_dbeta)),
        _ => (None, None),
    };
    Ok(SweepRow {
        dt,
        regime: report.regime,
        lyapunov: report.lyapunov,
        j: obj.map(|o| o.j),
        dj,
        status: traj.status,
    })
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n >= 1)
            .map(Some)
            .ok_or_else(|| CliError::Invalid(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
    }
}

pub fn sweep_cmd(run: &RunArgs, grid: &[f64], output: &Path) -> Result<ExitStatus, CliError> {
    // dt comes from the grid; a --dt flag or file value is ignored
    let r = RunArgs { dt: None, ..run.clone() }.resolve()?;
    let work = || -> Result<Vec<SweepRow>, CliError> {
        grid.par_iter()
            .map(|&dt| sweep_point(&r.params, &r.config, &r.window, dt))
            .collect()
    };
    let rows = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    let lines = rows.iter().map(|row| {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(row.dt),
            row.regime,
            fmt_opt(row.lyapunov),
            fmt_opt(row.j),
            fmt_opt(row.dj.0),
            fmt_opt(row.dj.1),
            status_label(&row.status)
        )
    });
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_csv(output, "dt,regime,lyapunov,J,dJ_dalpha,dJ_dbeta,status", lines)?;
    Ok(ExitStatus::Success)
}

pub fn verify_cmd(
    run: &RunArgs,
    tol_fd: Option<f64>,
    tol_adjoint: Option<f64>,
    h_rel: f64,
) -> Result<ExitStatus, CliError> {
    for tol in [tol_fd, tol_adjoint].into_iter().flatten() {
        if !(tol >= 0.0) {
            return Err(CliError::Invalid(format!("tolerances must be >= 0, got {tol}")));
        }
    }
    let r = run.resolve()?;
    let cmp = compare_gradients_with(&r.params, &r.config, &r.window, h_rel)?;
    print_json(&cmp)?;
    let (tol_fd, tol_adjoint) = match (tol_fd, tol_adjoint) {
        (None, None) => (Some(1e-4), Some(1e-10)),
        given => given,
    };
    Ok(if cmp.within(tol_fd, tol_adjoint) { ExitStatus::Success } else { ExitStatus::BoundFailed })
}

struct CaseRun {
    params: ModelParams,
    config: SimConfig,
    window: AveragingWindow,
    traj: Trajectory,
}

fn canned(dt: f64) -> Result<CaseRun, CliError> {
    let params = ModelParams::default();
    let config = SimConfig::explicit(dt);
    let traj = simulate(&params, &config)?;
    Ok(CaseRun { params, config, window: AveragingWindow::default(), traj })
}

fn columns(traj: &Trajectory, upto: u64, pick: impl Fn(&stiffsense_core::Record) -> Vec<f64>) -> Vec<String> {
    traj.records
        .iter()
        .take_while(|r| r.step < upto)
        .map(|r| {
            let vals: Vec<String> = pick(r).into_iter().map(fmt_f64).collect();
            format!("{},{},{}", r.step, fmt_f64(r.time), vals.join(","))
        })
        .collect()
}

/// Figure data for the canned cases: 1 monotone (dt 1.0), 2 oscillating
/// (dt 2.0), 3 chaotic (dt 2.8, plus the three-way J comparison), 4 divergent (dt 5.0).
pub fn reproduce_cmd(case: u8, out_dir: &Path) -> Result<ExitStatus, CliError> {
    let dt = match case {
        1 => 1.0,
        2 => 2.0,
        3 => 2.8,
        4 => 5.0,
        _ => return Err(CliError::Invalid(format!("no such case {case}"))),
    };
    create_dir(out_dir)?;
    let run = canned(dt)?;
    let t = &run.traj;
    let all = u64::MAX;
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut emit = |name: &str, header: &str, rows: Vec<String>| -> Result<(), CliError> {
        let path = out_dir.join(name);
        write_csv(&path, header, rows)?;
        outputs.push(path);
        Ok(())
    };
    let series = || running_average_series(t, &run.window).map_err(CliError::from);

    match case {
        1 => {
            emit("fig1.csv", "step,time,x,xd_alpha", columns(t, all, |r| vec![r.x, r.d_alpha]))?;
            emit("fig2.csv", "step,time,J,dJ_dalpha", running_rows(&series()?, dt, true))?;
        }
        2 => {
            emit("fig3.csv", "step,time,x", columns(t, all, |r| vec![r.x]))?;
            emit("fig4.csv", "step,time,xd_alpha", columns(t, all, |r| vec![r.d_alpha]))?;
            emit("fig5.csv", "step,time,J,dJ_dalpha", running_rows(&series()?, dt, true))?;
        }
        3 => {
            emit("fig6.csv", "step,time,x", columns(t, all, |r| vec![r.x]))?;
            emit("fig7.csv", "step,time,J", running_rows(&series()?, dt, false))?;
            let upto = t.tangent_overflow_step.unwrap_or(all);
            emit("fig8.csv", "step,time,xd_alpha", columns(t, upto, |r| vec![r.d_alpha]))?;

            let others = [canned(1.0)?, canned(2.0)?];
            let histories = [
                running_average_series(&others[0].traj, &run.window)?,
                running_average_series(&others[1].traj, &run.window)?,
                series()?,
            ];
            let rows = (0..histories[2].len())
                .map(|i| {
                    format!(
                        "{},{},{},{}",
                        histories[2][i].step,
                        fmt_f64(histories[0][i].j),
                        fmt_f64(histories[1][i].j),
                        fmt_f64(histories[2][i].j)
                    )
                })
                .collect();
            emit("fig9.csv", "step,J_dt_1.0,J_dt_2.0,J_dt_2.8", rows)?;
        }
        _ => {
            emit(
                "case4.csv",
                "step,time,x,xd_alpha,xd_beta",
                columns(t, all, |r| vec![r.x, r.d_alpha, r.d_beta]),
            )?;
        }
    }

    let manifest = RunManifest {
        params: run.params,
        config: run.config,
        window: run.window,
        status: t.status,
        regime: Some(classify(t, &run.params, &run.config).regime),
        objective: time_average(t, &run.window).ok(),
        outputs,
    };
    manifest.write(&out_dir.join("manifest.json"))?;
    Ok(ExitStatus::Success)
}

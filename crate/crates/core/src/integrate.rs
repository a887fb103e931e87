//! Explicit and implicit Euler stepping in primal and tangent mode, and the
//! full-trajectory driver with overflow bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, rhs_partials, rhs_tangent, ModelParams};
use crate::tangent::TangentScalar;

/// Smallest admissible magnitude of the implicit-step Jacobian `1 - dt f'(y)`.
const MIN_IMPLICIT_DENOM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    ExplicitEuler,
    ImplicitEuler,
}

/// Discretization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub n_steps: u64,
    pub integrator: Integrator,
    /// Magnitude above which the state or a tangent counts as overflowed.
    pub overflow_guard: f64,
    pub newton_tol: f64,
    pub newton_max_iter: u32,
    /// Record every k-th step; the final step is always recorded.
    pub record_stride: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            n_steps: 100_000,
            integrator: Integrator::ExplicitEuler,
            overflow_guard: 1e300,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            record_stride: 1,
        }
    }
}

impl SimConfig {
    pub fn explicit(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn implicit(dt: f64) -> Self {
        Self { dt, integrator: Integrator::ImplicitEuler, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt must be finite and > 0, got {}", self.dt));
        }
        if self.n_steps < 1 {
            return bad("n_steps must be >= 1".into());
        }
        if !(self.overflow_guard > 0.0) {
            return bad(format!("overflow_guard must be > 0, got {}", self.overflow_guard));
        }
        if !(self.newton_tol.is_finite() && self.newton_tol > 0.0) {
            return bad(format!("newton_tol must be finite and > 0, got {}", self.newton_tol));
        }
        if self.newton_max_iter < 1 {
            return bad("newton_max_iter must be >= 1".into());
        }
        if self.record_stride < 1 {
            return bad("record_stride must be >= 1".into());
        }
        Ok(())
    }
}

/// One recorded time level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub step: u64,
    pub time: f64,
    pub x: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
}

/// How a simulation ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "step", rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// The state exceeded the guard (or went non-finite) at this step; the run stopped.
    PrimalOverflowAt(u64),
    /// A tangent exceeded the guard at this step; tangents are frozen from here
    /// on while the primal continues to `n_steps`.
    TangentOverflowAt(u64),
    NewtonFailedAt(u64),
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }

    /// True when the primal reached `n_steps`, whatever happened to the tangents.
    pub fn primal_complete(&self) -> bool {
        matches!(self, Status::Completed | Status::TangentOverflowAt(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub status: Status,
    /// First step whose tangent overflowed, kept even if the primal later overflows.
    pub tangent_overflow_step: Option<u64>,
    pub config: SimConfig,
    pub params: ModelParams,
}

impl Trajectory {
    pub fn last(&self) -> &Record {
        self.records.last().expect("a trajectory always holds the initial record")
    }

    /// The record for `step`, if it was recorded.
    pub fn at(&self, step: u64) -> Option<&Record> {
        self.index_of(step).map(|i| &self.records[i])
    }

    pub(crate) fn index_of(&self, step: u64) -> Option<usize> {
        self.records.binary_search_by_key(&step, |r| r.step).ok()
    }

    /// Contiguous records covering `[start, end]`, or the first missing step.
    pub(crate) fn window(&self, start: u64, end: u64) -> Result<&[Record]> {
        let i0 = self.index_of(start).ok_or(Error::WindowNotCovered { step: start })?;
        let len = (end - start) as usize + 1;
        let slice = self
            .records
            .get(i0..i0 + len)
            .unwrap_or(&self.records[i0..]);
        for (k, r) in slice.iter().enumerate() {
            if r.step != start + k as u64 {
                return Err(Error::WindowNotCovered { step: start + k as u64 });
            }
        }
        if slice.len() < len {
            return Err(Error::WindowNotCovered { step: start + slice.len() as u64 });
        }
        Ok(slice)
    }

    /// The last step reached by the primal.
    pub fn last_step(&self) -> u64 {
        self.last().step
    }
}

/// `x + dt * rhs(x)`.
#[inline]
pub fn explicit_euler_step(x: f64, p: &ModelParams, dt: f64) -> f64 {
    x + dt * rhs(x, p)
}

/// Explicit Euler over [`TangentScalar`]; its value is bit-identical to
/// [`explicit_euler_step`].
#[inline]
pub fn explicit_euler_tangent_step(x: TangentScalar, p: &ModelParams, dt: f64) -> TangentScalar {
    x + rhs_tangent(x, p).scale(dt)
}

/// Derivative of the explicit Euler map, `1 + dt f'(x)`.
#[inline]
pub fn map_derivative(x: f64, p: &ModelParams, dt: f64) -> f64 {
    1.0 + dt * rhs_partials(x, p).df_dx
}

/// Derivative of the implicit Euler map at the new state, `1 / (1 - dt f'(y))`.
#[inline]
pub fn implicit_map_derivative(x_next: f64, p: &ModelParams, dt: f64) -> f64 {
    1.0 / (1.0 - dt * rhs_partials(x_next, p).df_dx)
}

/// Solves `y - x - dt f(y) = 0` by Newton's method from `y = x`.
///
/// The root always lies between `x` and the next equilibrium of `f` in the
/// direction of `f(x)`, where the residual changes sign. Newton iterates that
/// leave this bracket (or hit a vanishing Jacobian) are replaced by bisection,
/// which keeps the step monotone for large `dt` where the residual has folds.
/// Returns the root and the number of updates taken.
pub fn implicit_euler_step(x: f64, p: &ModelParams, cfg: &SimConfig) -> Result<(f64, u32)> {
    let dt = cfg.dt;
    let fail = |iters| Err(Error::NewtonFailed { x, iters });
    if !x.is_finite() {
        return fail(0);
    }
    let residual = |y: f64| y - x - dt * rhs(y, p);

    let fx = rhs(x, p);
    if !fx.is_finite() {
        return fail(0);
    }
    let x_star = p.steady_state();
    let (mut lo, mut hi) = if fx > 0.0 {
        (x, if x < 0.0 { 0.0 } else { x_star })
    } else {
        (x_star, x)
    };

    let mut y = x;
    for iters in 0..=cfg.newton_max_iter {
        let r = residual(y);
        if !r.is_finite() {
            return fail(iters);
        }
        if r.abs() < cfg.newton_tol {
            return Ok((y, iters));
        }
        if iters == cfg.newton_max_iter {
            break;
        }
        if r < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let jac = 1.0 - dt * rhs_partials(y, p).df_dx;
        let newton = y - r / jac;
        y = if jac.abs() >= MIN_IMPLICIT_DENOM && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    fail(cfg.newton_max_iter)
}

/// Tangent of the implicit step: differentiating `y = x + dt f(y)` gives
/// `s' = (s + dt df/dparam(y)) / (1 - dt df/dx(y))` per direction.
pub fn implicit_euler_tangent_step(
    x_next: f64,
    s: (f64, f64),
    p: &ModelParams,
    dt: f64,
) -> Result<(f64, f64)> {
    let d = rhs_partials(x_next, p);
    let denom = 1.0 - dt * d.df_dx;
    if !(denom.abs() >= MIN_IMPLICIT_DENOM) {
        return Err(Error::NewtonFailed { x: x_next, iters: 0 });
    }
    Ok(((s.0 + dt * d.df_dalpha) / denom, (s.1 + dt * d.df_dbeta) / denom))
}

/// Runs `cfg.n_steps` steps from `x = sigma` with zero initial tangents.
///
/// Overflow is reported through [`Trajectory::status`], never as an error;
/// `Err` means the inputs were invalid. A tangent overflow freezes the
/// tangent columns at their last finite values and the primal carries on.
/// A primal overflow or Newton failure ends the run; the offending step is
/// not recorded.
pub fn simulate(p: &ModelParams, cfg: &SimConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate()?;

    let capacity = (cfg.n_steps / cfg.record_stride + 2) as usize;
    let mut records = Vec::with_capacity(capacity);
    let record = |step: u64, s: &TangentScalar| Record {
        step,
        time: step as f64 * cfg.dt,
        x: s.value,
        d_alpha: s.d_alpha,
        d_beta: s.d_beta,
    };

    let mut state = TangentScalar::constant(p.sigma);
    records.push(record(0, &state));
    let mut tangent_overflow_step = None;
    let mut stop = None;

    for step in 1..=cfg.n_steps {
        let alive = tangent_overflow_step.is_none();
        let next = match cfg.integrator {
            Integrator::ExplicitEuler => {
                if alive {
                    explicit_euler_tangent_step(state, p, cfg.dt)
                } else {
                    TangentScalar { value: explicit_euler_step(state.value, p, cfg.dt), ..state }
                }
            }
            Integrator::ImplicitEuler => {
                let stepped = implicit_euler_step(state.value, p, cfg).and_then(|(y, _)| {
                    if alive {
                        let (da, db) =
                            implicit_euler_tangent_step(y, state.tangents(), p, cfg.dt)?;
                        Ok(TangentScalar::new(y, da, db))
                    } else {
                        Ok(TangentScalar { value: y, ..state })
                    }
                });
                match stepped {
                    Ok(s) => s,
                    Err(_) => {
                        stop = Some(Status::NewtonFailedAt(step));
                        break;
                    }
                }
            }
        };

        if !next.value.is_finite() || next.value.abs() > cfg.overflow_guard {
            stop = Some(Status::PrimalOverflowAt(step));
            break;
        }
        state = if alive && !tangents_within(&next, cfg.overflow_guard) {
            tangent_overflow_step = Some(step);
            TangentScalar { value: next.value, ..state }
        } else {
            next
        };

        if step % cfg.record_stride == 0 || step == cfg.n_steps {
            records.push(record(step, &state));
        }
    }

    let status = match (stop, tangent_overflow_step) {
        (Some(s), _) => {
            let last = records.last().map(|r| r.step);
            let reached = match s {
                Status::PrimalOverflowAt(k) | Status::NewtonFailedAt(k) => k - 1,
                _ => unreachable!(),
            };
            if last != Some(reached) {
                records.push(record(reached, &state));
            }
            s
        }
        (None, Some(k)) => Status::TangentOverflowAt(k),
        (None, None) => Status::Completed,
    };

    Ok(Trajectory {
        records,
        status,
        tangent_overflow_step,
        config: *cfg,
        params: *p,
    })
}

fn tangents_within(s: &TangentScalar, guard: f64) -> bool {
    s.d_alpha.is_finite()
        && s.d_beta.is_finite()
        && s.d_alpha.abs() <= guard
        && s.d_beta.abs() <= guard
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ModelParams {
        ModelParams::default()
    }

    fn bisect(x: f64, p: &ModelParams, dt: f64, mut lo: f64, mut hi: f64) -> f64 {
        let r = |y: f64| y - x - dt * rhs(y, p);
        assert!(r(lo) < 0.0 && r(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if r(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn explicit_step_examples() {
        assert_eq!(explicit_euler_step(1.0, &unit(), 2.8), 1.0);
        assert_eq!(explicit_euler_step(1e-4, &unit(), 1.0), 1e-4 + (1e-8 - 1e-12));
        assert_eq!(explicit_euler_step(2.0, &unit(), 5.0), -18.0);
    }

    #[test]
    fn explicit_tangent_step_examples() {
        let t = explicit_euler_tangent_step(TangentScalar::constant(1.0), &unit(), 1.0);
        assert_eq!((t.value, t.d_alpha, t.d_beta), (1.0, 1.0, -1.0));

        // At x* with dt = 1 the map is superstable: the incoming tangent is forgotten.
        for s in [-4.0, 0.0, 3.5] {
            let t = explicit_euler_tangent_step(TangentScalar::new(1.0, s, 0.0), &unit(), 1.0);
            assert_eq!(t.d_alpha, 1.0);
        }

        let p = ModelParams { alpha: 1.3, beta: 0.6, sigma: 1e-4 };
        for x in [0.1, 0.7, 1.9] {
            let dt = 0.37;
            let t = explicit_euler_tangent_step(TangentScalar::constant(x), &p, dt);
            assert_eq!(t.value, explicit_euler_step(x, &p, dt));
            assert_eq!(t.d_alpha, dt * (x * x));
            assert_eq!(t.d_beta, dt * -(x * x * x));
        }
    }

    #[test]
    fn map_derivative_examples() {
        assert_eq!(map_derivative(1.0, &unit(), 1.0), 0.0);
        assert_eq!(map_derivative(1.0, &unit(), 2.0), -1.0);
        assert!((map_derivative(1.0, &unit(), 2.8) + 1.8).abs() < 1e-15);
    }

    #[test]
    fn implicit_step_at_fixed_point() {
        for dt in [0.1, 1.0, 2.8, 1000.0] {
            let (y, iters) = implicit_euler_step(1.0, &unit(), &SimConfig::implicit(dt)).unwrap();
            assert_eq!(y, 1.0);
            assert!(iters <= 1);
        }
    }

    #[test]
    fn implicit_step_small_state() {
        let cfg = SimConfig::implicit(2.8);
        let (y, _) = implicit_euler_step(1e-4, &unit(), &cfg).unwrap();
        assert!(y > 1e-4 && y < 1.0);
        let oracle = bisect(1e-4, &unit(), 2.8, 1e-4, 1.0);
        assert!((y - oracle).abs() < 1e-14);
    }

    #[test]
    fn implicit_step_large_dt() {
        let cfg = SimConfig::implicit(1000.0);
        let (y, _) = implicit_euler_step(0.999, &unit(), &cfg).unwrap();
        let oracle = bisect(0.999, &unit(), 1000.0, 0.999, 1.0);
        assert!((y - oracle).abs() < 1e-12);
        // The root sits ~(1 - x)/(1 + dt) below 1, not at 1 itself.
        assert!((y - 1.0).abs() < 2e-6);
    }

    #[test]
    fn implicit_step_across_fold() {
        // dt = 10 puts two folds in the residual between 0 and 1; plain Newton diverges here.
        let cfg = SimConfig::implicit(10.0);
        for x in [1e-4, 0.02, 0.0264, 0.05, 0.3, 0.9] {
            let (y, _) = implicit_euler_step(x, &unit(), &cfg).unwrap();
            assert!(y > x && y <= 1.0, "x={x} y={y}");
            let r = y - x - 10.0 * rhs(y, &unit());
            assert!(r.abs() < cfg.newton_tol);
        }
    }

    #[test]
    fn implicit_step_from_above_and_below() {
        let cfg = SimConfig::implicit(0.5);
        let (y, _) = implicit_euler_step(1.5, &unit(), &cfg).unwrap();
        assert!(y < 1.5 && y > 1.0);
        let (y, _) = implicit_euler_step(-0.5, &unit(), &cfg).unwrap();
        assert!(y > -0.5 && y < 0.0);
    }

    #[test]
    fn implicit_step_rejects_non_finite() {
        let cfg = SimConfig::implicit(1.0);
        assert!(matches!(
            implicit_euler_step(f64::NAN, &unit(), &cfg),
            Err(Error::NewtonFailed { .. })
        ));
    }

    #[test]
    fn implicit_step_exhausts_iterations() {
        let cfg = SimConfig { newton_max_iter: 2, ..SimConfig::implicit(10.0) };
        assert!(matches!(
            implicit_euler_step(0.03, &unit(), &cfg),
            Err(Error::NewtonFailed { iters: 2, .. })
        ));
    }

    #[test]
    fn implicit_tangent_examples() {
        let (da, db) = implicit_euler_tangent_step(1.0, (0.0, 0.0), &unit(), 1.0).unwrap();
        assert_eq!(da, 0.5);
        assert_eq!(db, -0.5);
        assert_eq!(implicit_euler_tangent_step(0.0, (0.0, 0.0), &unit(), 1.0).unwrap(), (0.0, 0.0));
        // 1 - 3 * f'(1/3) = 1 - 3 * (1/3) vanishes
        let x = 1.0 / 3.0;
        let p = unit();
        let dt = 1.0 / rhs_partials(x, &p).df_dx;
        assert!(implicit_euler_tangent_step(x, (0.0, 0.0), &p, dt).is_err());
    }

    #[test]
    fn implicit_tangent_matches_finite_difference() {
        let x = 0.35;
        let dt = 1.7;
        let base = ModelParams { alpha: 1.2, beta: 0.9, sigma: 1e-4 };
        let cfg = SimConfig { newton_tol: 1e-15, ..SimConfig::implicit(dt) };
        let (y, _) = implicit_euler_step(x, &base, &cfg).unwrap();
        let (da, db) = implicit_euler_tangent_step(y, (0.0, 0.0), &base, dt).unwrap();

        let h = 1e-7;
        let solve = |p: ModelParams| bisect(x, &p, dt, x, p.steady_state());
        let fd_a = (solve(ModelParams { alpha: base.alpha + h, ..base })
            - solve(ModelParams { alpha: base.alpha - h, ..base }))
            / (2.0 * h);
        let fd_b = (solve(ModelParams { beta: base.beta + h, ..base })
            - solve(ModelParams { beta: base.beta - h, ..base }))
            / (2.0 * h);
        assert!(((da - fd_a) / da).abs() < 1e-5, "{da} vs {fd_a}");
        assert!(((db - fd_b) / db).abs() < 1e-5, "{db} vs {fd_b}");
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        for bad in [
            SimConfig { dt: -1.0, ..Default::default() },
            SimConfig { dt: 0.0, ..Default::default() },
            SimConfig { dt: f64::INFINITY, ..Default::default() },
            SimConfig { n_steps: 0, ..Default::default() },
            SimConfig { overflow_guard: 0.0, ..Default::default() },
            SimConfig { newton_tol: 0.0, ..Default::default() },
            SimConfig { newton_max_iter: 0, ..Default::default() },
            SimConfig { record_stride: 0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
    }

    #[test]
    fn initial_record_and_stride() {
        let cfg = SimConfig { n_steps: 1001, record_stride: 100, ..SimConfig::explicit(1.0) };
        let t = simulate(&unit(), &cfg).unwrap();
        assert_eq!(t.records[0], Record { step: 0, time: 0.0, x: 1e-4, d_alpha: 0.0, d_beta: 0.0 });
        let steps: Vec<u64> = t.records.iter().map(|r| r.step).collect();
        assert_eq!(steps.len(), 12);
        assert_eq!(steps[1], 100);
        assert_eq!(*steps.last().unwrap(), 1001);
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn strided_run_matches_full_run() {
        let full = simulate(&unit(), &SimConfig { n_steps: 5000, ..SimConfig::explicit(2.8) }).unwrap();
        let thin = simulate(
            &unit(),
            &SimConfig { n_steps: 5000, record_stride: 7, ..SimConfig::explicit(2.8) },
        )
        .unwrap();
        for r in &thin.records {
            assert_eq!(full.at(r.step), Some(r));
        }
    }

    #[test]
    fn primal_overflow_stops_and_keeps_last_state() {
        let t = simulate(&unit(), &SimConfig::explicit(5.0)).unwrap();
        let Status::PrimalOverflowAt(k) = t.status else { panic!("{:?}", t.status) };
        assert!(k < 100_000);
        assert_eq!(t.last_step(), k - 1);
        assert!(t.records.iter().all(|r| r.x.is_finite() && r.x.abs() <= 1e300));
    }

    #[test]
    fn tangent_overflow_freezes_tangents() {
        let t = simulate(&unit(), &SimConfig::explicit(2.8)).unwrap();
        let Status::TangentOverflowAt(k) = t.status else { panic!("{:?}", t.status) };
        assert_eq!(t.last_step(), 100_000);
        let before = *t.at(k - 1).unwrap();
        for r in &t.records[k as usize..] {
            assert_eq!((r.d_alpha, r.d_beta), (before.d_alpha, before.d_beta));
            assert!(r.x.is_finite());
        }
    }

    #[test]
    fn small_guard_triggers_tangent_overflow_first() {
        let cfg = SimConfig { overflow_guard: 100.0, ..SimConfig::explicit(1.0) };
        let t = simulate(&unit(), &cfg).unwrap();
        // d_alpha peaks near 1500 while x stays below 1
        assert!(matches!(t.status, Status::TangentOverflowAt(_)));
        assert_eq!(t.last().x, 1.0);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(simulate(&ModelParams { sigma: 2.0, ..unit() }, &SimConfig::default()).is_err());
        assert!(simulate(&unit(), &SimConfig::explicit(-1.0)).is_err());
    }
}

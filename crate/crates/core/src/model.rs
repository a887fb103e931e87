//! Right-hand side of the flame-propagation ODE `x' = alpha x^2 - beta x^3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tangent::TangentScalar;

/// Model coefficients and the initial radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Surface-area coefficient.
    pub alpha: f64,
    /// Volume coefficient.
    pub beta: f64,
    /// Initial flame radius `x(0)`.
    pub sigma: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 1.0, sigma: 1e-4 }
    }
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64) -> Result<Self> {
        let p = Self { alpha, beta, sigma };
        p.validate()?;
        Ok(p)
    }

    /// Checks positivity, finiteness and `sigma < alpha / beta`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("sigma", self.sigma)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if self.sigma >= self.steady_state() {
            return Err(Error::InvalidParams(format!(
                "sigma ({}) must lie below the steady state alpha/beta ({})",
                self.sigma,
                self.steady_state()
            )));
        }
        Ok(())
    }

    /// The nontrivial equilibrium `alpha / beta`.
    pub fn steady_state(&self) -> f64 {
        self.alpha / self.beta
    }
}

/// Analytic partial derivatives of the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub df_dx: f64,
    pub df_dalpha: f64,
    pub df_dbeta: f64,
}

/// `alpha x^2 - beta x^3`, evaluated as `(alpha*(x*x)) - (beta*((x*x)*x))`.
///
/// The order is shared with [`rhs_tangent`]; chaotic orbits amplify any
/// reordering, so it must not change.
#[inline]
pub fn rhs(x: f64, p: &ModelParams) -> f64 {
    let x2 = x * x;
    p.alpha * x2 - p.beta * (x2 * x)
}

#[inline]
pub fn rhs_partials(x: f64, p: &ModelParams) -> Partials {
    let x2 = x * x;
    Partials {
        df_dx: 2.0 * p.alpha * x - 3.0 * p.beta * x2,
        df_dalpha: x2,
        df_dbeta: -(x2 * x),
    }
}

/// Forward-mode evaluation of [`rhs`] with `alpha` and `beta` seeded.
#[inline]
pub fn rhs_tangent(x: TangentScalar, p: &ModelParams) -> TangentScalar {
    let alpha = TangentScalar::seed_alpha(p.alpha);
    let beta = TangentScalar::seed_beta(p.beta);
    let x2 = x * x;
    alpha * x2 - beta * (x2 * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn rhs_examples() {
        assert_eq!(rhs(1.0, &unit()), 0.0);
        assert_eq!(rhs(0.5, &unit()), 0.125);
        let p = ModelParams { alpha: 2.3, beta: 0.7, sigma: 1e-4 };
        assert_eq!(rhs(0.0, &p), 0.0);
    }

    #[test]
    fn partials_examples() {
        let d = rhs_partials(1.0, &unit());
        assert_eq!((d.df_dx, d.df_dalpha, d.df_dbeta), (-1.0, 1.0, -1.0));
        let d = rhs_partials(0.0, &unit());
        assert_eq!((d.df_dx, d.df_dalpha, d.df_dbeta), (0.0, 0.0, -0.0));
        let d = rhs_partials(0.5, &unit());
        assert_eq!((d.df_dx, d.df_dalpha, d.df_dbeta), (0.25, 0.25, -0.125));
    }

    #[test]
    fn tangent_examples() {
        let t = rhs_tangent(TangentScalar::new(1.0, 0.0, 0.0), &unit());
        assert_eq!(t, TangentScalar::new(0.0, 1.0, -1.0));

        let t = rhs_tangent(TangentScalar::new(0.0, 1.0, 0.0), &unit());
        assert_eq!((t.value, t.d_alpha, t.d_beta), (0.0, 0.0, 0.0));

        for s in [-3.0, 0.0, 0.5, 7.25] {
            let t = rhs_tangent(TangentScalar::new(0.5, s, 0.0), &unit());
            let d = rhs_partials(0.5, &unit());
            assert_eq!(t.d_alpha, 0.25 * s + 0.25);
            assert_eq!(t.d_alpha, d.df_dx * s + d.df_dalpha);
        }
    }

    #[test]
    fn validation() {
        assert!(ModelParams::new(1.0, 1.0, 1e-4).is_ok());
        assert!(ModelParams::new(0.0, 1.0, 1e-4).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1e-4).is_err());
        assert!(ModelParams::new(1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 2.0, 0.6).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0, 1e-4).is_err());
    }

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / a.abs().max(b.abs())
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn tangent_matches_partials(x in 0.0..2.0f64, alpha in 1e-3..3.0f64, beta in 1e-3..3.0f64) {
            let p = ModelParams { alpha, beta, sigma: 1e-4 };
            let t = rhs_tangent(TangentScalar::constant(x), &p);
            let d = rhs_partials(x, &p);
            prop_assert_eq!(t.value, rhs(x, &p));
            prop_assert!(rel(t.d_alpha, d.df_dalpha) <= 1e-14);
            prop_assert!(rel(t.d_beta, d.df_dbeta) <= 1e-14);
        }

        #[test]
        fn tangent_chain_rule_with_incoming_tangent(
            x in 0.0..2.0f64,
            alpha in 1e-3..3.0f64,
            beta in 1e-3..3.0f64,
            sa in -10.0..10.0f64,
            sb in -10.0..10.0f64,
        ) {
            let p = ModelParams { alpha, beta, sigma: 1e-4 };
            let t = rhs_tangent(TangentScalar::new(x, sa, sb), &p);
            let d = rhs_partials(x, &p);
            // The two evaluation routes round differently; bound by the size of
            // the cancelling terms rather than the (possibly tiny) result.
            let scale = |s: f64| (2.0 * alpha * x * s).abs() + (3.0 * beta * x * x * s).abs() + x * x + x * x * x;
            prop_assert!((t.d_alpha - (d.df_dx * sa + d.df_dalpha)).abs() <= 1e-14 * scale(sa));
            prop_assert!((t.d_beta - (d.df_dx * sb + d.df_dbeta)).abs() <= 1e-14 * scale(sb));
        }

        #[test]
        fn partials_match_central_differences(
            x in 0.1..2.0f64,
            alpha in 0.1..3.0f64,
            beta in 0.1..3.0f64,
        ) {
            let h = 1e-6;
            let p = ModelParams { alpha, beta, sigma: 1e-4 };
            let d = rhs_partials(x, &p);
            let fd_x = (rhs(x + h, &p) - rhs(x - h, &p)) / (2.0 * h);
            let pa = |a: f64| ModelParams { alpha: a, ..p };
            let pb = |b: f64| ModelParams { beta: b, ..p };
            let fd_a = (rhs(x, &pa(alpha + h)) - rhs(x, &pa(alpha - h))) / (2.0 * h);
            let fd_b = (rhs(x, &pb(beta + h)) - rhs(x, &pb(beta - h))) / (2.0 * h);
            // df_dx crosses zero; use the scale of its two terms as the floor
            let scale_x = (2.0 * alpha * x).abs() + (3.0 * beta * x * x).abs();
            prop_assert!((fd_x - d.df_dx).abs() <= 1e-6 * scale_x.max(d.df_dx.abs()));
            prop_assert!(rel(fd_a, d.df_dalpha) <= 1e-6);
            prop_assert!(rel(fd_b, d.df_dbeta) <= 1e-6);
        }
    }
}

//! Forward-mode scalar carrying derivatives in two fixed directions:
//! `d_alpha` and `d_beta`, the sensitivities to the two model coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A value together with its exact partial derivatives w.r.t. `alpha` and `beta`.
///
/// Arithmetic follows the usual forward-mode rules. Non-finite results are
/// not trapped here; overflow bookkeeping is the integrator's job.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TangentScalar {
    pub value: f64,
    pub d_alpha: f64,
    pub d_beta: f64,
}

impl TangentScalar {
    pub const fn new(value: f64, d_alpha: f64, d_beta: f64) -> Self {
        Self { value, d_alpha, d_beta }
    }

    /// A constant: both derivatives are zero.
    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0)
    }

    /// The independent variable `alpha`: unit derivative in the first direction.
    pub const fn seed_alpha(value: f64) -> Self {
        Self::new(value, 1.0, 0.0)
    }

    /// The independent variable `beta`: unit derivative in the second direction.
    pub const fn seed_beta(value: f64) -> Self {
        Self::new(value, 0.0, 1.0)
    }

    /// Multiplication by a passive real `k`.
    pub fn scale(self, k: f64) -> Self {
        Self::new(k * self.value, k * self.d_alpha, k * self.d_beta)
    }

    pub fn tangents(&self) -> (f64, f64) {
        (self.d_alpha, self.d_beta)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d_alpha.is_finite() && self.d_beta.is_finite()
    }
}

impl From<f64> for TangentScalar {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

impl Add for TangentScalar {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.value + rhs.value,
            self.d_alpha + rhs.d_alpha,
            self.d_beta + rhs.d_beta,
        )
    }
}

impl Sub for TangentScalar {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self::new(
            self.value - rhs.value,
            self.d_alpha - rhs.d_alpha,
            self.d_beta - rhs.d_beta,
        )
    }
}

impl Mul for TangentScalar {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Self::new(
            self.value * rhs.value,
            self.value * rhs.d_alpha + rhs.value * self.d_alpha,
            self.value * rhs.d_beta + rhs.value * self.d_beta,
        )
    }
}

impl Neg for TangentScalar {
    type Output = Self;

    fn neg(self) -> Self {
        Self::new(-self.value, -self.d_alpha, -self.d_beta)
    }
}

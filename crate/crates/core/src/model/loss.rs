use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `h(t; z) = (z − t)²`
    Squared,
    /// `h(t; z) = |z − t|`
    Absolute,
}

impl LossKind {
    pub fn at(self, z: f64) -> LossDecomposition {
        LossDecomposition { kind: self, z }
    }

    /// The outer scalar function `ψ` with `h↑(t) = ψ(t − z)` and
    /// `h↓(t) = ψ(z − t)`.
    #[inline]
    pub fn psi(self, u: f64) -> f64 {
        let t = math::plus(u);
        match self {
            LossKind::Squared => t * t,
            LossKind::Absolute => t,
        }
    }

    /// Right derivative of `ψ`.
    #[inline]
    pub fn psi_right_derivative(self, u: f64) -> f64 {
        match self {
            LossKind::Squared => 2.0 * math::plus(u),
            LossKind::Absolute => {
                if u >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_differentiable(self) -> bool {
        matches!(self, LossKind::Squared)
    }
}

/// A loss `h(·; z)` split as `h = h↑ + h↓` with `h↑` convex nondecreasing and
/// `h↓` convex nonincreasing.
///
/// One-sided derivatives at kinks are right derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossDecomposition {
    pub kind: LossKind,
    pub z: f64,
}

pub fn make_squared_loss(z: f64) -> LossDecomposition {
    LossDecomposition { kind: LossKind::Squared, z }
}

pub fn make_abs_loss(z: f64) -> LossDecomposition {
    LossDecomposition { kind: LossKind::Absolute, z }
}

impl LossDecomposition {
    pub fn value(&self, t: f64) -> f64 {
        let r = self.z - t;
        match self.kind {
            LossKind::Squared => r * r,
            LossKind::Absolute => math::abs(r),
        }
    }

    pub fn up(&self, t: f64) -> f64 {
        self.kind.psi(t - self.z)
    }

    pub fn down(&self, t: f64) -> f64 {
        self.kind.psi(self.z - t)
    }

    pub fn up_right_derivative(&self, t: f64) -> f64 {
        self.kind.psi_right_derivative(t - self.z)
    }

    /// Right derivative of `h↓`. For the absolute loss `h↓(t) = (z − t)₊`,
    /// which has slope `−1` left of `z` and `0` from `z` on.
    pub fn down_right_derivative(&self, t: f64) -> f64 {
        match self.kind {
            LossKind::Squared => -2.0 * math::plus(self.z - t),
            LossKind::Absolute => {
                if t < self.z {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn right_derivative(&self, t: f64) -> f64 {
        self.up_right_derivative(t) + self.down_right_derivative(t)
    }

    /// A Lipschitz constant of `h(·; z)` on `[lo, hi]`.
    pub fn lipschitz_on(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            LossKind::Squared => 2.0 * math::abs(lo - self.z).max(math::abs(hi - self.z)),
            LossKind::Absolute => 1.0,
        }
    }
}

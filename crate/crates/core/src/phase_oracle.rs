//! Closed-form population quantities for noisy amplitude-based phase
//! retrieval with features uniform on the sphere of radius `√p`:
//!
//! ```text
//! z = |x̄ᵀξ| + ε,    M(x) = E (z − |xᵀξ|)²
//! ```
//!
//! With `c = x̄ᵀx`, `s = ‖x̄‖·‖x_⊥‖` (the component of `x` orthogonal to `x̄`)
//! and `θ = atan2(s, c)`,
//!
//! ```text
//! p·M(x) = ‖x‖² + ‖x̄‖² + pσ² − (4/π)(s + c(π/2 − θ)).
//! ```

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, norm_sq, symmetric_eigenvalues};
use crate::math;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePopulation {
    pub signal: Vec<f64>,
    pub sigma: f64,
    pub p: usize,
}

/// Scalar invariants of `x` relative to `x̄`.
#[derive(Clone, Copy, Debug)]
struct Geometry {
    /// `x̄ᵀx`
    c: f64,
    /// `‖x̄‖·‖x_⊥‖`
    s: f64,
    /// angle between `x` and `x̄`, in `[0, π]`
    theta: f64,
    x_sq: f64,
    perp: f64,
}

impl PhasePopulation {
    pub fn new(signal: Vec<f64>, sigma: f64) -> Result<Self> {
        let pop = Self { p: signal.len(), signal, sigma };
        pop.validate()?;
        Ok(pop)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::TooFewSamples { needed: 2, found: self.p });
        }
        if self.signal.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, found: self.signal.len() });
        }
        if !self.signal.iter().all(|v| v.is_finite()) || norm(&self.signal) == 0.0 {
            return Err(Error::InvalidParameter { name: "signal", value: norm(&self.signal) });
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter { name: "sigma", value: self.sigma });
        }
        Ok(())
    }

    pub fn signal_norm(&self) -> f64 {
        norm(&self.signal)
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.p {
            return Err(Error::DimensionMismatch { expected: self.p, found: x.len() });
        }
        Ok(())
    }

    fn geometry(&self, x: &[f64]) -> Geometry {
        let a_sq = norm_sq(&self.signal);
        let c = dot(&self.signal, x);
        let ratio = c / a_sq;
        let perp_sq: f64 = x.iter().zip(&self.signal).map(|(xi, si)| (xi - ratio * si) * (xi - ratio * si)).sum();
        let perp = math::sqrt(perp_sq);
        let s = math::sqrt(a_sq) * perp;
        Geometry { c, s, theta: math::atan2(s, c), x_sq: norm_sq(x), perp }
    }

    /// `M(x)`; continuous everywhere, including the origin.
    ///
    /// Evaluated as `σ² + (‖y − x̄‖² + (4/π)(|c|θ_y − s))/p` with
    /// `y = sign(c)·x`, which equals the closed form and is exactly `σ²` at
    /// `±x̄`.
    pub fn population_risk(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let g = self.geometry(x);
        let sign = if g.c < 0.0 { -1.0 } else { 1.0 };
        let dist_sq: f64 = x.iter().zip(&self.signal).map(|(xi, si)| (sign * xi - si) * (sign * xi - si)).sum();
        let theta = g.theta.min(PI - g.theta);
        let excess = dist_sq + (4.0 / PI) * (math::abs(g.c) * theta - g.s);
        Ok(self.sigma * self.sigma + excess / self.p as f64)
    }

    /// `∇M(x) = (1/p)[2x − (4/π)(x̄(π/2 − θ) + x·s/‖x‖²)]`, defined for all
    /// `x ≠ 0`.
    pub fn population_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let g = self.geometry(x);
        if g.x_sq == 0.0 {
            return Err(Error::GradientUndefined);
        }
        let p = self.p as f64;
        let k = 4.0 / PI;
        let on_signal = k * (FRAC_PI_2 - g.theta);
        let on_x = k * g.s / g.x_sq;
        Ok(x.iter()
            .zip(&self.signal)
            .map(|(xi, si)| (2.0 * xi - on_signal * si - on_x * xi) / p)
            .collect())
    }

    /// `M′(0; v) = −(4/(πp))(s_v + c_v(π/2 − θ_v))`; zero for `v = 0`.
    pub fn directional_derivative_origin(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        let g = self.geometry(v);
        Ok(-(4.0 / (PI * self.p as f64)) * (g.s + g.c * (FRAC_PI_2 - g.theta)))
    }

    /// Nonzero-block eigenvalues `(λ₊, λ₋)` of `M₁ = xxᵀ + x̄x̄ᵀ` and of
    /// `M₂ = xx̄ᵀ + x̄xᵀ`.
    pub fn rank2_eigenvalues(&self, x: &[f64]) -> Result<Rank2Eigenvalues> {
        self.check(x)?;
        let x_sq = norm_sq(x);
        let a_sq = norm_sq(&self.signal);
        let c = dot(x, &self.signal);
        let diff = x_sq - a_sq;
        let root = math::sqrt(diff * diff + 4.0 * c * c);
        let prod = math::sqrt(x_sq) * math::sqrt(a_sq);
        Ok(Rank2Eigenvalues {
            m1: ((x_sq + a_sq + root) / 2.0, (x_sq + a_sq - root) / 2.0),
            m2: (c + prod, c - prod),
        })
    }

    /// Radius `(2/π)‖x̄‖` of the saddle circle.
    pub fn saddle_radius(&self) -> f64 {
        (2.0 / PI) * self.signal_norm()
    }

    /// `σ² + (1/p)(1 − 4/π²)‖x̄‖²`, the risk on the saddle circle.
    pub fn saddle_value(&self) -> f64 {
        self.sigma * self.sigma + (1.0 - 4.0 / (PI * PI)) * norm_sq(&self.signal) / self.p as f64
    }

    /// Angle between `x` and the nearer of `±x̄`, in `[0, π/2]`.
    pub fn angle_to_solutions(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let g = self.geometry(x);
        Ok(math::atan2(g.s, math::abs(g.c)))
    }

    pub fn distances(&self, x: &[f64]) -> Result<StationaryDistances> {
        self.check(x)?;
        let g = self.geometry(x);
        let along = g.c / self.signal_norm();
        let radial = g.perp - self.saddle_radius();
        let plus: f64 = x.iter().zip(&self.signal).map(|(a, b)| (a - b) * (a - b)).sum();
        let minus: f64 = x.iter().zip(&self.signal).map(|(a, b)| (a + b) * (a + b)).sum();
        Ok(StationaryDistances {
            global_min: math::sqrt(plus.min(minus)),
            saddle_circle: math::sqrt(along * along + radial * radial),
            origin: math::sqrt(g.x_sq),
        })
    }

    /// Labels `x` by the stationary set within `tol` of it. The sets are
    /// disjoint and closed, so for small `tol` at most one qualifies; the
    /// nearest one wins otherwise.
    pub fn classify_stationary(&self, x: &[f64], tol: f64) -> Result<StationaryClassification> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter { name: "tol", value: tol });
        }
        let d = self.distances(x)?;
        let candidates = [
            (StationaryLabel::GlobalMin, d.global_min),
            (StationaryLabel::SaddleCircle, d.saddle_circle),
            (StationaryLabel::Origin, d.origin),
        ];
        let mut label = StationaryLabel::NoneOfThese;
        let mut best = tol;
        for (l, dist) in candidates {
            if dist <= best {
                best = dist;
                label = l;
            }
        }
        Ok(StationaryClassification { label, distances: d })
    }

    /// Central-difference Hessian of `M` from the closed-form gradient, step
    /// `h`, symmetrized.
    pub fn finite_difference_hessian(&self, x: &[f64], h: f64) -> Result<Vec<f64>> {
        self.check(x)?;
        let p = self.p;
        let mut hess = vec![0.0; p * p];
        let mut y = x.to_vec();
        for j in 0..p {
            y[j] = x[j] + h;
            let gp = self.population_gradient(&y)?;
            y[j] = x[j] - h;
            let gm = self.population_gradient(&y)?;
            y[j] = x[j];
            for i in 0..p {
                hess[i * p + j] = (gp[i] - gm[i]) / (2.0 * h);
            }
        }
        for i in 0..p {
            for j in 0..i {
                let v = 0.5 * (hess[i * p + j] + hess[j * p + i]);
                hess[i * p + j] = v;
                hess[j * p + i] = v;
            }
        }
        Ok(hess)
    }

    /// Trace and extreme eigenvalues of the finite-difference Hessian (step
    /// `1e-4`) at a point of the saddle circle.
    pub fn saddle_diagnostics(&self, x: &[f64]) -> Result<SaddleDiagnostics> {
        let d = self.distances(x)?;
        let tol = 1e-6 * (1.0 + self.signal_norm());
        if d.saddle_circle > tol {
            return Err(Error::NotOnSaddleCircle { distance: d.saddle_circle });
        }
        let hess = self.finite_difference_hessian(x, 1e-4)?;
        let p = self.p;
        let trace = (0..p).map(|i| hess[i * p + i]).sum();
        let eig = symmetric_eigenvalues(&hess, p);
        Ok(SaddleDiagnostics { trace, min_eigenvalue: eig[0], max_eigenvalue: eig[p - 1] })
    }

    /// `δ = ((1 − sin(πγ/2)) / (1 + sin(πγ/2)))·‖x̄‖`: on `𝔹_δ(±x̄)`,
    /// `M(x) − M(x̄) ≥ (γ/p)‖x − x̄‖²`.
    pub fn strong_convexity_radius(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidParameter { name: "gamma", value: gamma });
        }
        let s = math::sin(FRAC_PI_2 * gamma);
        Ok((1.0 - s) / (1.0 + s) * self.signal_norm())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rank2Eigenvalues {
    pub m1: (f64, f64),
    pub m2: (f64, f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryLabel {
    GlobalMin,
    SaddleCircle,
    Origin,
    NoneOfThese,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistances {
    /// to `{±x̄}`
    pub global_min: f64,
    pub saddle_circle: f64,
    pub origin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryClassification {
    pub label: StationaryLabel,
    pub distances: StationaryDistances,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleDiagnostics {
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

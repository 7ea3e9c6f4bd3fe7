use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::math;

/// An affine function of the parameter whose coefficients depend linearly on
/// the feature vector:
///
/// ```text
/// a(x; ξ) = xᵀ(W ξ + c) + uᵀ ξ + α
/// ```
///
/// `W` is `p × d` row-major. For a fixed sample this is just `sᵀx + o` with
/// slope `s = Wξ + c` and offset `o = uᵀξ + α`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub feature_map: Vec<f64>,
    pub slope_offset: Vec<f64>,
    pub feature_weights: Vec<f64>,
    pub intercept: f64,
}

impl AffineForm {
    pub fn zero(p: usize, d: usize) -> Self {
        Self {
            feature_map: vec![0.0; p * d],
            slope_offset: vec![0.0; p],
            feature_weights: vec![0.0; d],
            intercept: 0.0,
        }
    }

    fn check(&self, p: usize, d: usize) -> Result<()> {
        if self.feature_map.len() != p * d {
            return Err(Error::DimensionMismatch { expected: p * d, found: self.feature_map.len() });
        }
        if self.slope_offset.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: self.slope_offset.len() });
        }
        if self.feature_weights.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.feature_weights.len() });
        }
        Ok(())
    }

    pub fn slope_into(&self, xi: &[f64], out: &mut [f64]) {
        let d = xi.len();
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.slope_offset[i] + dot(&self.feature_map[i * d..(i + 1) * d], xi);
        }
    }

    pub fn offset(&self, xi: &[f64]) -> f64 {
        dot(&self.feature_weights, xi) + self.intercept
    }

    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        let d = xi.len();
        let mut v = self.offset(xi);
        for (i, xv) in x.iter().enumerate() {
            v += xv * (self.slope_offset[i] + dot(&self.feature_map[i * d..(i + 1) * d], xi));
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    Affine { form: AffineForm },
    /// `weight · max(a(x; ξ), 0)²` with `weight ≥ 0`.
    SquaredPlus { form: AffineForm, weight: f64 },
    Zero,
}

/// A piece frozen at one sample: `sᵀx + o`, or `w · max(sᵀx + o, 0)²` when
/// `weight` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalPiece {
    pub slope: Vec<f64>,
    pub offset: f64,
    pub weight: Option<f64>,
}

impl LocalPiece {
    pub fn value(&self, x: &[f64]) -> f64 {
        let a = dot(&self.slope, x) + self.offset;
        match self.weight {
            None => a,
            Some(w) => {
                let t = math::plus(a);
                w * t * t
            }
        }
    }

    /// Adds `scale · ∇` at `x` to `out`.
    pub fn add_gradient(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        let c = match self.weight {
            None => scale,
            Some(w) => scale * 2.0 * w * math::plus(dot(&self.slope, x) + self.offset),
        };
        crate::linalg::axpy(c, &self.slope, out);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothConvexPiece {
    pub kind: PieceKind,
    pub param_dim: usize,
    pub feature_dim: usize,
}

impl SmoothConvexPiece {
    pub fn new(kind: PieceKind, param_dim: usize, feature_dim: usize) -> Result<Self> {
        let piece = Self { kind, param_dim, feature_dim };
        piece.validate()?;
        Ok(piece)
    }

    pub fn affine(form: AffineForm, param_dim: usize, feature_dim: usize) -> Result<Self> {
        Self::new(PieceKind::Affine { form }, param_dim, feature_dim)
    }

    pub fn squared_plus(form: AffineForm, weight: f64, p: usize, d: usize) -> Result<Self> {
        Self::new(PieceKind::SquaredPlus { form, weight }, p, d)
    }

    pub fn zero(param_dim: usize, feature_dim: usize) -> Self {
        Self { kind: PieceKind::Zero, param_dim, feature_dim }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            PieceKind::Affine { form } => form.check(self.param_dim, self.feature_dim),
            PieceKind::SquaredPlus { form, weight } => {
                if !(*weight >= 0.0) || !weight.is_finite() {
                    return Err(Error::InvalidParameter { name: "weight", value: *weight });
                }
                form.check(self.param_dim, self.feature_dim)
            }
            PieceKind::Zero => Ok(()),
        }
    }

    pub fn is_affine(&self) -> bool {
        !matches!(self.kind, PieceKind::SquaredPlus { .. })
    }

    pub fn value(&self, x: &[f64], xi: &[f64]) -> f64 {
        match &self.kind {
            PieceKind::Affine { form } => form.value(x, xi),
            PieceKind::SquaredPlus { form, weight } => {
                let t = math::plus(form.value(x, xi));
                weight * t * t
            }
            PieceKind::Zero => 0.0,
        }
    }

    pub fn gradient(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.param_dim];
        match &self.kind {
            PieceKind::Affine { form } => form.slope_into(xi, &mut g),
            PieceKind::SquaredPlus { form, weight } => {
                let t = math::plus(form.value(x, xi));
                form.slope_into(xi, &mut g);
                for v in &mut g {
                    *v *= 2.0 * weight * t;
                }
            }
            PieceKind::Zero => {}
        }
        g
    }

    /// Freezes the piece at the feature vector `ξ`.
    pub fn localize(&self, xi: &[f64]) -> LocalPiece {
        let mut slope = vec![0.0; self.param_dim];
        match &self.kind {
            PieceKind::Affine { form } => {
                form.slope_into(xi, &mut slope);
                LocalPiece { slope, offset: form.offset(xi), weight: None }
            }
            PieceKind::SquaredPlus { form, weight } => {
                form.slope_into(xi, &mut slope);
                LocalPiece { slope, offset: form.offset(xi), weight: Some(*weight) }
            }
            PieceKind::Zero => LocalPiece { slope, offset: 0.0, weight: None },
        }
    }

    /// A Lipschitz constant of `x ↦ φ(x; ξ)` on the ball of the given radius.
    ///
    /// Exact for affine and zero pieces (the slope norm, independent of the
    /// radius); an upper bound for squared-plus pieces.
    pub fn lipschitz(&self, xi: &[f64], radius: f64) -> f64 {
        match &self.kind {
            PieceKind::Affine { form } => {
                let mut s = vec![0.0; self.param_dim];
                form.slope_into(xi, &mut s);
                norm(&s)
            }
            PieceKind::SquaredPlus { form, weight } => {
                let mut s = vec![0.0; self.param_dim];
                form.slope_into(xi, &mut s);
                let sn = norm(&s);
                2.0 * weight * math::plus(sn * radius + form.offset(xi)) * sn
            }
            PieceKind::Zero => 0.0,
        }
    }
}

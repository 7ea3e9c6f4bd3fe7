//! The difference-of-max-convex model class, losses, datasets and builders.

mod data;
mod loss;
mod piece;
mod relu;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use data::{Dataset, FeasibleSet, Provenance};
pub use loss::{make_abs_loss, make_squared_loss, LossDecomposition, LossKind};
pub use piece::{AffineForm, LocalPiece, PieceKind, SmoothConvexPiece};
pub use relu::{relu_two_layer_value, ReluSplit, MAX_RELU_WIDTH};

use crate::error::{Error, Result};
use crate::linalg;

/// `m(x; ξ) = max_j f_j(x; ξ) − max_j g_j(x; ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceMaxModel {
    pub f_pieces: Vec<SmoothConvexPiece>,
    pub g_pieces: Vec<SmoothConvexPiece>,
    pub param_dim: usize,
    pub feature_dim: usize,
}

impl DifferenceMaxModel {
    pub fn new(
        f_pieces: Vec<SmoothConvexPiece>,
        g_pieces: Vec<SmoothConvexPiece>,
        param_dim: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        let model = Self { f_pieces, g_pieces, param_dim, feature_dim };
        model.validate()?;
        Ok(model)
    }

    /// Checks the structural invariants; call after deserializing.
    pub fn validate(&self) -> Result<()> {
        if self.f_pieces.is_empty() || self.g_pieces.is_empty() {
            return Err(Error::InvalidSize(String::from("both piece families need at least one piece")));
        }
        if self.param_dim == 0 || self.feature_dim == 0 {
            return Err(Error::InvalidSize(String::from("dimensions must be positive")));
        }
        for piece in self.f_pieces.iter().chain(&self.g_pieces) {
            if piece.param_dim != self.param_dim {
                return Err(Error::DimensionMismatch { expected: self.param_dim, found: piece.param_dim });
            }
            if piece.feature_dim != self.feature_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.feature_dim,
                    found: piece.feature_dim,
                });
            }
            piece.validate()?;
        }
        Ok(())
    }

    pub fn k_f(&self) -> usize {
        self.f_pieces.len()
    }

    pub fn k_g(&self) -> usize {
        self.g_pieces.len()
    }

    pub fn is_piecewise_affine(&self) -> bool {
        self.f_pieces.iter().chain(&self.g_pieces).all(SmoothConvexPiece::is_affine)
    }

    pub fn check_dims(&self, x: &[f64], xi: &[f64]) -> Result<()> {
        if x.len() != self.param_dim {
            return Err(Error::DimensionMismatch { expected: self.param_dim, found: x.len() });
        }
        if xi.len() != self.feature_dim {
            return Err(Error::DimensionMismatch { expected: self.feature_dim, found: xi.len() });
        }
        Ok(())
    }

    pub fn f_values(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        self.f_pieces.iter().map(|p| p.value(x, xi)).collect()
    }

    pub fn g_values(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        self.g_pieces.iter().map(|p| p.value(x, xi)).collect()
    }

    /// `m(x; ξ)` without dimension checks.
    pub fn value_unchecked(&self, x: &[f64], xi: &[f64]) -> f64 {
        max_of(self.f_pieces.iter().map(|p| p.value(x, xi)))
            - max_of(self.g_pieces.iter().map(|p| p.value(x, xi)))
    }

    /// A gradient of `m(·; ξ)` at `x` from the smallest maximizing index of
    /// each family. Exact where both maxima are attained uniquely.
    pub fn selected_gradient(&self, x: &[f64], xi: &[f64]) -> Vec<f64> {
        let jf = argmax_first(&self.f_values(x, xi));
        let jg = argmax_first(&self.g_values(x, xi));
        let mut g = self.f_pieces[jf].gradient(x, xi);
        let gg = self.g_pieces[jg].gradient(x, xi);
        linalg::axpy(-1.0, &gg, &mut g);
        g
    }

    /// A Lipschitz constant `Lip_f(ξ) + Lip_g(ξ)` of `m(·; ξ)` on the ball of
    /// the given radius.
    pub fn lipschitz(&self, xi: &[f64], radius: f64) -> f64 {
        let lf = max_of(self.f_pieces.iter().map(|p| p.lipschitz(xi, radius)));
        let lg = max_of(self.g_pieces.iter().map(|p| p.lipschitz(xi, radius)));
        lf + lg
    }
}

pub(crate) fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest index attaining the maximum.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = j;
        }
    }
    best
}

pub fn model_value(model: &DifferenceMaxModel, x: &[f64], xi: &[f64]) -> Result<f64> {
    model.check_dims(x, xi)?;
    Ok(model.value_unchecked(x, xi))
}

fn check_dataset(model: &DifferenceMaxModel, dataset: &Dataset, x: &[f64]) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.len() != model.param_dim {
        return Err(Error::DimensionMismatch { expected: model.param_dim, found: x.len() });
    }
    if dataset.feature_dim() != model.feature_dim {
        return Err(Error::DimensionMismatch { expected: model.feature_dim, found: dataset.feature_dim() });
    }
    Ok(())
}

/// Per-sample losses `h(m(x; ξⁿ); zⁿ)`.
pub fn sample_losses(model: &DifferenceMaxModel, loss: LossKind, dataset: &Dataset, x: &[f64]) -> Result<Vec<f64>> {
    check_dataset(model, dataset, x)?;
    Ok(dataset.samples().map(|(xi, z)| loss.at(z).value(model.value_unchecked(x, xi))).collect())
}

/// `M_N(x) = (1/N) Σₙ h(m(x; ξⁿ); zⁿ)`.
pub fn empirical_risk(model: &DifferenceMaxModel, loss: LossKind, dataset: &Dataset, x: &[f64]) -> Result<f64> {
    let losses = sample_losses(model, loss, dataset, x)?;
    Ok(losses.iter().sum::<f64>() / dataset.len() as f64)
}

/// A limiting gradient of `M_N` at `x`: the right derivative of the loss times
/// the smallest-index gradient of the model, averaged over samples.
pub fn empirical_gradient(model: &DifferenceMaxModel, loss: LossKind, dataset: &Dataset, x: &[f64]) -> Result<Vec<f64>> {
    check_dataset(model, dataset, x)?;
    let mut grad = vec![0.0; model.param_dim];
    let inv_n = 1.0 / dataset.len() as f64;
    for (xi, z) in dataset.samples() {
        let m = model.value_unchecked(x, xi);
        let dh = loss.at(z).right_derivative(m);
        if dh != 0.0 {
            linalg::axpy(dh * inv_n, &model.selected_gradient(x, xi), &mut grad);
        }
    }
    Ok(grad)
}

/// `m(x; ξ) = |xᵀξ|` written as `max(xᵀξ, −xᵀξ) − 0`.
pub fn build_phase_retrieval_model(p: usize) -> Result<DifferenceMaxModel> {
    if p == 0 {
        return Err(Error::InvalidSize(String::from("dimension must be positive")));
    }
    let identity = linalg::identity(p);
    let negated: Vec<f64> = identity.iter().map(|v| -v).collect();
    let plus = AffineForm {
        feature_map: identity,
        slope_offset: vec![0.0; p],
        feature_weights: vec![0.0; p],
        intercept: 0.0,
    };
    let minus = AffineForm { feature_map: negated, ..plus.clone() };
    DifferenceMaxModel::new(
        vec![SmoothConvexPiece::affine(plus, p, p)?, SmoothConvexPiece::affine(minus, p, p)?],
        vec![SmoothConvexPiece::affine(AffineForm::zero(p, p), p, p)?],
        p,
        p,
    )
}

/// Piecewise-affine regression
/// `m(x; ξ) = max_j (aʲᵀξ + αⱼ) − max_j (bʲᵀξ + βⱼ)`.
///
/// The parameter is packed as `(a¹, α₁, …, a^{k_f}, α_{k_f}, b¹, β₁, …)`,
/// so `p = (k_f + k_g)(d + 1)`.
pub fn build_piecewise_affine_model(k_f: usize, k_g: usize, d: usize) -> Result<DifferenceMaxModel> {
    if k_f == 0 || k_g == 0 || d == 0 {
        return Err(Error::InvalidSize(String::from("k_f, k_g and d must be positive")));
    }
    let block = d + 1;
    let p = (k_f + k_g) * block;
    let piece = |j: usize| -> Result<SmoothConvexPiece> {
        let mut form = AffineForm::zero(p, d);
        for i in 0..d {
            form.feature_map[(j * block + i) * d + i] = 1.0;
        }
        form.slope_offset[j * block + d] = 1.0;
        SmoothConvexPiece::affine(form, p, d)
    };
    let f = (0..k_f).map(piece).collect::<Result<Vec<_>>>()?;
    let g = (k_f..k_f + k_g).map(piece).collect::<Result<Vec<_>>>()?;
    DifferenceMaxModel::new(f, g, p, d)
}

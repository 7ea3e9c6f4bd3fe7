use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::SampleTable;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::math;
use crate::model::{build_phase_retrieval_model, empirical_gradient, Dataset, DifferenceMaxModel, LossKind};
use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClarkeProbe {
    /// `‖½(∇M_N(x̂/k) + ∇M_N(−x̂/k))‖`
    pub averaged_gradient_norm: f64,
    /// `M_N′(0; x̄)`
    pub directional_derivative: f64,
}

/// Probes the origin of the squared-loss phase retrieval risk.
///
/// Gradients at `±x̂/k` (smallest-index selection at ties) converge to a
/// pair of limiting gradients whose average lies in the Clarke
/// subdifferential at 0; the directional derivative along `x̄` shows whether
/// 0 is d-stationary. `x̂` must be nonzero and orthogonal to `x̄`.
pub fn clarke_probe_origin(dataset: &Dataset, x_hat: &[f64], x_ref: &[f64], k: f64) -> Result<ClarkeProbe> {
    let p = dataset.feature_dim();
    for v in [x_hat, x_ref] {
        if v.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: v.len() });
        }
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::InvalidParameter { name: "k", value: k });
    }
    let nh = norm(x_hat);
    let nr = norm(x_ref);
    if nh == 0.0 {
        return Err(Error::DegenerateDirection("probe direction is zero"));
    }
    if nr == 0.0 {
        return Err(Error::DegenerateDirection("reference direction is zero"));
    }
    if math::abs(dot(x_hat, x_ref)) > 1e-10 * nh * nr {
        return Err(Error::DegenerateDirection("probe direction is not orthogonal to the reference"));
    }
    let model = build_phase_retrieval_model(p)?;
    let plus: Vec<f64> = x_hat.iter().map(|v| v / k).collect();
    let minus: Vec<f64> = plus.iter().map(|v| -v).collect();
    let g1 = empirical_gradient(&model, LossKind::Squared, dataset, &plus)?;
    let g2 = empirical_gradient(&model, LossKind::Squared, dataset, &minus)?;
    let avg: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| 0.5 * (a + b)).collect();
    let table = SampleTable::new(&model, dataset)?;
    let dd = table.directional_derivative(LossKind::Squared, &vec![0.0; p], x_ref)?;
    Ok(ClarkeProbe { averaged_gradient_norm: norm(&avg), directional_derivative: dd })
}

/// Sampled lower estimates of the separation constants of both families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationMargin {
    pub f_margin: f64,
    pub g_margin: f64,
}

impl SeparationMargin {
    pub fn value(&self) -> f64 {
        self.f_margin.min(self.g_margin)
    }
}

/// Gap between the largest and second-largest value, counting repeats, so a
/// tie for the maximum gives 0; a single value gives `+∞`.
fn top_gap(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in values {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    first - second
}

/// Estimates `inf over 𝔹_δ(x) and samples` of the gap between the leading
/// piece and the rest, for each family, from `sample_count` uniform points of
/// the ball plus its center.
pub fn sufficient_separation_margin(
    model: &DifferenceMaxModel,
    dataset: &Dataset,
    x: &[f64],
    delta: f64,
    sample_count: usize,
    seed: u64,
) -> Result<SeparationMargin> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter { name: "delta", value: delta });
    }
    let table = SampleTable::new(model, dataset)?;
    table.check_point(x)?;
    let p = x.len();
    let mut rng = Stream::new(seed, 0);
    let mut dir = vec![0.0; p];
    let mut y = x.to_vec();
    let mut margin = SeparationMargin { f_margin: f64::INFINITY, g_margin: f64::INFINITY };
    for i in 0..=sample_count {
        if i > 0 {
            rng.unit_sphere(&mut dir);
            let r = delta * libm::pow(rng.uniform(), 1.0 / p as f64);
            for k in 0..p {
                y[k] = x[k] + r * dir[k];
            }
        }
        for n in 0..table.len() {
            margin.f_margin = margin.f_margin.min(top_gap(&table.f_values(n, &y)));
            margin.g_margin = margin.g_margin.min(top_gap(&table.g_values(n, &y)));
        }
    }
    Ok(margin)
}

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, norm};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: Option<u64>,
    pub generator: String,
}

/// `N` samples `(ξⁿ, zⁿ)`, features stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_dim: usize,
    features: Vec<f64>,
    responses: Vec<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn from_rows(rows: &[Vec<f64>], responses: Vec<f64>) -> Result<Self> {
        let d = rows.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        let mut features = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::DimensionMismatch { expected: d, found: r.len() });
            }
            features.extend_from_slice(r);
        }
        Self::from_flat(d, features, responses)
    }

    pub fn from_flat(feature_dim: usize, features: Vec<f64>, responses: Vec<f64>) -> Result<Self> {
        if responses.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if feature_dim == 0 {
            return Err(Error::InvalidSize(String::from("feature dimension must be positive")));
        }
        if features.len() != feature_dim * responses.len() {
            return Err(Error::DimensionMismatch {
                expected: feature_dim * responses.len(),
                found: features.len(),
            });
        }
        Ok(Self { feature_dim, features, responses, provenance: Provenance::default() })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn feature(&self, n: usize) -> &[f64] {
        &self.features[n * self.feature_dim..(n + 1) * self.feature_dim]
    }

    pub fn response(&self, n: usize) -> f64 {
        self.responses[n]
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn features_flat(&self) -> &[f64] {
        &self.features
    }

    pub fn samples(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.features.chunks_exact(self.feature_dim).zip(self.responses.iter().copied())
    }

    /// The dataset with samples reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: order.len() });
        }
        let mut features = Vec::with_capacity(self.features.len());
        let mut responses = Vec::with_capacity(self.len());
        for &n in order {
            if n >= self.len() {
                return Err(Error::InvalidSize(String::from("permutation index out of range")));
            }
            features.extend_from_slice(self.feature(n));
            responses.push(self.responses[n]);
        }
        Ok(Self { feature_dim: self.feature_dim, features, responses, provenance: self.provenance.clone() })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum FeasibleSet {
    /// `{x : ‖x‖ ≤ radius}`
    Ball { radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl FeasibleSet {
    pub fn validate(&self, p: usize) -> Result<()> {
        match self {
            FeasibleSet::Ball { radius } => {
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter { name: "radius", value: *radius });
                }
            }
            FeasibleSet::Box { lower, upper } => {
                if lower.len() != p || upper.len() != p {
                    return Err(Error::DimensionMismatch { expected: p, found: lower.len().min(upper.len()) });
                }
                for (l, u) in lower.iter().zip(upper) {
                    if !(l < u) {
                        return Err(Error::InvalidParameter { name: "box bounds", value: u - l });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            FeasibleSet::Ball { radius } => {
                let n = norm(x);
                if n > *radius * (1.0 + 4.0 * f64::EPSILON) {
                    let s = radius / n;
                    for v in x.iter_mut() {
                        *v *= s;
                    }
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
                    *v = v.clamp(*l, *u);
                }
            }
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.project_in_place(&mut y);
        y
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        dist(&self.project(x), x) <= tol
    }

    /// Largest distance from the origin to a point of the set.
    pub fn outer_radius(&self) -> f64 {
        match self {
            FeasibleSet::Ball { radius } => *radius,
            FeasibleSet::Box { lower, upper } => crate::math::sqrt(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        let m = crate::math::abs(*l).max(crate::math::abs(*u));
                        m * m
                    })
                    .sum(),
            ),
        }
    }
}

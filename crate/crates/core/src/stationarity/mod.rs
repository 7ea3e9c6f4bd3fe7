//! ε-argmax index sets, surrogate majorants and stationarity tests.

pub(crate) mod certify;
mod probe;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use certify::{
    certify_strong_dstationarity, ambiguous_samples, Certificate, CertifyConfig, CombinationRecord, Verdict,
};
pub use probe::{clarke_probe_origin, sufficient_separation_margin, ClarkeProbe, SeparationMargin};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{max_of, Dataset, DifferenceMaxModel, LocalPiece, LossKind};
use crate::solver::{Atom, ConvexProgram, Curvature, MaxTerm};

/// Indices within `eps` of the maximum, ascending.
pub fn argmax_within(values: &[f64], eps: f64) -> Vec<usize> {
    let m = max_of(values.iter().copied());
    values.iter().enumerate().filter(|(_, v)| **v >= m - eps).map(|(j, _)| j).collect()
}

/// ε-argmax sets of both families at one `(x, ξ)`. Indices are 0-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsArgmax {
    pub eps: f64,
    pub f_set: Vec<usize>,
    pub g_set: Vec<usize>,
    pub f_values: Vec<f64>,
    pub g_values: Vec<f64>,
}

impl EpsArgmax {
    pub fn from_values(f_values: Vec<f64>, g_values: Vec<f64>, eps: f64) -> Self {
        let f_set = argmax_within(&f_values, eps);
        let g_set = argmax_within(&g_values, eps);
        Self { eps, f_set, g_set, f_values, g_values }
    }

    pub fn is_ambiguous(&self) -> bool {
        self.f_set.len() > 1 || self.g_set.len() > 1
    }

    pub fn choices(&self) -> usize {
        self.f_set.len() * self.g_set.len()
    }

    /// Smallest index attaining each exact maximum.
    pub fn exact_pair(&self) -> (usize, usize) {
        (argmax_within(&self.f_values, 0.0)[0], argmax_within(&self.g_values, 0.0)[0])
    }
}

pub fn eps_argmax(model: &DifferenceMaxModel, x: &[f64], xi: &[f64], eps: f64) -> Result<EpsArgmax> {
    check_eps(eps)?;
    model.check_dims(x, xi)?;
    Ok(EpsArgmax::from_values(model.f_values(x, xi), model.g_values(x, xi), eps))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter { name: "eps", value: eps });
    }
    Ok(())
}

/// Gap between the maximum and the largest value strictly below it;
/// `+∞` when all values are equal.
fn leading_gap(values: &[f64]) -> f64 {
    let m = max_of(values.iter().copied());
    let below = max_of(values.iter().copied().filter(|v| *v < m));
    m - below
}

/// `½ · min(leading gap of f, leading gap of g)`: every `ε` in `[0, ε̄]`
/// leaves both ε-argmax sets equal to the exact argmax sets.
pub fn stability_radius_from_values(f_values: &[f64], g_values: &[f64]) -> f64 {
    0.5 * leading_gap(f_values).min(leading_gap(g_values))
}

pub fn stability_radius(model: &DifferenceMaxModel, x: &[f64], xi: &[f64]) -> Result<f64> {
    model.check_dims(x, xi)?;
    Ok(stability_radius_from_values(&model.f_values(x, xi), &model.g_values(x, xi)))
}

/// One index pair `(j₁ₙ, j₂ₙ)` per sample.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSelection {
    pub f_index: Vec<usize>,
    pub g_index: Vec<usize>,
}

impl IndexSelection {
    /// Smallest exact maximizer per sample.
    pub fn exact(sets: &[EpsArgmax]) -> Self {
        let (f_index, g_index) = sets.iter().map(EpsArgmax::exact_pair).unzip();
        Self { f_index, g_index }
    }

    pub fn len(&self) -> usize {
        self.f_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_index.is_empty()
    }

    pub fn validate(&self, sets: &[EpsArgmax]) -> Result<()> {
        if self.f_index.len() != sets.len() || self.g_index.len() != sets.len() {
            return Err(Error::DimensionMismatch { expected: sets.len(), found: self.f_index.len() });
        }
        for (n, s) in sets.iter().enumerate() {
            if !s.f_set.contains(&self.f_index[n]) || !s.g_set.contains(&self.g_index[n]) {
                return Err(Error::InvalidSelection { sample: n });
            }
        }
        Ok(())
    }
}

/// Every piece of the model frozen at every sample, so repeated surrogate
/// construction only touches `p`-vectors.
#[derive(Clone, Debug)]
pub struct SampleTable {
    param_dim: usize,
    samples: Vec<LocalSample>,
}

#[derive(Clone, Debug)]
struct LocalSample {
    f: Vec<LocalPiece>,
    g: Vec<LocalPiece>,
    z: f64,
}

/// `(slope, offset)` of the linearization of a piece at `anchor`.
fn linearize(piece: &LocalPiece, anchor: &[f64]) -> (Vec<f64>, f64) {
    match piece.weight {
        None => (piece.slope.clone(), piece.offset),
        Some(_) => {
            let mut grad = vec![0.0; piece.slope.len()];
            piece.add_gradient(anchor, 1.0, &mut grad);
            let offset = piece.value(anchor) - dot(&grad, anchor);
            (grad, offset)
        }
    }
}

impl SampleTable {
    pub fn new(model: &DifferenceMaxModel, dataset: &Dataset) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if dataset.feature_dim() != model.feature_dim {
            return Err(Error::DimensionMismatch { expected: model.feature_dim, found: dataset.feature_dim() });
        }
        let samples = dataset
            .samples()
            .map(|(xi, z)| LocalSample {
                f: model.f_pieces.iter().map(|p| p.localize(xi)).collect(),
                g: model.g_pieces.iter().map(|p| p.localize(xi)).collect(),
                z,
            })
            .collect();
        Ok(Self { param_dim: model.param_dim, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.param_dim {
            return Err(Error::DimensionMismatch { expected: self.param_dim, found: x.len() });
        }
        Ok(())
    }

    pub fn response(&self, n: usize) -> f64 {
        self.samples[n].z
    }

    pub fn f_values(&self, n: usize, x: &[f64]) -> Vec<f64> {
        self.samples[n].f.iter().map(|p| p.value(x)).collect()
    }

    pub fn g_values(&self, n: usize, x: &[f64]) -> Vec<f64> {
        self.samples[n].g.iter().map(|p| p.value(x)).collect()
    }

    pub fn model_value(&self, n: usize, x: &[f64]) -> f64 {
        let s = &self.samples[n];
        max_of(s.f.iter().map(|p| p.value(x))) - max_of(s.g.iter().map(|p| p.value(x)))
    }

    pub fn sample_losses(&self, loss: LossKind, x: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|n| loss.at(self.samples[n].z).value(self.model_value(n, x))).collect()
    }

    pub fn risk(&self, loss: LossKind, x: &[f64]) -> f64 {
        self.sample_losses(loss, x).iter().sum::<f64>() / self.len() as f64
    }

    pub fn eps_sets(&self, x: &[f64], eps: f64) -> Vec<EpsArgmax> {
        (0..self.len())
            .map(|n| EpsArgmax::from_values(self.f_values(n, x), self.g_values(n, x), eps))
            .collect()
    }

    /// `(R↑, R↓, R)` at `y` for anchor `x̄` and the given ε-argmax sets.
    pub fn surrogate_value(&self, loss: LossKind, anchor: &[f64], sets: &[EpsArgmax], y: &[f64]) -> SurrogateValue {
        let mut up = 0.0;
        let mut down = 0.0;
        for (s, set) in self.samples.iter().zip(sets) {
            let f_y = max_of(s.f.iter().map(|p| p.value(y)));
            let g_y = max_of(s.g.iter().map(|p| p.value(y)));
            let lin_g = max_of(set.g_set.iter().map(|&j| {
                let (sl, o) = linearize(&s.g[j], anchor);
                dot(&sl, y) + o
            }));
            let lin_f = max_of(set.f_set.iter().map(|&j| {
                let (sl, o) = linearize(&s.f[j], anchor);
                dot(&sl, y) + o
            }));
            up += loss.psi(f_y - lin_g - s.z);
            down += loss.psi(s.z - lin_f + g_y);
        }
        let n = self.len() as f64;
        let (up, down) = (up / n, down / n);
        SurrogateValue { up, down, total: up + down }
    }

    /// Lowers `M̂_{N;J₁,J₂}(·, x̄) + (c/2)‖· − x̄‖²` to a [`ConvexProgram`].
    ///
    /// Terms whose atoms are all constant are folded into the constant.
    pub fn lower(&self, loss: LossKind, anchor: &[f64], selection: &IndexSelection, prox: f64) -> ConvexProgram {
        let mut terms = Vec::with_capacity(2 * self.len());
        let mut constant = 0.0;
        for (n, s) in self.samples.iter().enumerate() {
            let (lg_slope, lg_off) = linearize(&s.g[selection.g_index[n]], anchor);
            let (lf_slope, lf_off) = linearize(&s.f[selection.f_index[n]], anchor);
            let up = build_term(&s.f, &lg_slope, lg_off + s.z);
            let down = build_term(&s.g, &lf_slope, lf_off - s.z);
            for term in [up, down] {
                match term {
                    Ok(t) => terms.push(t),
                    Err(c) => constant += loss.psi(c),
                }
            }
        }
        let scale = 1.0 / self.len() as f64;
        ConvexProgram {
            dim: self.param_dim,
            outer: loss,
            scale,
            constant: constant * scale,
            terms,
            prox_weight: prox,
            prox_center: anchor.to_vec(),
        }
    }
}

/// Term `ψ(max_j [piece_j(y) − (linᵀy + lin_off)])`, or the constant inside
/// `ψ` if every atom is constant.
fn build_term(pieces: &[LocalPiece], lin: &[f64], lin_off: f64) -> core::result::Result<MaxTerm, f64> {
    let mut atoms = Vec::with_capacity(pieces.len());
    let mut all_constant = true;
    for piece in pieces {
        let atom = match piece.weight {
            None => {
                let slope: Vec<f64> = piece.slope.iter().zip(lin).map(|(a, b)| a - b).collect();
                Atom { slope, offset: piece.offset - lin_off, curved: None }
            }
            Some(w) => Atom {
                slope: lin.iter().map(|v| -v).collect(),
                offset: -lin_off,
                curved: Some(Curvature { weight: w, slope: piece.slope.clone(), offset: piece.offset }),
            },
        };
        if atom.curved.is_some() || atom.slope.iter().any(|v| *v != 0.0) {
            all_constant = false;
        }
        atoms.push(atom);
    }
    if all_constant {
        return Err(max_of(atoms.iter().map(|a| a.offset)));
    }
    Ok(MaxTerm { atoms })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateValue {
    pub up: f64,
    pub down: f64,
    pub total: f64,
}

/// `R_{N;x̄;ε}(y, x̄)` split into its nondecreasing and nonincreasing parts.
pub fn surrogate_value(
    model: &DifferenceMaxModel,
    loss: LossKind,
    dataset: &Dataset,
    anchor: &[f64],
    eps: f64,
    y: &[f64],
) -> Result<SurrogateValue> {
    check_eps(eps)?;
    let table = SampleTable::new(model, dataset)?;
    table.check_point(anchor)?;
    table.check_point(y)?;
    let sets = table.eps_sets(anchor, eps);
    Ok(table.surrogate_value(loss, anchor, &sets, y))
}

/// The convex surrogate `M̂_{N;J₁,J₂}(·, x̄) + (c/2)‖· − x̄‖²` for one index
/// selection.
#[derive(Clone, Debug)]
pub struct SurrogateProblem<'a> {
    pub model: &'a DifferenceMaxModel,
    pub loss: LossKind,
    pub dataset: &'a Dataset,
    pub anchor: Vec<f64>,
    pub eps: f64,
    pub selection: IndexSelection,
    pub prox: f64,
    program: ConvexProgram,
}

impl<'a> SurrogateProblem<'a> {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.program.value(x)
    }

    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.program.subgradient(x)
    }

    pub fn program(&self) -> &ConvexProgram {
        &self.program
    }
}

#[allow(clippy::too_many_arguments)]
pub fn build_surrogate<'a>(
    model: &'a DifferenceMaxModel,
    loss: LossKind,
    dataset: &'a Dataset,
    anchor: &[f64],
    eps: f64,
    selection: IndexSelection,
    prox: f64,
) -> Result<SurrogateProblem<'a>> {
    check_eps(eps)?;
    if !(prox >= 0.0) {
        return Err(Error::InvalidParameter { name: "prox", value: prox });
    }
    let table = SampleTable::new(model, dataset)?;
    table.check_point(anchor)?;
    let sets = table.eps_sets(anchor, eps);
    selection.validate(&sets)?;
    let program = table.lower(loss, anchor, &selection, prox);
    Ok(SurrogateProblem { model, loss, dataset, anchor: anchor.to_vec(), eps, selection, prox, program })
}

/// One-sided directional derivative `M_N′(x; v)` for a differentiable loss:
/// `(1/N) Σₙ h′(m(x; ξⁿ)) · m′(x; ξⁿ; v)` with
/// `m′ = max_{j∈𝒜_f} ∇f_jᵀv − max_{j∈𝒜_g} ∇g_jᵀv` over exact argmax sets.
pub fn directional_derivative(
    model: &DifferenceMaxModel,
    loss: LossKind,
    dataset: &Dataset,
    x: &[f64],
    v: &[f64],
) -> Result<f64> {
    let table = SampleTable::new(model, dataset)?;
    table.directional_derivative(loss, x, v)
}

impl SampleTable {
    pub fn directional_derivative(&self, loss: LossKind, x: &[f64], v: &[f64]) -> Result<f64> {
        if !loss.is_differentiable() {
            return Err(Error::NondifferentiableLoss);
        }
        self.check_point(x)?;
        self.check_point(v)?;
        let mut total = 0.0;
        let mut grad = vec![0.0; self.param_dim];
        for (n, s) in self.samples.iter().enumerate() {
            let fv = self.f_values(n, x);
            let gv = self.g_values(n, x);
            let dir = |pieces: &[LocalPiece], set: Vec<usize>, grad: &mut Vec<f64>| {
                max_of(set.into_iter().map(|j| {
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    pieces[j].add_gradient(x, 1.0, grad);
                    dot(grad, v)
                }))
            };
            let m_dir = dir(&s.f, argmax_within(&fv, 0.0), &mut grad) - dir(&s.g, argmax_within(&gv, 0.0), &mut grad);
            let m = max_of(fv.into_iter()) - max_of(gv.into_iter());
            total += loss.at(s.z).right_derivative(m) * m_dir;
        }
        Ok(total / self.len() as f64)
    }
}

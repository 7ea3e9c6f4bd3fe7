use alloc::vec::Vec;

use crate::linalg::{axpy, dot};
use crate::math;
use crate::model::LossKind;

/// `weight · max(slopeᵀx + offset, 0)²`
#[derive(Clone, Debug, PartialEq)]
pub struct Curvature {
    pub weight: f64,
    pub slope: Vec<f64>,
    pub offset: f64,
}

impl Curvature {
    #[inline]
    fn inner(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.offset
    }
}

/// `slopeᵀx + offset (+ curvature term)`, convex in `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub slope: Vec<f64>,
    pub offset: f64,
    pub curved: Option<Curvature>,
}

impl Atom {
    pub fn affine(slope: Vec<f64>, offset: f64) -> Self {
        Self { slope, offset, curved: None }
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = dot(&self.slope, x) + self.offset;
        if let Some(c) = &self.curved {
            let t = math::plus(c.inner(x));
            v += c.weight * t * t;
        }
        v
    }

    /// `atom(x + alpha·dx) − atom(x)` without forming both values.
    pub fn change(&self, x: &[f64], dx: &[f64], alpha: f64) -> f64 {
        let mut d = alpha * dot(&self.slope, dx);
        if let Some(c) = &self.curved {
            let u = c.inner(x);
            let v = alpha * dot(&c.slope, dx);
            let (a, b) = (math::plus(u), math::plus(u + v));
            d += c.weight * if u > 0.0 && u + v > 0.0 { v * (2.0 * u + v) } else { b * b - a * a };
        }
        d
    }

    /// Adds `scale · ∇atom(x)` to `out`.
    #[inline]
    pub fn add_gradient(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        axpy(scale, &self.slope, out);
        if let Some(c) = &self.curved {
            let t = math::plus(c.inner(x));
            if t > 0.0 {
                axpy(scale * 2.0 * c.weight * t, &c.slope, out);
            }
        }
    }
}

/// `ψ(max_j atom_j(x))` for the program's outer function `ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxTerm {
    pub atoms: Vec<Atom>,
}

impl MaxTerm {
    pub fn max_atom(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (j, a) in self.atoms.iter().enumerate() {
            let v = a.value(x);
            if v > best.1 {
                best = (j, v);
            }
        }
        best
    }
}

/// A convex program
///
/// ```text
/// minimize  constant + scale · Σ_t ψ(max_j atom_tj(x)) + (c/2)‖x − center‖²
/// ```
///
/// where `ψ(u) = max(u, 0)²` for squared losses and `max(u, 0)` for the
/// absolute loss. Every surrogate subproblem lowers to this form.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexProgram {
    pub dim: usize,
    pub outer: LossKind,
    pub scale: f64,
    pub constant: f64,
    pub terms: Vec<MaxTerm>,
    pub prox_weight: f64,
    pub prox_center: Vec<f64>,
}

impl ConvexProgram {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for t in &self.terms {
            sum += self.outer.psi(t.max_atom(x).1);
        }
        self.constant + self.scale * sum + self.prox(x)
    }

    fn prox(&self, x: &[f64]) -> f64 {
        if self.prox_weight == 0.0 {
            return 0.0;
        }
        let d: f64 = x.iter().zip(&self.prox_center).map(|(a, b)| (a - b) * (a - b)).sum();
        0.5 * self.prox_weight * d
    }

    /// A subgradient, taking the smallest maximizing atom and the right
    /// derivative of `ψ`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = alloc::vec![0.0; self.dim];
        for t in &self.terms {
            let (j, v) = t.max_atom(x);
            let d = self.outer.psi_right_derivative(v);
            if d != 0.0 {
                t.atoms[j].add_gradient(x, self.scale * d, &mut g);
            }
        }
        if self.prox_weight != 0.0 {
            for ((gi, xi), ci) in g.iter_mut().zip(x).zip(&self.prox_center) {
                *gi += self.prox_weight * (xi - ci);
            }
        }
        g
    }

    /// Number of scalar inequality constraints in the epigraph reformulation
    /// (one per atom plus one nonnegativity constraint per term).
    pub fn epigraph_constraints(&self) -> usize {
        self.terms.iter().map(|t| t.atoms.len() + 1).sum()
    }
}

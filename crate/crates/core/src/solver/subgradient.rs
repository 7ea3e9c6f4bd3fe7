//! Projected subgradient method with optional iterate averaging.
//!
//! Every evaluated point yields a lower bound on the optimal value from its
//! subgradient `g`: `F(x) − max_{y∈X} gᵀ(x − y)`, and additionally
//! `F(x) − ‖g‖²/(2c)` when the program has proximal weight `c > 0`. The best
//! such bound gives the reported gap.

use alloc::vec::Vec;

use super::program::ConvexProgram;
use super::StepRule;
use crate::linalg::{dot, norm};
use crate::model::FeasibleSet;

pub(crate) struct SubgradientOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub lower_bound: f64,
    pub iterations: usize,
}

fn linear_drop(set: &FeasibleSet, x: &[f64], g: &[f64]) -> f64 {
    match set {
        FeasibleSet::Ball { radius } => dot(g, x) + radius * norm(g),
        FeasibleSet::Box { lower, upper } => x
            .iter()
            .zip(g)
            .zip(lower.iter().zip(upper))
            .map(|((xi, gi), (l, u))| (gi * (xi - l)).max(gi * (xi - u)))
            .sum(),
    }
}

fn lower_bound_at(prog: &ConvexProgram, set: &FeasibleSet, x: &[f64], fx: f64, g: &[f64]) -> f64 {
    let mut drop = linear_drop(set, x, g);
    if prog.prox_weight > 0.0 {
        let gn = norm(g);
        drop = drop.min(gn * gn / (2.0 * prog.prox_weight));
    }
    fx - drop
}

pub(crate) fn solve(
    prog: &ConvexProgram,
    x0: &[f64],
    set: &FeasibleSet,
    rule: StepRule,
    averaging: bool,
    gap_tol: f64,
    max_iterations: usize,
) -> SubgradientOutcome {
    let p = prog.dim;
    let mut x = set.project(x0);
    let mut best_x = x.clone();
    let mut best_val = prog.value(&x);
    let mut lower = f64::NEG_INFINITY;
    let mut avg = x.clone();
    let mut weight_sum = 0.0;
    let mut iterations = 0;

    for k in 0..max_iterations {
        iterations = k + 1;
        let fx = prog.value(&x);
        let g = prog.subgradient(&x);
        if fx < best_val {
            best_val = fx;
            best_x.copy_from_slice(&x);
        }
        lower = lower.max(lower_bound_at(prog, set, &x, fx, &g));
        if best_val - lower <= gap_tol {
            break;
        }
        let gn = norm(&g);
        if gn == 0.0 {
            break;
        }
        let step = match rule {
            StepRule::Diminishing { a, b } => a / (k as f64 + b),
            StepRule::Constant { step } => step,
        };
        for i in 0..p {
            x[i] -= step * g[i] / gn;
        }
        set.project_in_place(&mut x);
        if averaging {
            weight_sum += step;
            let w = step / weight_sum;
            for i in 0..p {
                avg[i] += w * (x[i] - avg[i]);
            }
            let fa = prog.value(&avg);
            if fa < best_val {
                best_val = fa;
                best_x.copy_from_slice(&avg);
            }
        }
    }
    SubgradientOutcome { x: best_x, value: best_val, lower_bound: lower, iterations }
}

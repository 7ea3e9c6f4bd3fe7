//! Log-barrier interior-point method for [`ConvexProgram`].
//!
//! The program is solved in epigraph form with one auxiliary variable per
//! term,
//!
//! ```text
//! minimize  scale · Σ_t ψ(s_t) + (c/2)‖x − center‖²
//! s.t.      s_t ≥ atom_tj(x),  s_t ≥ 0,  x ∈ X,
//! ```
//!
//! following the central path with damped Newton steps. The auxiliary
//! variables are eliminated block by block, so each Newton step costs one
//! `p × p` Cholesky factorization. After centering at barrier weight `t` the
//! duality gap is at most about `m / t` for `m` inequality constraints.

use alloc::vec;
use alloc::vec::Vec;

use super::program::ConvexProgram;
use crate::linalg::{cholesky_solve, dot, norm_sq, rank1_diff_upper, rank1_upper, symmetrize_from_upper};
use crate::math;
use crate::model::{FeasibleSet, LossKind};

pub(crate) struct BarrierOutcome {
    pub x: Vec<f64>,
    pub gap_bound: f64,
    pub iterations: usize,
}

const GROWTH: f64 = 16.0;
const CENTERING_TOL: f64 = 1e-9;
const INTERIOR_MARGIN: f64 = 1e-2;
const ARMIJO: f64 = 0.01;

fn interior_start(set: &FeasibleSet, x0: &[f64]) -> Vec<f64> {
    let mut x = set.project(x0);
    match set {
        FeasibleSet::Ball { radius } => {
            let n = math::sqrt(norm_sq(&x));
            let cap = (1.0 - INTERIOR_MARGIN) * radius;
            if n > cap {
                for v in &mut x {
                    *v *= cap / n;
                }
            }
        }
        FeasibleSet::Box { lower, upper } => {
            for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
                let w = INTERIOR_MARGIN * (u - l);
                *v = v.clamp(l + w, u - w);
            }
        }
    }
    x
}

fn set_constraints(set: &FeasibleSet, p: usize) -> usize {
    match set {
        FeasibleSet::Ball { .. } => 1,
        FeasibleSet::Box { .. } => 2 * p,
    }
}

struct Workspace {
    hess: Vec<f64>,
    grad_x: Vec<f64>,
    rhs: Vec<f64>,
    grad_s: Vec<f64>,
    diag_s: Vec<f64>,
    coupling: Vec<f64>,
    atom_grads: Vec<f64>,
    atom_slacks: Vec<f64>,
}

struct Barrier<'a> {
    prog: &'a ConvexProgram,
    set: &'a FeasibleSet,
    p: usize,
}

impl<'a> Barrier<'a> {
    fn feasible(&self, x: &[f64], s: &[f64]) -> bool {
        match self.set {
            FeasibleSet::Ball { radius } => {
                if !(radius * radius - norm_sq(x) > 0.0) {
                    return false;
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for ((v, l), u) in x.iter().zip(lower).zip(upper) {
                    if !(*v > *l && *v < *u) {
                        return false;
                    }
                }
            }
        }
        for (term, &st) in self.prog.terms.iter().zip(s) {
            if !(st > 0.0) {
                return false;
            }
            for a in &term.atoms {
                if !(st - a.value(x) > 0.0) {
                    return false;
                }
            }
        }
        true
    }

    /// Change of the barrier merit along `(dx, ds)` at step `alpha`,
    /// accumulated term by term from slack ratios so it stays accurate when
    /// the merit itself is large. `+∞` outside the domain.
    fn merit_change(&self, t: f64, x: &[f64], s: &[f64], dx: &[f64], ds: &[f64], alpha: f64) -> f64 {
        let prog = self.prog;
        let mut obj = 0.0;
        let mut logs = 0.0;
        for (ti, term) in prog.terms.iter().enumerate() {
            let st = s[ti];
            let dst = alpha * ds[ti];
            obj += match prog.outer {
                LossKind::Squared => dst * (2.0 * st + dst),
                LossKind::Absolute => dst,
            };
            let r = dst / st;
            if !(r > -1.0) {
                return f64::INFINITY;
            }
            logs += math::ln_1p(r);
            for a in &term.atoms {
                let da = a.change(x, dx, alpha);
                let c = st - a.value(x);
                let r = (dst - da) / c;
                if !(r > -1.0) {
                    return f64::INFINITY;
                }
                logs += math::ln_1p(r);
            }
        }
        let mut prox = 0.0;
        if prog.prox_weight > 0.0 {
            let mut lin = 0.0;
            for i in 0..self.p {
                lin += (x[i] - prog.prox_center[i]) * dx[i];
            }
            prox = prog.prox_weight * (alpha * lin + 0.5 * alpha * alpha * norm_sq(dx));
        }
        match self.set {
            FeasibleSet::Ball { radius } => {
                let q = radius * radius - norm_sq(x);
                let r = -(2.0 * alpha * dot(x, dx) + alpha * alpha * norm_sq(dx)) / q;
                if !(r > -1.0) {
                    return f64::INFINITY;
                }
                logs += math::ln_1p(r);
            }
            FeasibleSet::Box { lower, upper } => {
                for i in 0..self.p {
                    let step = alpha * dx[i];
                    let (ru, rl) = (-step / (upper[i] - x[i]), step / (x[i] - lower[i]));
                    if !(ru > -1.0 && rl > -1.0) {
                        return f64::INFINITY;
                    }
                    logs += math::ln_1p(ru) + math::ln_1p(rl);
                }
            }
        }
        t * (prog.scale * obj + prox) - logs
    }

    /// Builds the reduced Newton system and returns `(Δx, Δs, λ²)`.
    fn newton_step(&self, t: f64, x: &[f64], s: &[f64], ws: &mut Workspace) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let p = self.p;
        let prog = self.prog;
        ws.hess.iter_mut().for_each(|v| *v = 0.0);
        ws.grad_x.iter_mut().for_each(|v| *v = 0.0);
        let (dpsi_scale, d2psi) = match prog.outer {
            LossKind::Squared => (2.0, 2.0),
            LossKind::Absolute => (0.0, 0.0),
        };
        let ts = t * prog.scale;

        for (ti, term) in prog.terms.iter().enumerate() {
            let st = s[ti];
            let k = term.atoms.len();
            if ws.atom_grads.len() < k * p {
                ws.atom_grads.resize(k * p, 0.0);
                ws.atom_slacks.resize(k, 0.0);
            }
            let inv0 = 1.0 / st;
            let d0 = inv0 * inv0;
            let dpsi = match prog.outer {
                LossKind::Squared => dpsi_scale * st,
                LossKind::Absolute => 1.0,
            };
            let mut gs = ts * dpsi - inv0;
            let e = ts * d2psi + d0;
            let mut big_d = e;
            let coupling = &mut ws.coupling[ti * p..(ti + 1) * p];
            coupling.iter_mut().for_each(|v| *v = 0.0);
            for (j, a) in term.atoms.iter().enumerate() {
                let gj = &mut ws.atom_grads[j * p..(j + 1) * p];
                gj.iter_mut().for_each(|v| *v = 0.0);
                a.add_gradient(x, 1.0, gj);
                let c = st - a.value(x);
                ws.atom_slacks[j] = c;
                let inv = 1.0 / c;
                let d = inv * inv;
                gs -= inv;
                big_d += d;
                crate::linalg::axpy(inv, gj, &mut ws.grad_x);
                crate::linalg::axpy(d, gj, coupling);
                if let Some(cv) = &a.curved {
                    if dot(&cv.slope, x) + cv.offset > 0.0 {
                        rank1_upper(&mut ws.hess, p, inv * 2.0 * cv.weight, &cv.slope);
                    }
                }
            }
            for j in 0..k {
                let cj = ws.atom_slacks[j];
                let dj = 1.0 / (cj * cj);
                let gj = &ws.atom_grads[j * p..(j + 1) * p];
                rank1_upper(&mut ws.hess, p, e * dj / big_d, gj);
                for l in (j + 1)..k {
                    let cl = ws.atom_slacks[l];
                    let dl = 1.0 / (cl * cl);
                    let gl = &ws.atom_grads[l * p..(l + 1) * p];
                    rank1_diff_upper(&mut ws.hess, p, dj * dl / big_d, gj, gl);
                }
            }
            ws.grad_s[ti] = gs;
            ws.diag_s[ti] = big_d;
        }

        if prog.prox_weight > 0.0 {
            let w = t * prog.prox_weight;
            for i in 0..p {
                ws.hess[i * p + i] += w;
                ws.grad_x[i] += w * (x[i] - prog.prox_center[i]);
            }
        }
        match self.set {
            FeasibleSet::Ball { radius } => {
                let q = radius * radius - norm_sq(x);
                rank1_upper(&mut ws.hess, p, 4.0 / (q * q), x);
                for i in 0..p {
                    ws.hess[i * p + i] += 2.0 / q;
                    ws.grad_x[i] += 2.0 * x[i] / q;
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for i in 0..p {
                    let a = upper[i] - x[i];
                    let b = x[i] - lower[i];
                    ws.hess[i * p + i] += 1.0 / (a * a) + 1.0 / (b * b);
                    ws.grad_x[i] += 1.0 / a - 1.0 / b;
                }
            }
        }
        symmetrize_from_upper(&mut ws.hess, p);

        ws.rhs.copy_from_slice(&ws.grad_x);
        for v in &mut ws.rhs {
            *v = -*v;
        }
        for ti in 0..prog.terms.len() {
            let f = ws.grad_s[ti] / ws.diag_s[ti];
            crate::linalg::axpy(-f, &ws.coupling[ti * p..(ti + 1) * p], &mut ws.rhs);
        }
        let mut dx = ws.rhs.clone();
        let mut h = ws.hess.clone();
        if cholesky_solve(&mut h, p, &mut dx).is_err() {
            let trace: f64 = (0..p).map(|i| ws.hess[i * p + i]).sum();
            let jitter = 1e-12 * (trace / p as f64).max(1e-300);
            let mut h = ws.hess.clone();
            for i in 0..p {
                h[i * p + i] += jitter;
            }
            dx = ws.rhs.clone();
            cholesky_solve(&mut h, p, &mut dx).ok()?;
        }
        let mut ds = vec![0.0; prog.terms.len()];
        let mut dec = dot(&ws.grad_x, &dx);
        for ti in 0..prog.terms.len() {
            let u = &ws.coupling[ti * p..(ti + 1) * p];
            ds[ti] = (-ws.grad_s[ti] + dot(u, &dx)) / ws.diag_s[ti];
            dec += ws.grad_s[ti] * ds[ti];
        }
        let lambda_sq = -dec;
        if !lambda_sq.is_finite() {
            return None;
        }
        Some((dx, ds, lambda_sq.max(0.0)))
    }
}

pub(crate) fn solve(
    prog: &ConvexProgram,
    x0: &[f64],
    set: &FeasibleSet,
    gap_tol: f64,
    max_newton: usize,
) -> BarrierOutcome {
    let p = prog.dim;
    let barrier = Barrier { prog, set, p };
    let mut x = interior_start(set, x0);
    let mut s: Vec<f64> = prog
        .terms
        .iter()
        .map(|t| {
            let v = t.max_atom(&x).1;
            math::plus(v) + 0.1 * (1.0 + math::abs(v))
        })
        .collect();
    let m = (prog.epigraph_constraints() + set_constraints(set, p)) as f64;

    let f0 = prog.scale * s.iter().map(|&st| prog.outer.psi(st)).sum::<f64>();
    let mut t = (m / f0.max(1e-8)).max(1.0);

    let terms = prog.terms.len();
    let mut ws = Workspace {
        hess: vec![0.0; p * p],
        grad_x: vec![0.0; p],
        rhs: vec![0.0; p],
        grad_s: vec![0.0; terms],
        diag_s: vec![0.0; terms],
        coupling: vec![0.0; terms * p],
        atom_grads: vec![0.0; 4 * p],
        atom_slacks: vec![0.0; 4],
    };

    let mut iterations = 0;
    let mut last_lambda_sq = f64::INFINITY;
    loop {
        let mut inner = 0;
        loop {
            if iterations >= max_newton {
                return BarrierOutcome {
                    x,
                    gap_bound: gap_estimate(m, t, last_lambda_sq),
                    iterations,
                };
            }
            let Some((dx, ds, lambda_sq)) = barrier.newton_step(t, &x, &s, &mut ws) else {
                return BarrierOutcome {
                    x,
                    gap_bound: gap_estimate(m, t, last_lambda_sq),
                    iterations,
                };
            };
            last_lambda_sq = lambda_sq;
            if lambda_sq <= CENTERING_TOL || inner >= 60 {
                break;
            }
            let mut alpha = 1.0;
            let mut xn = x.clone();
            let mut sn = s.clone();
            let mut accepted = false;
            for _ in 0..60 {
                let change = barrier.merit_change(t, &x, &s, &dx, &ds, alpha);
                if change <= -ARMIJO * alpha * lambda_sq || (lambda_sq < 1e-6 && change.is_finite()) {
                    for i in 0..p {
                        xn[i] = x[i] + alpha * dx[i];
                    }
                    for i in 0..terms {
                        sn[i] = s[i] + alpha * ds[i];
                    }
                    accepted = barrier.feasible(&xn, &sn);
                    if accepted {
                        break;
                    }
                }
                alpha *= 0.5;
            }
            iterations += 1;
            inner += 1;
            if !accepted {
                break;
            }
            core::mem::swap(&mut x, &mut xn);
            core::mem::swap(&mut s, &mut sn);
        }
        if gap_estimate(m, t, last_lambda_sq) <= gap_tol {
            return BarrierOutcome {
                x,
                gap_bound: gap_estimate(m, t, last_lambda_sq),
                iterations,
            };
        }
        t *= GROWTH;
    }
}

fn gap_estimate(m: f64, t: f64, lambda_sq: f64) -> f64 {
    if !lambda_sq.is_finite() {
        return f64::INFINITY;
    }
    let l = math::sqrt(lambda_sq);
    (m + l * math::sqrt(m) + lambda_sq) / t
}

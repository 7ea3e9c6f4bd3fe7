//! Convex subproblem solvers and the outer majorization-minimization loop.

mod barrier;
mod mm;
mod program;
mod subgradient;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use mm::{mm_solve, multi_start_solve, EnumerationPolicy, MMConfig, MultiStartResult, SolveStatus, SolveTrace};
pub use program::{Atom, ConvexProgram, Curvature, MaxTerm};

use crate::error::{Error, Result};
use crate::model::FeasibleSet;
use crate::stationarity::SurrogateProblem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// `a / (k + b)` at iteration `k`.
    Diminishing { a: f64, b: f64 },
    Constant { step: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Log-barrier interior point on the epigraph form.
    Barrier,
    /// Projected subgradient steps along `−g/‖g‖`.
    ProjectedSubgradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexSolveConfig {
    /// Newton steps for the barrier method, subgradient steps otherwise.
    pub max_iterations: usize,
    pub step_rule: StepRule,
    pub averaging: bool,
    pub gap_tolerance: f64,
    pub feasible_set: FeasibleSet,
    pub method: InnerMethod,
}

impl Default for ConvexSolveConfig {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_rule: StepRule::Diminishing { a: 1.0, b: 1.0 },
            averaging: true,
            gap_tolerance: 1e-9,
            feasible_set: FeasibleSet::Ball { radius: 1e3 },
            method: InnerMethod::Barrier,
        }
    }
}

impl ConvexSolveConfig {
    pub fn with_feasible_set(mut self, set: FeasibleSet) -> Self {
        self.feasible_set = set;
        self
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter { name: "max_iterations", value: 0.0 });
        }
        if !(self.gap_tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "gap_tolerance", value: self.gap_tolerance });
        }
        match self.step_rule {
            StepRule::Diminishing { a, b } if !(a > 0.0 && b > 0.0) => {
                return Err(Error::InvalidParameter { name: "step_rule", value: a.min(b) });
            }
            StepRule::Constant { step } if !(step > 0.0) => {
                return Err(Error::InvalidParameter { name: "step_rule", value: step });
            }
            _ => {}
        }
        self.feasible_set.validate(dim)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Upper bound on `value − min over X`.
    pub gap_bound: f64,
    /// Whether `gap_bound ≤ gap_tolerance` was reached.
    pub converged: bool,
    pub iterations: usize,
}

impl ConvexSolution {
    pub fn lower_bound(&self) -> f64 {
        self.value - self.gap_bound
    }
}

/// Minimizes the surrogate `M̂(·, x̄) + (c/2)‖· − x̄‖²` over the configured
/// feasible set, starting from `x0`.
pub fn solve_convex(problem: &SurrogateProblem<'_>, x0: &[f64], config: &ConvexSolveConfig) -> Result<ConvexSolution> {
    solve_program(problem.program(), x0, config)
}

/// Minimizes a lowered [`ConvexProgram`].
///
/// The returned point is feasible and never worse than the projection of
/// `x0`. An exhausted iteration budget is reported through `converged`
/// rather than as an error.
pub fn solve_program(prog: &ConvexProgram, x0: &[f64], config: &ConvexSolveConfig) -> Result<ConvexSolution> {
    if x0.len() != prog.dim {
        return Err(Error::DimensionMismatch { expected: prog.dim, found: x0.len() });
    }
    config.validate(prog.dim)?;
    let set = &config.feasible_set;
    let start = set.project(x0);
    let start_value = prog.value(&start);

    let (x, value, lower, iterations) = match config.method {
        InnerMethod::Barrier => {
            let out = barrier::solve(prog, &start, set, config.gap_tolerance, config.max_iterations);
            let v = prog.value(&out.x);
            (out.x, v, v - out.gap_bound, out.iterations)
        }
        InnerMethod::ProjectedSubgradient => {
            let out = subgradient::solve(
                prog,
                &start,
                set,
                config.step_rule,
                config.averaging,
                config.gap_tolerance,
                config.max_iterations,
            );
            (out.x, out.value, out.lower_bound, out.iterations)
        }
    };
    if !value.is_finite() {
        return Err(Error::SolverFailure(alloc::string::String::from("non-finite objective")));
    }
    let (x, value) = if start_value < value { (start, start_value) } else { (x, value) };
    let gap_bound = (value - lower).max(0.0);
    Ok(ConvexSolution { converged: gap_bound <= config.gap_tolerance, x, value, gap_bound, iterations })
}

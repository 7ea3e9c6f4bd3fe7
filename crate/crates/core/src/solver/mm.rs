//! Outer majorization-minimization loop.
//!
//! At the current iterate `xᵏ` each step minimizes the convex majorant
//! `M̂_{N;J₁,J₂}(·, xᵏ) + (c/2)‖· − xᵏ‖²` for index selections drawn from the
//! ε-argmax sets, and moves to the best candidate when it strictly lowers
//! `M_N`. Once the step stops moving, the iterate is tested for composite
//! ε-strong d-stationarity; a refuting subproblem supplies a point of lower
//! risk and the loop continues from there.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{solve_program, ConvexSolveConfig};
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::model::{Dataset, DifferenceMaxModel, FeasibleSet, LossKind};
use crate::stationarity::{certify::certify_with_table, Certificate, CertifyConfig, IndexSelection, SampleTable, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnumerationPolicy {
    /// Enumerate combinations over ambiguous samples at every step (up to
    /// the budget, exact selection only beyond it).
    EveryIteration,
    /// Step with the exact-argmax selection; combinations are enumerated
    /// only by the stationarity test once the iterates stop moving.
    WhenStalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    SmallestIndex,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MMConfig {
    /// `None` picks `1e-3 · (1 + largest piece-value spread at x0)`.
    pub eps: Option<f64>,
    pub prox: f64,
    /// Stop moving once `‖xᵏ⁺¹ − xᵏ‖` falls to this level.
    pub tolerance: f64,
    pub max_outer_iterations: usize,
    pub budget: usize,
    pub tie_break: TieBreak,
    pub seed: u64,
    pub policy: EnumerationPolicy,
    /// Defaults to `1e-7 · (1 + M_N)` at the tested point.
    pub certification_tolerance: Option<f64>,
    /// Proximal weight used by the stationarity test.
    pub certification_prox: f64,
    pub inner: ConvexSolveConfig,
    /// Keep every `thinning`-th iterate in the trace (the last one always).
    pub thinning: usize,
}

impl Default for MMConfig {
    fn default() -> Self {
        Self {
            eps: None,
            prox: 1e-4,
            tolerance: 1e-8,
            max_outer_iterations: 500,
            budget: 64,
            tie_break: TieBreak::SmallestIndex,
            seed: 0,
            policy: EnumerationPolicy::WhenStalled,
            certification_tolerance: None,
            certification_prox: 0.0,
            inner: ConvexSolveConfig::default(),
            thinning: 1,
        }
    }
}

impl MMConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.eps {
            if !(e >= 0.0) {
                return Err(Error::InvalidParameter { name: "eps", value: e });
            }
        }
        if !(self.prox >= 0.0) {
            return Err(Error::InvalidParameter { name: "prox", value: self.prox });
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter { name: "tolerance", value: self.tolerance });
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter { name: "budget", value: 0.0 });
        }
        if self.max_outer_iterations == 0 {
            return Err(Error::InvalidParameter { name: "max_outer_iterations", value: 0.0 });
        }
        if self.thinning == 0 {
            return Err(Error::InvalidParameter { name: "thinning", value: 0.0 });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Certified,
    InconclusiveBudget,
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    /// `(iteration, xᵏ)` for the kept iterates.
    pub iterates: Vec<(usize, Vec<f64>)>,
    /// Outer iteration of each recorded step; `objectives`, `movements` and
    /// `ambiguous_counts` are aligned with it.
    pub steps: Vec<usize>,
    pub objectives: Vec<f64>,
    pub movements: Vec<f64>,
    pub ambiguous_counts: Vec<usize>,
    pub eps: f64,
    pub certificate: Option<Certificate>,
    pub status: SolveStatus,
    pub certification_rounds: usize,
    /// Filled in by callers that can read a clock.
    pub wall_clock_secs: f64,
}

impl SolveTrace {
    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().unwrap_or(&f64::NAN)
    }
}

/// Default ε: `1e-3 · (1 + max over samples of the piece-value spread)`.
fn default_eps(table: &SampleTable, x: &[f64]) -> f64 {
    let mut spread: f64 = 0.0;
    for n in 0..table.len() {
        for vals in [table.f_values(n, x), table.g_values(n, x)] {
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            spread = spread.max(hi - lo);
        }
    }
    1e-3 * (1.0 + spread)
}

fn candidate_selections(table: &SampleTable, x: &[f64], eps: f64, config: &MMConfig) -> (Vec<IndexSelection>, usize) {
    let sets = table.eps_sets(x, eps);
    let ambiguous = crate::stationarity::ambiguous_samples(&sets);
    let exact = IndexSelection::exact(&sets);
    if config.policy == EnumerationPolicy::WhenStalled {
        return (alloc::vec![exact], ambiguous.len());
    }
    let mut count: u64 = 1;
    for &n in &ambiguous {
        count = count.saturating_mul(sets[n].choices() as u64);
    }
    if count > config.budget as u64 {
        return (alloc::vec![exact], ambiguous.len());
    }
    let mut out = alloc::vec![exact.clone()];
    for mut code in 0..count {
        let mut sel = exact.clone();
        for &n in &ambiguous {
            let s = &sets[n];
            let r = s.choices() as u64;
            let d = (code % r) as usize;
            code /= r;
            sel.f_index[n] = s.f_set[d / s.g_set.len()];
            sel.g_index[n] = s.g_set[d % s.g_set.len()];
        }
        if sel != exact {
            out.push(sel);
        }
    }
    (out, ambiguous.len())
}

struct Recorder<'c> {
    trace: SolveTrace,
    config: &'c MMConfig,
}

impl Recorder<'_> {
    fn push(&mut self, k: usize, x: &[f64], objective: f64, movement: f64, ambiguous: usize) {
        if k % self.config.thinning == 0 {
            self.trace.iterates.push((k, x.to_vec()));
        }
        self.trace.steps.push(k);
        self.trace.objectives.push(objective);
        self.trace.movements.push(movement);
        self.trace.ambiguous_counts.push(ambiguous);
    }

    fn finish(mut self, x: &[f64]) -> SolveTrace {
        let last = *self.trace.steps.last().expect("the start is always recorded");
        if self.trace.iterates.last().map(|(i, _)| *i) != Some(last) {
            self.trace.iterates.push((last, x.to_vec()));
        }
        self.trace
    }
}

/// Runs the majorization-minimization loop from `x0` (projected onto `X`).
///
/// The risk sequence is nonincreasing. The run ends when the iterate passes
/// the composite ε-strong d-stationarity test (`Certified`), when the test
/// runs out of budget (`InconclusiveBudget`), when no step lowers the risk
/// even after halving ε (`Stalled`), or after `max_outer_iterations` steps.
pub fn mm_solve(
    model: &DifferenceMaxModel,
    loss: LossKind,
    dataset: &Dataset,
    feasible: &FeasibleSet,
    x0: &[f64],
    config: &MMConfig,
) -> Result<(Vec<f64>, SolveTrace)> {
    config.validate()?;
    let table = SampleTable::new(model, dataset)?;
    table.check_point(x0)?;
    feasible.validate(model.param_dim)?;
    mm_with_table(&table, loss, feasible, x0, config)
}

fn mm_with_table(
    table: &SampleTable,
    loss: LossKind,
    feasible: &FeasibleSet,
    x0: &[f64],
    config: &MMConfig,
) -> Result<(Vec<f64>, SolveTrace)> {
    let mut x = feasible.project(x0);
    let mut eps = config.eps.unwrap_or_else(|| default_eps(table, &x));
    let mut inner = config.inner.clone();
    inner.feasible_set = feasible.clone();
    let mut f = table.risk(loss, &x);

    let mut rec = Recorder {
        trace: SolveTrace {
            iterates: Vec::new(),
            steps: Vec::new(),
            objectives: Vec::new(),
            movements: Vec::new(),
            ambiguous_counts: Vec::new(),
            eps,
            certificate: None,
            status: SolveStatus::MaxIterations,
            certification_rounds: 0,
            wall_clock_secs: 0.0,
        },
        config,
    };
    let (_, amb0) = candidate_selections(table, &x, eps, config);
    rec.push(0, &x, f, 0.0, amb0);

    let mut halved = false;
    let mut k = 0;
    let mut status = None;
    while k < config.max_outer_iterations {
        k += 1;
        let (selections, ambiguous) = candidate_selections(table, &x, eps, config);
        let mut best: Option<(Vec<f64>, f64)> = None;
        for sel in &selections {
            let prog = table.lower(loss, &x, sel, config.prox);
            let sol = solve_program(&prog, &x, &inner)?;
            let value = table.risk(loss, &sol.x);
            if best.as_ref().map_or(true, |(_, b)| value < *b) {
                best = Some((sol.x, value));
            }
        }
        let (y, fy) = best.expect("at least one candidate");
        let step = dist(&y, &x);
        let decreased = fy < f;
        if decreased && step > config.tolerance {
            x = y;
            f = fy;
            rec.push(k, &x, f, step, ambiguous);
            continue;
        } else if !decreased && step > config.tolerance && !halved {
            eps *= 0.5;
            halved = true;
            rec.trace.eps = eps;
            continue;
        }

        let cert = certify(table, loss, feasible, &x, eps, config)?;
        rec.trace.certification_rounds += 1;
        match cert.verdict {
            Verdict::Certified => {
                rec.trace.certificate = Some(cert);
                status = Some(SolveStatus::Certified);
                break;
            }
            Verdict::InconclusiveBudget => {
                rec.trace.certificate = Some(cert);
                status = Some(SolveStatus::InconclusiveBudget);
                break;
            }
            Verdict::Refuted => {
                let w = cert.witness.clone().expect("refuted certificates carry a witness");
                let fw = table.risk(loss, &w);
                let moved = dist(&w, &x);
                rec.trace.certificate = Some(cert);
                if fw < f {
                    x = w;
                    f = fw;
                    let (_, amb) = candidate_selections(table, &x, eps, config);
                    rec.push(k, &x, f, moved, amb);
                } else {
                    status = Some(SolveStatus::Stalled);
                    break;
                }
            }
        }
    }
    let status = match status {
        Some(s) => s,
        None => {
            let cert = certify(table, loss, feasible, &x, eps, config)?;
            rec.trace.certification_rounds += 1;
            rec.trace.certificate = Some(cert);
            SolveStatus::MaxIterations
        }
    };
    rec.trace.status = status;
    let trace = rec.finish(&x);
    Ok((x, trace))
}

fn certify(
    table: &SampleTable,
    loss: LossKind,
    feasible: &FeasibleSet,
    x: &[f64],
    eps: f64,
    config: &MMConfig,
) -> Result<Certificate> {
    let cc = CertifyConfig {
        eps,
        budget: config.budget,
        tolerance: config.certification_tolerance,
        prox: config.certification_prox,
        seed: config.seed,
        exhaustive: false,
        solver: config.inner.clone(),
    };
    certify_with_table(table, loss, feasible, x, &cc)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiStartResult {
    pub best_index: usize,
    pub best_x: Vec<f64>,
    pub best_objective: f64,
    pub solutions: Vec<Vec<f64>>,
    pub traces: Vec<SolveTrace>,
}

/// Runs [`mm_solve`] from every start and keeps the run with the smallest
/// final risk (the earliest one on ties).
pub fn multi_start_solve(
    model: &DifferenceMaxModel,
    loss: LossKind,
    dataset: &Dataset,
    feasible: &FeasibleSet,
    starts: &[Vec<f64>],
    config: &MMConfig,
) -> Result<MultiStartResult> {
    if starts.is_empty() {
        return Err(Error::InvalidSize(alloc::string::String::from("at least one start is required")));
    }
    config.validate()?;
    feasible.validate(model.param_dim)?;
    let table = SampleTable::new(model, dataset)?;
    let mut solutions = Vec::with_capacity(starts.len());
    let mut traces = Vec::with_capacity(starts.len());
    for x0 in starts {
        table.check_point(x0)?;
        let (x, trace) = mm_with_table(&table, loss, feasible, x0, config)?;
        solutions.push(x);
        traces.push(trace);
    }
    let mut best_index = 0;
    for (i, t) in traces.iter().enumerate() {
        if t.final_objective() < traces[best_index].final_objective() {
            best_index = i;
        }
    }
    Ok(MultiStartResult {
        best_index,
        best_x: solutions[best_index].clone(),
        best_objective: traces[best_index].final_objective(),
        solutions,
        traces,
    })
}

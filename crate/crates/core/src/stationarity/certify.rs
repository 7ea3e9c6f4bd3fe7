use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{check_eps, EpsArgmax, IndexSelection, SampleTable};
use crate::error::{Error, Result};
use crate::linalg::sub;
use crate::model::{Dataset, DifferenceMaxModel, FeasibleSet, LossKind};
use crate::rng::Stream;
use crate::solver::{solve_program, ConvexSolveConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub eps: f64,
    /// Largest number of index combinations solved.
    pub budget: usize,
    /// Defaults to `1e-7 · (1 + M_N(x̄))`.
    pub tolerance: Option<f64>,
    /// Proximal weight of the certified subproblems.
    pub prox: f64,
    /// Seed for sampling combinations beyond the budget.
    pub seed: u64,
    /// Keep solving after the first refuting combination.
    pub exhaustive: bool,
    pub solver: ConvexSolveConfig,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            eps: 0.0,
            budget: 64,
            tolerance: None,
            prox: 0.0,
            seed: 0,
            exhaustive: false,
            solver: ConvexSolveConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    Refuted,
    InconclusiveBudget,
}

/// One solved index combination. `assignments` lists `(sample, j₁, j₂)` for
/// the ambiguous samples; all other samples use their unique pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinationRecord {
    pub assignments: Vec<(usize, usize, usize)>,
    /// Value of the best point found for `min_x M̂(x, x̄)`.
    pub min_value: f64,
    /// `min_value − M_N(x̄)`.
    pub gap: f64,
    /// Bound on `min_value − min_x M̂(x, x̄)` reported by the convex solver.
    pub solver_gap_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub anchor: Vec<f64>,
    pub eps: f64,
    pub objective: f64,
    pub tolerance: f64,
    pub ambiguous_samples: usize,
    /// Number of distinct combinations, saturating at `u64::MAX`.
    pub combination_count: u64,
    /// Whether every combination was solved (or a refutation ended the
    /// enumeration early).
    pub enumerated: bool,
    pub combinations: Vec<CombinationRecord>,
    pub verdict: Verdict,
    pub witness: Option<Vec<f64>>,
    pub witness_direction: Option<Vec<f64>>,
    pub witness_value: Option<f64>,
    pub refuting_combination: Option<usize>,
    pub seed: u64,
}

impl Certificate {
    /// Largest amount by which a solved subproblem undercuts `M_N(x̄)`.
    pub fn max_deficit(&self) -> f64 {
        self.combinations.iter().map(|c| (-c.gap).max(0.0)).fold(0.0, f64::max)
    }
}

/// Samples whose ε-argmax sets are not both singletons.
pub fn ambiguous_samples(sets: &[EpsArgmax]) -> Vec<usize> {
    sets.iter().enumerate().filter(|(_, s)| s.is_ambiguous()).map(|(n, _)| n).collect()
}

fn combination_count(sets: &[EpsArgmax], ambiguous: &[usize]) -> u64 {
    ambiguous.iter().fold(1u64, |acc, &n| acc.saturating_mul(sets[n].choices() as u64))
}

/// Mixed-radix digits of `code`, one per ambiguous sample.
fn decode(mut code: u64, sets: &[EpsArgmax], ambiguous: &[usize]) -> Vec<u32> {
    ambiguous
        .iter()
        .map(|&n| {
            let r = sets[n].choices() as u64;
            let d = code % r;
            code /= r;
            d as u32
        })
        .collect()
}

fn exact_digits(sets: &[EpsArgmax], ambiguous: &[usize]) -> Vec<u32> {
    ambiguous
        .iter()
        .map(|&n| {
            let s = &sets[n];
            let (jf, jg) = s.exact_pair();
            let a = s.f_set.iter().position(|&j| j == jf).unwrap_or(0);
            let b = s.g_set.iter().position(|&j| j == jg).unwrap_or(0);
            (a * s.g_set.len() + b) as u32
        })
        .collect()
}

fn selection_for(digits: &[u32], sets: &[EpsArgmax], ambiguous: &[usize], base: &IndexSelection) -> (IndexSelection, Vec<(usize, usize, usize)>) {
    let mut sel = base.clone();
    let mut assignments = Vec::with_capacity(ambiguous.len());
    for (&n, &d) in ambiguous.iter().zip(digits) {
        let s = &sets[n];
        let d = d as usize;
        let jf = s.f_set[d / s.g_set.len()];
        let jg = s.g_set[d % s.g_set.len()];
        sel.f_index[n] = jf;
        sel.g_index[n] = jg;
        assignments.push((n, jf, jg));
    }
    (sel, assignments)
}

/// Combinations to solve, exact selection first.
fn plan(sets: &[EpsArgmax], ambiguous: &[usize], budget: usize, seed: u64) -> (Vec<Vec<u32>>, bool) {
    let count = combination_count(sets, ambiguous);
    let exact = exact_digits(sets, ambiguous);
    let mut out = alloc::vec![exact.clone()];
    if count <= budget as u64 {
        for code in 0..count {
            let digits = decode(code, sets, ambiguous);
            if digits != exact {
                out.push(digits);
            }
        }
        return (out, true);
    }
    let mut seen = BTreeSet::new();
    seen.insert(exact);
    let mut rng = Stream::new(seed, 0);
    let mut attempts = 0;
    while out.len() < budget && attempts < 8 * budget {
        attempts += 1;
        let digits: Vec<u32> = ambiguous.iter().map(|&n| rng.index(sets[n].choices()) as u32).collect();
        if seen.insert(digits.clone()) {
            out.push(digits);
        }
    }
    (out, false)
}

/// Tests composite ε-strong d-stationarity of `x̄`: for every selection
/// `(J₁, J₂)` drawn from the ε-argmax sets at `x̄`, `M_N(x̄) ≤ min_{x∈X}
/// M̂_{N;J₁,J₂}(x, x̄) + tolerance`.
///
/// Combinations only differ on ambiguous samples. All of them are solved when
/// there are at most `budget`; otherwise the exact-argmax combination and
/// uniformly sampled ones are, and the verdict can only be `Refuted` or
/// `InconclusiveBudget`. Each subproblem is solved to a gap of at most
/// `tolerance / 10`.
pub fn certify_strong_dstationarity(
    model: &DifferenceMaxModel,
    loss: LossKind,
    dataset: &Dataset,
    feasible: &FeasibleSet,
    anchor: &[f64],
    config: &CertifyConfig,
) -> Result<Certificate> {
    let table = SampleTable::new(model, dataset)?;
    certify_with_table(&table, loss, feasible, anchor, config)
}

pub(crate) fn certify_with_table(
    table: &SampleTable,
    loss: LossKind,
    feasible: &FeasibleSet,
    anchor: &[f64],
    config: &CertifyConfig,
) -> Result<Certificate> {
    check_eps(config.eps)?;
    table.check_point(anchor)?;
    if config.budget == 0 {
        return Err(Error::InvalidParameter { name: "budget", value: 0.0 });
    }
    if !(config.prox >= 0.0) {
        return Err(Error::InvalidParameter { name: "prox", value: config.prox });
    }
    feasible.validate(table.param_dim())?;
    let objective = table.risk(loss, anchor);
    let tolerance = config.tolerance.unwrap_or(1e-7 * (1.0 + objective));
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter { name: "tolerance", value: tolerance });
    }
    let sets = table.eps_sets(anchor, config.eps);
    let ambiguous = ambiguous_samples(&sets);
    let count = combination_count(&sets, &ambiguous);
    let (digits_list, enumerated) = plan(&sets, &ambiguous, config.budget, config.seed);
    let base = IndexSelection::exact(&sets);

    let mut solver = config.solver.clone();
    solver.feasible_set = feasible.clone();
    solver.gap_tolerance = solver.gap_tolerance.min(tolerance / 10.0);

    let mut combinations = Vec::with_capacity(digits_list.len());
    let mut witness = None;
    let mut refuting = None;
    for digits in &digits_list {
        let (sel, assignments) = selection_for(digits, &sets, &ambiguous, &base);
        let prog = table.lower(loss, anchor, &sel, config.prox);
        let sol = solve_program(&prog, anchor, &solver)?;
        let refutes = sol.value < objective - tolerance;
        let settled = refutes || sol.lower_bound() >= objective - tolerance;
        if !sol.converged && !settled {
            return Err(Error::SolverFailure(String::from(
                "subproblem gap above tolerance/10 and certification undecided",
            )));
        }
        combinations.push(CombinationRecord {
            assignments,
            min_value: sol.value,
            gap: sol.value - objective,
            solver_gap_bound: sol.gap_bound,
        });
        if refutes && witness.is_none() {
            refuting = Some(combinations.len() - 1);
            witness = Some((sol.x, sol.value));
            if !config.exhaustive {
                break;
            }
        }
    }

    let verdict = if witness.is_some() {
        Verdict::Refuted
    } else if enumerated {
        Verdict::Certified
    } else {
        Verdict::InconclusiveBudget
    };
    let (witness, witness_value) = match witness {
        Some((x, v)) => (Some(x), Some(v)),
        None => (None, None),
    };
    Ok(Certificate {
        anchor: anchor.to_vec(),
        eps: config.eps,
        objective,
        tolerance,
        ambiguous_samples: ambiguous.len(),
        combination_count: count,
        enumerated,
        witness_direction: witness.as_ref().map(|w| sub(w, anchor)),
        combinations,
        verdict,
        witness,
        witness_value,
        refuting_combination: refuting,
        seed: config.seed,
    })
}

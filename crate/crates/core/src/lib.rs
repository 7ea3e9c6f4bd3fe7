//! Composite difference-of-max-convex empirical risk minimization.
//!
//! The crate works with statistical models of the form
//!
//! ```text
//! m(x; ξ) = max_j f_j(x; ξ) − max_j g_j(x; ξ)
//! ```
//!
//! with smooth convex pieces `f_j`, `g_j`, composed with a convex loss
//! `h(t; z)`. It provides
//!
//! - [`model`]: pieces, models, losses with their monotone split, datasets and
//!   feasible sets, plus builders for piecewise-affine regression, amplitude
//!   phase retrieval and the two-layer ReLU rewrite;
//! - [`stationarity`]: ε-argmax index sets, the convex surrogate family,
//!   exact directional derivatives and certificates of composite ε-strong
//!   d-stationarity;
//! - [`solver`]: a structured convex subproblem solver and the outer
//!   majorization-minimization loop;
//! - [`phase_oracle`]: closed-form population quantities for noisy
//!   amplitude-based phase retrieval with sphere-uniform features.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, experiments
//! and the command-line interface live in the companion `dcmax` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
pub mod linalg;
pub(crate) mod math;
pub mod model;
pub mod phase_oracle;
pub mod rng;
pub mod solver;
pub mod stationarity;

pub use error::{Error, Result};
pub use model::{
    build_phase_retrieval_model, build_piecewise_affine_model, empirical_risk, make_abs_loss,
    make_squared_loss, model_value, relu_two_layer_value, AffineForm, Dataset, DifferenceMaxModel,
    FeasibleSet, LossDecomposition, LossKind, PieceKind, Provenance, SmoothConvexPiece,
};
pub use phase_oracle::PhasePopulation;
pub use solver::{
    mm_solve, multi_start_solve, solve_convex, ConvexSolveConfig, MMConfig, SolveTrace,
};
pub use stationarity::{
    certify_strong_dstationarity, eps_argmax, Certificate, CertifyConfig, EpsArgmax,
    IndexSelection, SurrogateProblem, Verdict,
};

//! Solvers for difference-of-convex programs `min f(x) + g(x) - h(x)`.
//!
//! `f` is convex with an `L_f`-Lipschitz gradient, `g` is convex with a cheap
//! proximal operator and `h` is convex. The main method, [`cdca_solve`],
//! solves each proximal-linearized subproblem by Picard iteration on a
//! contraction and stops the inner loop adaptively. [`lpm_solve`],
//! [`pdca_solve`], [`pdca_e_solve`] and [`adca_solve`] are the baselines.
//!
//! [`bench`] generates sparse least-squares instances with l1-2 and
//! logarithmic penalties and runs seeded sweeps over them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod fixed_point;
pub mod operators;
pub mod problem;
pub mod solvers;

pub use error::{DcaError, Result};
pub use fixed_point::{
    apply_map, contraction_coefficient, optimal_mu, picard_solve, solve_exact, ContractionAnchor, FixedPointMap,
    PicardResult,
};
pub use operators::{
    estimate_lipschitz, least_squares_gradient, soft_threshold_prox, LeastSquares, LeastSquaresData,
    RegularizerKind, RegularizerSpec,
};
pub use problem::{
    criticality_residual, evaluate_objective, ConvexTerm, DcProblem, ProxFriendlyTerm, SmoothTerm,
};
pub use solvers::{
    adca_solve, cdca_solve, lpm_solve, pdca_e_solve, pdca_solve, RunSummary, SolverConfig, SolverKind,
    SolverOutput, SolverTrace, Termination,
};

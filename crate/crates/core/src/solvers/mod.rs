//! Outer-loop DC solvers.
//!
//! * [`cdca_solve`]: LPM subproblems solved inexactly by Picard iteration on
//!   the contraction of [`crate::fixed_point`], stopped by the adaptive rule
//!   `||x_m - x_{m-1}|| <= delta ||x_{k-1} - x_k||`.
//! * [`lpm_solve`]: the same subproblems solved to `1e-12`.
//! * [`pdca_solve`], [`pdca_e_solve`]: proximal DCA, without and with extrapolation.
//! * [`adca_solve`]: accelerated DCA with a nonmonotone acceptance test.
//!
//! All of them share [`SolverConfig`], produce a [`SolverTrace`] and a
//! [`RunSummary`], and stop on a relative-change test.

mod adca;
mod cdca;
mod lpm;
mod momentum;
mod pdca;
mod trace;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, DcaError, Result};
use crate::fixed_point::{optimal_mu, DEFAULT_MAX_INNER};
use crate::problem::{distance, norm, DcProblem};

pub use adca::{adca_solve, AdcaParams};
pub use cdca::cdca_solve;
pub use lpm::lpm_solve;
pub use momentum::{Extrapolation, FistaMomentum};
pub use pdca::{pdca_e_solve, pdca_solve};
pub use trace::{
    InvariantKind, InvariantViolation, IterationRecord, RunSummary, SolverTrace, Termination,
};

/// Slack of the runtime descent checks.
pub const INVARIANT_SLACK: f64 = 1e-9;

/// Slack of the subgradient residual bound check.
pub const RESIDUAL_SLACK: f64 = 1e-8;

/// Default cap on `Iter + InIt`.
pub const DEFAULT_TITER_CAP: usize = 100_000;

/// Parameters shared by every solver. Baselines ignore `lambda`, `delta`,
/// `mu`, `inertial_weights` and `max_inner`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub lambda: f64,
    pub delta: f64,
    pub mu: f64,
    /// Outer relative-change tolerance.
    pub tol: f64,
    /// `a_0, a_1, ...` in `x_0^{k+1} = x^k + sum_i a_i (x^{k-i} - x^{k-i-1})`.
    pub inertial_weights: Vec<f64>,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Stop once `Iter + InIt` reaches this value.
    pub titer_cap: usize,
    pub check_invariants: bool,
    /// Evaluate `F` (and `E` for cDCA) every iteration even without checks.
    pub record_objective: bool,
    /// Momentum of pDCA_e.
    pub extrapolation: Extrapolation,
}

impl SolverConfig {
    /// `lambda = lambda_multiple * L_f`, `delta = 1.99 lambda / L_f`,
    /// `mu = 2/(2 lambda + L_f)`, inertial weights `0.6, 0.6`.
    pub fn with_lambda_multiple(lf: f64, lambda_multiple: f64, tol: f64) -> Self {
        let lambda = lambda_multiple * lf;
        Self {
            lambda,
            delta: 1.99 * lambda / lf,
            mu: optimal_mu(lambda, lf),
            tol,
            inertial_weights: vec![0.6, 0.6],
            max_outer: usize::MAX,
            max_inner: DEFAULT_MAX_INNER,
            titer_cap: DEFAULT_TITER_CAP,
            check_invariants: false,
            record_objective: false,
            extrapolation: Extrapolation::default(),
        }
    }

    pub fn checked(mut self) -> Self {
        self.check_invariants = true;
        self
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_outer == 0 || self.titer_cap == 0 {
            return Err(DcaError::InvalidArgument(
                "iteration limits must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks `delta in (0, 2 lambda / L_f)` and `mu in (0, 2/(2 lambda + L_f)]`.
    pub fn validate_for_cdca(&self, lf: f64) -> Result<()> {
        self.validate_common()?;
        self.validate_proximal(lf)?;
        if !(self.delta > 0.0) || self.delta >= 2.0 * self.lambda / lf {
            return Err(DcaError::InvalidArgument(format!(
                "delta = {} outside (0, 2 lambda / L_f) = (0, {})",
                self.delta,
                2.0 * self.lambda / lf
            )));
        }
        if self.max_inner == 0 {
            return Err(DcaError::InvalidArgument("max_inner must be positive".into()));
        }
        if self.inertial_weights.iter().any(|w| !w.is_finite()) {
            return Err(DcaError::InvalidArgument("inertial weights must be finite".into()));
        }
        Ok(())
    }

    fn validate_proximal(&self, lf: f64) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        crate::fixed_point::contraction_coefficient(self.lambda, self.mu, lf).map(|_| ())
    }

    fn validate_baseline(&self) -> Result<()> {
        self.validate_common()
    }
}

/// `tau = (1 - mu lambda)^2 delta^2 / (2 lambda mu^2)`, the weight of the
/// step term in `E(x, y) = F(x) + tau ||x - y||^2`.
pub fn tau(lambda: f64, mu: f64, delta: f64) -> f64 {
    let c = 1.0 - mu * lambda;
    c * c * delta * delta / (2.0 * lambda * mu * mu)
}

/// `||x_new - x_old|| / max(1, ||x_old||)`.
pub fn relative_change(x_new: ArrayView1<f64>, x_old: ArrayView1<f64>) -> f64 {
    distance(x_new, x_old) / norm(x_old).max(1.0)
}

/// Point, trace and summary of one run.
#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub point: Array1<f64>,
    pub trace: SolverTrace,
    pub summary: RunSummary,
}

/// Solver selector used by the benchmark harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Cdca,
    Lpm,
    Pdca,
    PdcaE,
    Adca,
}

impl SolverKind {
    pub const ALL: [SolverKind; 5] = [
        SolverKind::Cdca,
        SolverKind::Lpm,
        SolverKind::Pdca,
        SolverKind::PdcaE,
        SolverKind::Adca,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Cdca => "cdca",
            SolverKind::Lpm => "lpm",
            SolverKind::Pdca => "pdca",
            SolverKind::PdcaE => "pdca_e",
            SolverKind::Adca => "adca",
        }
    }

    /// Dispatches to the matching solver. ADCA uses [`AdcaParams::for_lipschitz`].
    pub fn solve(
        self,
        problem: &DcProblem,
        x0: ArrayView1<f64>,
        config: &SolverConfig,
    ) -> Result<SolverOutput> {
        match self {
            SolverKind::Cdca => cdca_solve(problem, x0, config),
            SolverKind::Lpm => lpm_solve(problem, x0, config),
            SolverKind::Pdca => pdca_solve(problem, x0, config),
            SolverKind::PdcaE => pdca_e_solve(problem, x0, config),
            SolverKind::Adca => adca_solve(
                problem,
                x0,
                config,
                AdcaParams::for_lipschitz(problem.lipschitz_constant()),
            ),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = DcaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "cdca" => Ok(SolverKind::Cdca),
            "lpm" => Ok(SolverKind::Lpm),
            "pdca" => Ok(SolverKind::Pdca),
            "pdca_e" | "pdcae" => Ok(SolverKind::PdcaE),
            "adca" => Ok(SolverKind::Adca),
            other => Err(DcaError::InvalidArgument(format!("unknown solver '{other}'"))),
        }
    }
}

fn check_start(problem: &DcProblem, x0: ArrayView1<f64>) -> Result<()> {
    check_len(problem.dimension(), x0.len())?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(DcaError::InvalidArgument("starting point must be finite".into()));
    }
    Ok(())
}

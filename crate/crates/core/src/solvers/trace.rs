use std::io::{self, Write};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    /// cDCA found `x_{m_k} = x_k = x_{m_k + 1}` exactly.
    StationaryDetected,
    MaxOuter,
    /// `Iter + InIt` reached the configured cap.
    IterationCap,
}

impl Termination {
    pub fn converged(self) -> bool {
        matches!(self, Termination::Tolerance | Termination::StationaryDetected)
    }
}

/// One outer iteration, describing the new iterate `x^k`.
///
/// Record `k = 0` describes the starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `F(x^k)`, when objectives are recorded.
    pub objective: Option<f64>,
    /// `E(x^k, x^{k-1})`; cDCA only.
    pub auxiliary: Option<f64>,
    /// Map applications of the adaptive inner loop (`m_k`); 1 for one-step methods.
    pub inner_iterations: usize,
    /// Whether cDCA spent the extra Step-2 map application.
    pub extra_step: bool,
    /// `||x_m - x_{m-1}||` at the end of the inner loop.
    pub inner_step_norm: f64,
    /// `||x_1 - x_0||` of the inner loop.
    pub first_inner_step_norm: f64,
    /// The inner stopping threshold `delta ||x^{k-1} - x^k||` in force.
    pub inner_threshold: f64,
    /// `||x^k - x^{k-1}|| / max(1, ||x^{k-1}||)`.
    pub rel_change: f64,
    pub elapsed_seconds: f64,
    /// `||grad f(x) + xi - grad h(x)||` when `h` is smooth and checks are on.
    pub residual_norm: Option<f64>,
    pub residual_bound: Option<f64>,
}

impl IterationRecord {
    pub(crate) fn start(objective: Option<f64>, auxiliary: Option<f64>) -> Self {
        Self {
            k: 0,
            objective,
            auxiliary,
            inner_iterations: 0,
            extra_step: false,
            inner_step_norm: 0.0,
            first_inner_step_norm: 0.0,
            inner_threshold: 0.0,
            rel_change: 0.0,
            elapsed_seconds: 0.0,
            residual_norm: None,
            residual_bound: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvariantKind {
    /// `E(x^{k+1}, x^k) + (lambda/2 - tau) ||x^k - x^{k+1}||^2 <= E(x^k, x^{k-1})`.
    AuxiliaryDescent,
    /// Subgradient residual above its bound.
    ResidualBound,
    /// `F(x^{k+1}) <= F(x^k)` for monotone methods.
    ObjectiveDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantViolation {
    pub k: usize,
    pub kind: InvariantKind,
    pub lhs: f64,
    pub rhs: f64,
}

/// Per-iteration history of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub records: Vec<IterationRecord>,
    pub final_point: Array1<f64>,
    pub termination: Termination,
    pub violations: Vec<InvariantViolation>,
    /// `tau` of the auxiliary function (cDCA only).
    pub tau: Option<f64>,
    /// `sum_k ||x^k - x^{k+1}||^2` over the run.
    pub sum_squared_steps: f64,
}

impl SolverTrace {
    pub(crate) fn new(start: IterationRecord, tau: Option<f64>) -> Self {
        Self {
            records: vec![start],
            final_point: Array1::zeros(0),
            termination: Termination::MaxOuter,
            violations: Vec::new(),
            tau,
            sum_squared_steps: 0.0,
        }
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().filter_map(|r| r.objective)
    }

    /// Writes `k,F,E,m_k,rel_change,elapsed_seconds` lines with a header.
    /// Missing values are left empty; `elapsed_seconds` is wall-clock and
    /// therefore not reproducible.
    pub fn write_lines<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "k,F,E,m_k,rel_change,elapsed_seconds")?;
        for r in &self.records {
            let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
            writeln!(
                out,
                "{},{},{},{},{:e},{:e}",
                r.k,
                opt(r.objective),
                opt(r.auxiliary),
                r.inner_iterations + usize::from(r.extra_step),
                r.rel_change,
                r.elapsed_seconds
            )?;
        }
        out.flush()
    }
}

/// The cost metrics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// `Iter`.
    pub outer_iterations: usize,
    /// `InIt`: inner map applications beyond the first, per outer iteration.
    pub extra_inner_iterations: usize,
    /// `tIter = Iter + InIt`.
    pub total_iterations: usize,
    /// `fval`.
    pub final_objective: f64,
    pub wall_seconds: f64,
    pub termination: Termination,
}

impl RunSummary {
    pub fn converged(&self) -> bool {
        self.termination.converged()
    }
}

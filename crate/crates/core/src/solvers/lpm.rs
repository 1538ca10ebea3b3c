use std::time::Instant;

use ndarray::ArrayView1;

use super::trace::{InvariantKind, InvariantViolation, IterationRecord, RunSummary, SolverTrace, Termination};
use super::{check_start, relative_change, SolverConfig, SolverOutput, INVARIANT_SLACK};
use crate::error::Result;
use crate::fixed_point::{solve_exact_counted, ContractionAnchor, EXACT_TOLERANCE};
use crate::problem::{distance, DcProblem};

/// Linearized proximal method: every subproblem
/// `min f + g - <eta_k, .> + (lambda/2) ||. - x^k||^2` is solved to an
/// absolute Picard step of `1e-12`, warm-started at `x^k`.
///
/// `F(x^k)` is nonincreasing; with `check_invariants` every increase beyond
/// `1e-9` is recorded as a violation.
pub fn lpm_solve(problem: &DcProblem, x0: ArrayView1<f64>, config: &SolverConfig) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    config.validate_common()?;
    config.validate_proximal(problem.lipschitz_constant())?;
    let record_objective = config.record_objective || config.check_invariants;
    let clock = Instant::now();

    let mut x = x0.to_owned();
    let mut f_prev = record_objective.then(|| problem.objective(x.view()));
    let mut trace = SolverTrace::new(IterationRecord::start(f_prev, None), None);
    let mut outer = 0usize;
    let mut extra_inner = 0usize;

    let termination = loop {
        if outer >= config.max_outer {
            break Termination::MaxOuter;
        }
        if outer + extra_inner >= config.titer_cap {
            break Termination::IterationCap;
        }
        let anchor = ContractionAnchor::at(problem, x.view(), config.lambda, config.mu)?;
        let inner = solve_exact_counted(problem, &anchor, x.view(), EXACT_TOLERANCE)?;
        outer += 1;
        extra_inner += inner.inner_iterations - 1;

        let next = inner.final_point;
        let step = distance(next.view(), x.view());
        let rel = relative_change(next.view(), x.view());
        let objective = record_objective.then(|| problem.objective(next.view()));
        if config.check_invariants {
            if let (Some(new), Some(old)) = (objective, f_prev) {
                if new > old + INVARIANT_SLACK {
                    trace.violations.push(InvariantViolation {
                        k: outer,
                        kind: InvariantKind::ObjectiveDescent,
                        lhs: new,
                        rhs: old,
                    });
                }
            }
        }
        trace.records.push(IterationRecord {
            k: outer,
            objective,
            auxiliary: None,
            inner_iterations: inner.inner_iterations,
            extra_step: false,
            inner_step_norm: inner.last_step_norm,
            first_inner_step_norm: inner.first_step_norm,
            inner_threshold: EXACT_TOLERANCE,
            rel_change: rel,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
            residual_norm: None,
            residual_bound: None,
        });
        trace.sum_squared_steps += step * step;
        f_prev = objective;
        x = next;
        if rel < config.tol {
            break Termination::Tolerance;
        }
    };

    let wall_seconds = clock.elapsed().as_secs_f64();
    let final_objective = f_prev.unwrap_or_else(|| problem.objective(x.view()));
    trace.final_point = x.clone();
    trace.termination = termination;
    let summary = RunSummary {
        outer_iterations: outer,
        extra_inner_iterations: extra_inner,
        total_iterations: outer + extra_inner,
        final_objective,
        wall_seconds,
        termination,
    };
    Ok(SolverOutput {
        point: x,
        trace,
        summary,
    })
}

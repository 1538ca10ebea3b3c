use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use super::momentum::{Extrapolation, FistaMomentum};
use super::trace::{InvariantKind, InvariantViolation, IterationRecord, RunSummary, SolverTrace, Termination};
use super::{check_start, relative_change, SolverConfig, SolverOutput, INVARIANT_SLACK};
use crate::error::{DcaError, Result};
use crate::problem::{distance, DcProblem};

/// Proximal DCA: `x^{k+1} = Prox_{g/L_f}(x^k - (grad f(x^k) - eta^k) / L_f)`.
///
/// Stops when `||x^{k+1} - x^k|| / max(1, ||x^k||) < tol`. With
/// `check_invariants` every objective increase is recorded.
pub fn pdca_solve(problem: &DcProblem, x0: ArrayView1<f64>, config: &SolverConfig) -> Result<SolverOutput> {
    proximal_dca(problem, x0, config, Extrapolation::Off)
}

/// pDCA with extrapolation: `y^k = x^k + beta_k (x^k - x^{k-1})`, then a
/// proximal step from `y^k` with `eta^k in dh(x^k)`. `beta_k` follows
/// `config.extrapolation`; `x^{-1} = x^0`.
pub fn pdca_e_solve(problem: &DcProblem, x0: ArrayView1<f64>, config: &SolverConfig) -> Result<SolverOutput> {
    proximal_dca(problem, x0, config, config.extrapolation)
}

fn proximal_dca(
    problem: &DcProblem,
    x0: ArrayView1<f64>,
    config: &SolverConfig,
    extrapolation: Extrapolation,
) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    config.validate_baseline()?;
    let lf = problem.lipschitz_constant();
    if !(lf > 0.0) {
        return Err(DcaError::InvalidArgument("pDCA needs L_f > 0".into()));
    }
    let step_size = 1.0 / lf;
    let monotone = matches!(extrapolation, Extrapolation::Off);
    let record_objective = config.record_objective || config.check_invariants;
    let clock = Instant::now();

    let mut x = x0.to_owned();
    let mut x_prev = x.clone();
    let mut momentum = FistaMomentum::new();
    let mut f_prev = record_objective.then(|| problem.objective(x.view()));
    let mut trace = SolverTrace::new(IterationRecord::start(f_prev, None), None);
    let mut iterations = 0usize;

    let termination = loop {
        if iterations >= config.max_outer {
            break Termination::MaxOuter;
        }
        if iterations >= config.titer_cap {
            break Termination::IterationCap;
        }
        let beta = match extrapolation {
            Extrapolation::Off => 0.0,
            Extrapolation::Fista { .. } => momentum.beta(),
        };
        let y: Array1<f64> = if beta == 0.0 {
            x.clone()
        } else {
            let mut y = x.clone();
            y.scaled_add(beta, &x);
            y.scaled_add(-beta, &x_prev);
            y
        };
        let eta = problem.concave_part().subgradient(x.view());
        let mut v = problem.smooth().gradient(y.view());
        v -= &eta;
        v *= -step_size;
        v += &y;
        let next = problem.prox_friendly().prox(v.view(), step_size);
        iterations += 1;

        if let Extrapolation::Fista { restart_every, adaptive } = extrapolation {
            // <y - x^{k+1}, x^{k+1} - x^k> > 0 means the momentum points uphill.
            let uphill = adaptive && {
                let mut s = 0.0;
                for ((yi, ni), xi) in y.iter().zip(next.iter()).zip(x.iter()) {
                    s += (yi - ni) * (ni - xi);
                }
                s > 0.0
            };
            let periodic = restart_every.is_some_and(|t| t > 0 && iterations.is_multiple_of(t));
            if uphill || periodic {
                momentum.restart();
            } else {
                momentum.advance();
            }
        }

        let step = distance(next.view(), x.view());
        let rel = relative_change(next.view(), x.view());
        let objective = record_objective.then(|| problem.objective(next.view()));
        if config.check_invariants && monotone {
            if let (Some(new), Some(old)) = (objective, f_prev) {
                if new > old + INVARIANT_SLACK {
                    trace.violations.push(InvariantViolation {
                        k: iterations,
                        kind: InvariantKind::ObjectiveDescent,
                        lhs: new,
                        rhs: old,
                    });
                }
            }
        }
        trace.records.push(IterationRecord {
            k: iterations,
            objective,
            auxiliary: None,
            inner_iterations: 1,
            extra_step: false,
            inner_step_norm: step,
            first_inner_step_norm: step,
            inner_threshold: 0.0,
            rel_change: rel,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
            residual_norm: None,
            residual_bound: None,
        });
        trace.sum_squared_steps += step * step;
        f_prev = objective;
        x_prev = std::mem::replace(&mut x, next);
        if rel < config.tol {
            break Termination::Tolerance;
        }
    };

    Ok(finish(problem, x, trace, termination, iterations, f_prev, clock))
}

pub(super) fn finish(
    problem: &DcProblem,
    x: Array1<f64>,
    mut trace: SolverTrace,
    termination: Termination,
    iterations: usize,
    last_objective: Option<f64>,
    clock: Instant,
) -> SolverOutput {
    let wall_seconds = clock.elapsed().as_secs_f64();
    let final_objective = last_objective.unwrap_or_else(|| problem.objective(x.view()));
    trace.final_point = x.clone();
    trace.termination = termination;
    let summary = RunSummary {
        outer_iterations: iterations,
        extra_inner_iterations: 0,
        total_iterations: iterations,
        final_objective,
        wall_seconds,
        termination,
    };
    SolverOutput {
        point: x,
        trace,
        summary,
    }
}

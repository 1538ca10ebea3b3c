use std::collections::VecDeque;
use std::time::Instant;

use ndarray::{Array1, ArrayView1};

use super::trace::{InvariantKind, InvariantViolation, IterationRecord, RunSummary, SolverTrace, Termination};
use super::{check_start, relative_change, tau, SolverConfig, SolverOutput, INVARIANT_SLACK, RESIDUAL_SLACK};
use crate::error::{DcaError, Result};
use crate::fixed_point::{self, ContractionAnchor, FixedPointMap};
use crate::problem::{distance, norm, DcProblem};

/// Contractive DCA.
///
/// Each outer step freezes `Phi_k = Prox_{mu g} o T_k` at `(x^k, eta^k)`,
/// starts the inner loop from the inertial point
/// `x^k + sum_i a_i (x^{k-i} - x^{k-i-1})`, and runs Picard iteration until
/// `||x_m - x_{m-1}|| <= delta ||x^{k-1} - x^k||`. If the result barely
/// moves (relative change below `tol`) one more map application is made;
/// when that one also stays below `tol` the run stops and returns it.
///
/// History starts with `x^{-1} = x^0 + 1` and all deeper entries equal to `x^0`.
pub fn cdca_solve(problem: &DcProblem, x0: ArrayView1<f64>, config: &SolverConfig) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    let lf = problem.lipschitz_constant();
    config.validate_for_cdca(lf)?;

    let (lambda, mu, delta) = (config.lambda, config.mu, config.delta);
    let tau = tau(lambda, mu, delta);
    let descent_weight = 0.5 * lambda - tau;
    let record_objective = config.record_objective || config.check_invariants;
    let smooth_h = problem.concave_part().gradient_lipschitz_constant();
    let clock = Instant::now();

    // history[i] = x^{k-i}
    let depth = config.inertial_weights.len() + 1;
    let mut history: VecDeque<Array1<f64>> = VecDeque::with_capacity(depth + 1);
    history.push_back(x0.to_owned());
    history.push_back(x0.mapv(|v| v + 1.0));
    while history.len() < depth.max(2) {
        history.push_back(x0.to_owned());
    }
    let mut prev_step = distance(history[0].view(), history[1].view());

    let (mut objective, mut auxiliary) = (None, None);
    if record_objective {
        let f0 = problem.objective(x0);
        objective = Some(f0);
        auxiliary = Some(f0 + tau * prev_step * prev_step);
    }
    let mut trace = SolverTrace::new(IterationRecord::start(objective, auxiliary), Some(tau));

    let mut outer = 0usize;
    let mut extra_inner = 0usize;
    let termination = loop {
        if outer >= config.max_outer {
            break Termination::MaxOuter;
        }
        if outer + extra_inner >= config.titer_cap {
            break Termination::IterationCap;
        }

        let x = history[0].view();
        let eta = problem.concave_part().subgradient(x);
        let anchor = ContractionAnchor {
            anchor_point: x.to_owned(),
            concave_subgradient: eta,
            lambda,
            mu,
        };
        let map = FixedPointMap::new(problem, &anchor);

        let mut start = x.to_owned();
        for (i, &a) in config.inertial_weights.iter().enumerate() {
            if a != 0.0 {
                start.scaled_add(a, &history[i]);
                start.scaled_add(-a, &history[i + 1]);
            }
        }

        let threshold = delta * prev_step;
        let inner = fixed_point::iterate(&map, start, threshold, config.max_inner);
        if !inner.converged {
            return Err(DcaError::InnerLoop {
                outer_iteration: outer,
                inner_iterations: inner.inner_iterations,
                last_step: inner.last_step_norm,
                threshold,
            });
        }
        outer += 1;
        extra_inner += inner.inner_iterations - 1;

        let rel = relative_change(inner.final_point.view(), x);
        let mut stop = None;
        let (next, next_input, extra_step) = if rel >= config.tol {
            (inner.final_point, inner.previous_point, false)
        } else {
            extra_inner += 1;
            let refined = map.apply(inner.final_point.view());
            if relative_change(refined.view(), x) < config.tol {
                let stationary = inner.final_point == anchor.anchor_point && refined == anchor.anchor_point;
                stop = Some(if stationary {
                    Termination::StationaryDetected
                } else {
                    Termination::Tolerance
                });
            }
            (refined, inner.final_point, true)
        };

        let step = distance(next.view(), x);
        let mut record = IterationRecord {
            k: outer,
            objective: None,
            auxiliary: None,
            inner_iterations: inner.inner_iterations,
            extra_step,
            inner_step_norm: inner.last_step_norm,
            first_inner_step_norm: inner.first_step_norm,
            inner_threshold: threshold,
            rel_change: step / norm(x).max(1.0),
            elapsed_seconds: 0.0,
            residual_norm: None,
            residual_bound: None,
        };

        if record_objective {
            let f_next = problem.objective(next.view());
            let e_next = f_next + tau * step * step;
            if config.check_invariants {
                let e_prev = trace.records.last().and_then(|r| r.auxiliary).unwrap_or(f64::INFINITY);
                let lhs = e_next + descent_weight * step * step;
                if lhs > e_prev + INVARIANT_SLACK {
                    trace.violations.push(InvariantViolation {
                        k: outer,
                        kind: InvariantKind::AuxiliaryDescent,
                        lhs,
                        rhs: e_prev,
                    });
                }
            }
            record.objective = Some(f_next);
            record.auxiliary = Some(e_next);
        }

        if config.check_invariants {
            if let Some(lh) = smooth_h {
                // xi = (T(x_prev) - x_next) / mu lies in dg(x_next).
                let mut xi = map.forward(next_input.view());
                xi -= &next;
                xi /= mu;
                let mut w = problem.smooth().gradient(next.view());
                w += &xi;
                w -= &problem.concave_part().subgradient(next.view());
                let residual = norm(w.view());
                let bound = (1.0 - mu * lambda) * delta / mu * prev_step + (lambda + lh) * step;
                if residual > bound + RESIDUAL_SLACK {
                    trace.violations.push(InvariantViolation {
                        k: outer,
                        kind: InvariantKind::ResidualBound,
                        lhs: residual,
                        rhs: bound,
                    });
                }
                record.residual_norm = Some(residual);
                record.residual_bound = Some(bound);
            }
        }

        record.elapsed_seconds = clock.elapsed().as_secs_f64();
        trace.records.push(record);
        trace.sum_squared_steps += step * step;

        history.push_front(next);
        history.truncate(depth.max(2));
        prev_step = step;

        if let Some(reason) = stop {
            break reason;
        }
    };

    let wall_seconds = clock.elapsed().as_secs_f64();
    let point = history.pop_front().expect("history is never empty");
    let final_objective = trace
        .records
        .last()
        .and_then(|r| r.objective)
        .unwrap_or_else(|| problem.objective(point.view()));
    trace.final_point = point.clone();
    trace.termination = termination;
    let summary = RunSummary {
        outer_iterations: outer,
        extra_inner_iterations: extra_inner,
        total_iterations: outer + extra_inner,
        final_objective,
        wall_seconds,
        termination,
    };
    Ok(SolverOutput { point, trace, summary })
}

use std::collections::VecDeque;
use std::time::Instant;

use ndarray::ArrayView1;

use super::momentum::FistaMomentum;
use super::pdca::finish;
use super::trace::{IterationRecord, SolverTrace, Termination};
use super::{check_start, relative_change, SolverConfig, SolverOutput};
use crate::error::{DcaError, Result};
use crate::problem::{distance, DcProblem};

/// Nonmonotone window and proximal weight of ADCA.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcaParams {
    /// Extrapolated points are accepted against the max of the last `q + 1` objectives.
    pub q: usize,
    /// Proximal weight, must exceed `L_f`.
    pub rho: f64,
}

impl AdcaParams {
    /// `q = 5`, `rho = 1.1 L_f`.
    pub fn for_lipschitz(lf: f64) -> Self {
        Self { q: 5, rho: 1.1 * lf }
    }
}

/// Accelerated DCA.
///
/// `z^k = x^k + beta_k (x^k - x^{k-1})` with FISTA weights (no restart);
/// `v^k = z^k` when `F(z^k) <= max_{t = max(0, k-q)..k} F(x^t)`, else `x^k`;
/// then `x^{k+1} = Prox_{g/rho}((rho v^k - grad f(v^k) + eta^k) / rho)` with
/// `eta^k in dh(v^k)`.
pub fn adca_solve(
    problem: &DcProblem,
    x0: ArrayView1<f64>,
    config: &SolverConfig,
    params: AdcaParams,
) -> Result<SolverOutput> {
    check_start(problem, x0)?;
    config.validate_baseline()?;
    let lf = problem.lipschitz_constant();
    if !(params.rho > lf) || !params.rho.is_finite() {
        return Err(DcaError::InvalidArgument(format!(
            "rho = {} must exceed L_f = {lf}",
            params.rho
        )));
    }
    let rho = params.rho;
    let clock = Instant::now();

    let mut x = x0.to_owned();
    let mut x_prev = x.clone();
    let mut momentum = FistaMomentum::new();
    // F(x^t) for the last q + 1 iterates.
    let mut window: VecDeque<f64> = VecDeque::with_capacity(params.q + 1);
    let mut f_x = problem.objective(x.view());
    window.push_back(f_x);
    let mut trace = SolverTrace::new(IterationRecord::start(Some(f_x), None), None);
    let mut iterations = 0usize;

    let termination = loop {
        if iterations >= config.max_outer {
            break Termination::MaxOuter;
        }
        if iterations >= config.titer_cap {
            break Termination::IterationCap;
        }
        let beta = momentum.beta();
        momentum.advance();

        let mut z = x.clone();
        if beta != 0.0 {
            z.scaled_add(beta, &x);
            z.scaled_add(-beta, &x_prev);
        }
        let reference = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (fz_smooth, grad_z) = problem.smooth().value_and_gradient(z.view());
        let gz = problem.prox_friendly().value(z.view());
        let fz = if gz == f64::INFINITY {
            f64::INFINITY
        } else {
            fz_smooth + gz - problem.concave_part().value(z.view())
        };
        let (v, grad_v) = if fz <= reference {
            (z, grad_z)
        } else {
            let g = problem.smooth().gradient(x.view());
            (x.clone(), g)
        };

        // y / rho = v - (grad f(v) - eta) / rho
        let eta = problem.concave_part().subgradient(v.view());
        let mut y = grad_v;
        y -= &eta;
        y *= -1.0 / rho;
        y += &v;
        let next = problem.prox_friendly().prox(y.view(), 1.0 / rho);
        iterations += 1;

        let step = distance(next.view(), x.view());
        let rel = relative_change(next.view(), x.view());
        f_x = problem.objective(next.view());
        window.push_back(f_x);
        if window.len() > params.q + 1 {
            window.pop_front();
        }
        trace.records.push(IterationRecord {
            k: iterations,
            objective: Some(f_x),
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
        x_prev = std::mem::replace(&mut x, next);
        if rel < config.tol {
            break Termination::Tolerance;
        }
    };

    Ok(finish(problem, x, trace, termination, iterations, Some(f_x), clock))
}

//! The linearized proximal subproblem
//!
//! ```text
//! min_x f(x) + g(x) - <eta_k, x> + (lambda/2) ||x - x_k||^2
//! ```
//!
//! is the fixed-point problem of
//! `Phi(x) = Prox_{mu g}[(1 - mu lambda) x - mu grad f(x) + mu lambda x_k + mu eta_k]`,
//! which is a contraction with coefficient `1 - mu lambda` whenever
//! `0 < mu <= 2 / (2 lambda + L_f)`. This module builds `Phi` and runs Picard
//! iteration on it.

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, DcaError, Result};
use crate::problem::{distance, DcProblem};

/// Inner iteration cap used when the caller has no better idea.
pub const DEFAULT_MAX_INNER: usize = 10_000;

/// Absolute step-norm tolerance of [`solve_exact`].
pub const EXACT_TOLERANCE: f64 = 1e-12;

/// Iteration cap of [`solve_exact`].
pub const EXACT_MAX_ITERS: usize = 1_000_000;

// Slack when comparing mu against 2/(2 lambda + L_f); the endpoint itself is
// the usual choice and is recomputed in floating point by callers.
const MU_SLACK: f64 = 1e-12;

/// Step size `mu = 2/(2 lambda + L_f)` that minimizes the contraction coefficient.
pub fn optimal_mu(lambda: f64, lf: f64) -> f64 {
    2.0 / (2.0 * lambda + lf)
}

fn check_step(lambda: f64, mu: f64, lf: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(DcaError::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(mu > 0.0) || mu > optimal_mu(lambda, lf) * (1.0 + MU_SLACK) {
        return Err(DcaError::InvalidArgument(format!(
            "mu = {mu} outside (0, 2/(2 lambda + L_f)] = (0, {}]",
            optimal_mu(lambda, lf)
        )));
    }
    if mu * lambda >= 1.0 {
        return Err(DcaError::InvalidArgument(format!(
            "mu * lambda = {} must be below 1",
            mu * lambda
        )));
    }
    Ok(())
}

/// `1 - mu lambda`. Equals `L_f / (2 lambda + L_f)` at the optimal `mu`.
pub fn contraction_coefficient(lambda: f64, mu: f64, lf: f64) -> Result<f64> {
    check_step(lambda, mu, lf)?;
    Ok(1.0 - mu * lambda)
}

/// The data that freezes the map at outer iterate `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionAnchor {
    pub anchor_point: Array1<f64>,
    pub concave_subgradient: Array1<f64>,
    pub lambda: f64,
    pub mu: f64,
}

impl ContractionAnchor {
    pub fn new(
        problem: &DcProblem,
        anchor_point: Array1<f64>,
        concave_subgradient: Array1<f64>,
        lambda: f64,
        mu: f64,
    ) -> Result<Self> {
        check_len(problem.dimension(), anchor_point.len())?;
        check_len(problem.dimension(), concave_subgradient.len())?;
        check_step(lambda, mu, problem.lipschitz_constant())?;
        Ok(Self {
            anchor_point,
            concave_subgradient,
            lambda,
            mu,
        })
    }

    /// Anchor at `x` with `eta = h.subgradient(x)`.
    pub fn at(problem: &DcProblem, x: ArrayView1<f64>, lambda: f64, mu: f64) -> Result<Self> {
        check_len(problem.dimension(), x.len())?;
        let eta = problem.concave_part().subgradient(x);
        Self::new(problem, x.to_owned(), eta, lambda, mu)
    }

    pub fn coefficient(&self) -> f64 {
        1.0 - self.mu * self.lambda
    }
}

/// `Phi = Prox_{mu g} o T` for a fixed anchor.
pub struct FixedPointMap<'a> {
    problem: &'a DcProblem,
    mu: f64,
    keep: f64,
    // mu lambda x_k + mu eta_k
    shift: Array1<f64>,
}

impl<'a> FixedPointMap<'a> {
    /// Assumes `anchor` was validated against `problem`.
    pub fn new(problem: &'a DcProblem, anchor: &ContractionAnchor) -> Self {
        let mu = anchor.mu;
        let mut shift = &anchor.anchor_point * (mu * anchor.lambda);
        shift.scaled_add(mu, &anchor.concave_subgradient);
        Self {
            problem,
            mu,
            keep: 1.0 - mu * anchor.lambda,
            shift,
        }
    }

    /// `T(x) = (1 - mu lambda) x - mu grad f(x) + mu lambda x_k + mu eta_k`.
    pub fn forward(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut t = self.problem.smooth().gradient(x);
        t *= -self.mu;
        t.scaled_add(self.keep, &x);
        t += &self.shift;
        t
    }

    pub fn apply(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.problem.prox_friendly().prox(self.forward(x).view(), self.mu)
    }

    /// `(Phi(x), T(x))`. The pair gives `(T(x) - Phi(x)) / mu in dg(Phi(x))`.
    pub fn apply_with_input(&self, x: ArrayView1<f64>) -> (Array1<f64>, Array1<f64>) {
        let t = self.forward(x);
        (self.problem.prox_friendly().prox(t.view(), self.mu), t)
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// `Prox_{mu g}[(1 - mu lambda) x - mu grad f(x) + mu lambda x_k + mu eta_k]`.
pub fn apply_map(
    problem: &DcProblem,
    anchor: &ContractionAnchor,
    x: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    validate_anchor(problem, anchor)?;
    check_len(problem.dimension(), x.len())?;
    Ok(FixedPointMap::new(problem, anchor).apply(x))
}

fn validate_anchor(problem: &DcProblem, anchor: &ContractionAnchor) -> Result<()> {
    check_len(problem.dimension(), anchor.anchor_point.len())?;
    check_len(problem.dimension(), anchor.concave_subgradient.len())?;
    check_step(anchor.lambda, anchor.mu, problem.lipschitz_constant())
}

/// Outcome of a Picard run.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    /// `x_m`.
    pub final_point: Array1<f64>,
    /// `x_{m-1}`, the argument of the last map application.
    pub previous_point: Array1<f64>,
    /// `m >= 1`.
    pub inner_iterations: usize,
    /// `||x_m - x_{m-1}||`.
    pub last_step_norm: f64,
    /// `||x_1 - x_0||`.
    pub first_step_norm: f64,
    pub converged: bool,
}

/// Runs `x_m = Phi(x_{m-1})` from `start` until `||x_m - x_{m-1}|| <= threshold`.
///
/// Hitting `max_inner` is not an error: the result comes back with
/// `converged == false` and the caller decides.
pub fn picard_solve(
    problem: &DcProblem,
    anchor: &ContractionAnchor,
    start: ArrayView1<f64>,
    threshold: f64,
    max_inner: usize,
) -> Result<PicardResult> {
    validate_anchor(problem, anchor)?;
    check_len(problem.dimension(), start.len())?;
    if !(threshold >= 0.0) {
        return Err(DcaError::InvalidArgument(format!(
            "threshold must be nonnegative, got {threshold}"
        )));
    }
    if max_inner == 0 {
        return Err(DcaError::InvalidArgument("max_inner must be positive".into()));
    }
    let map = FixedPointMap::new(problem, anchor);
    Ok(iterate(&map, start.to_owned(), threshold, max_inner))
}

pub(crate) fn iterate(
    map: &FixedPointMap<'_>,
    start: Array1<f64>,
    threshold: f64,
    max_inner: usize,
) -> PicardResult {
    let mut prev = start;
    let mut first_step_norm = f64::NAN;
    let mut m = 0;
    loop {
        let next = map.apply(prev.view());
        m += 1;
        let step = distance(next.view(), prev.view());
        if m == 1 {
            first_step_norm = step;
        }
        if step <= threshold || m >= max_inner {
            return PicardResult {
                final_point: next,
                previous_point: prev,
                inner_iterations: m,
                last_step_norm: step,
                first_step_norm,
                converged: step <= threshold,
            };
        }
        prev = next;
    }
}

/// Solves the subproblem to near machine precision and returns its unique minimizer.
pub fn solve_exact(
    problem: &DcProblem,
    anchor: &ContractionAnchor,
    start: ArrayView1<f64>,
    tight_tolerance: f64,
) -> Result<Array1<f64>> {
    if !(tight_tolerance > 0.0) {
        return Err(DcaError::InvalidArgument(format!(
            "tolerance must be positive, got {tight_tolerance}"
        )));
    }
    let res = picard_solve(problem, anchor, start, tight_tolerance, EXACT_MAX_ITERS)?;
    if res.converged {
        Ok(res.final_point)
    } else {
        Err(DcaError::NonConvergence {
            best: res.final_point,
            residual: res.last_step_norm,
            iterations: res.inner_iterations,
        })
    }
}

/// Same as [`solve_exact`] but also reports the number of map applications.
pub(crate) fn solve_exact_counted(
    problem: &DcProblem,
    anchor: &ContractionAnchor,
    start: ArrayView1<f64>,
    tight_tolerance: f64,
) -> Result<PicardResult> {
    let res = picard_solve(problem, anchor, start, tight_tolerance, EXACT_MAX_ITERS)?;
    if res.converged {
        Ok(res)
    } else {
        Err(DcaError::NonConvergence {
            best: res.final_point,
            residual: res.last_step_norm,
            iterations: res.inner_iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::ScaledL1;
    use crate::problem::{FnProx, FnSmooth, Zero};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use std::sync::Arc;

    /// f = ||x - c||^2 / 2 with L_f = 1.
    fn shifted_quadratic(c: Array1<f64>, g: Arc<dyn crate::problem::ProxFriendlyTerm>) -> DcProblem {
        let n = c.len();
        let c2 = c.clone();
        let f = FnSmooth::new(
            move |x| 0.5 * (&x - &c).mapv(|v| v * v).sum(),
            move |x| &x - &c2,
            1.0,
        )
        .unwrap();
        DcProblem::new(Arc::new(f), g, Arc::new(Zero), n).unwrap()
    }

    fn origin_anchor(p: &DcProblem, lambda: f64, mu: f64) -> ContractionAnchor {
        let n = p.dimension();
        ContractionAnchor::new(p, Array1::zeros(n), Array1::zeros(n), lambda, mu).unwrap()
    }

    #[test]
    fn scalar_map_is_minus_one_third() {
        let p = shifted_quadratic(array![0.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, 2.0 / 3.0);
        let y = apply_map(&p, &anchor, array![3.0].view()).unwrap();
        assert_abs_diff_eq!(y[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_minimizer_is_fixed() {
        // (x - 2)^2/2 + x^2/2 is minimized at 1.
        let p = shifted_quadratic(array![2.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, optimal_mu(1.0, 1.0));
        let y = apply_map(&p, &anchor, array![1.0].view()).unwrap();
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn large_l1_weight_kills_small_inputs() {
        let p = shifted_quadratic(array![0.0, 0.0, 0.0], Arc::new(ScaledL1 { weight: 100.0 }));
        let anchor = origin_anchor(&p, 0.5, optimal_mu(0.5, 1.0));
        let y = apply_map(&p, &anchor, array![1.0, -3.0, 0.2].view()).unwrap();
        assert_eq!(y, array![0.0, 0.0, 0.0]);
    }

    #[test]
    fn coefficient_values() {
        let lf = 1.0;
        let lambda = 0.1 * lf;
        let c = contraction_coefficient(lambda, optimal_mu(lambda, lf), lf).unwrap();
        assert_abs_diff_eq!(c, 1.0 / 1.2, epsilon = 1e-15);

        let lambda = lf / 2.0;
        let c = contraction_coefficient(lambda, optimal_mu(lambda, lf), lf).unwrap();
        assert_abs_diff_eq!(c, 0.5, epsilon = 1e-15);

        let c = contraction_coefficient(0.3, 1e-12, 1.0).unwrap();
        assert!((1.0 - c) < 1e-11);
    }

    #[test]
    fn coefficient_rejects_large_mu() {
        assert!(contraction_coefficient(0.1, 2.0, 1.0).is_err());
        assert!(contraction_coefficient(0.1, 0.0, 1.0).is_err());
        assert!(contraction_coefficient(-1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn anchor_rejects_bad_dimensions() {
        let p = shifted_quadratic(array![0.0, 0.0], Arc::new(Zero));
        assert!(ContractionAnchor::new(&p, Array1::zeros(3), Array1::zeros(2), 1.0, 0.5).is_err());
        let anchor = origin_anchor(&p, 1.0, 0.5);
        assert!(apply_map(&p, &anchor, array![1.0].view()).is_err());
    }

    #[test]
    fn picard_stops_immediately_at_fixed_point() {
        let p = shifted_quadratic(array![2.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, optimal_mu(1.0, 1.0));
        let res = picard_solve(&p, &anchor, array![1.0].view(), 1e-12, 100).unwrap();
        assert!(res.converged);
        assert_eq!(res.inner_iterations, 1);
    }

    #[test]
    fn picard_geometric_decay() {
        let p = shifted_quadratic(array![0.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, 2.0 / 3.0);
        let res = picard_solve(&p, &anchor, array![3.0].view(), 1e-12, 1000).unwrap();
        assert!(res.converged);
        assert!(res.final_point[0].abs() < 1e-12);
        // |x_m - x_{m-1}| = 4 * (1/3)^(m-1); the first m with that <= 1e-12.
        let expected = (1..).find(|&m| 4.0 * (1.0f64 / 3.0).powi(m - 1) <= 1e-12).unwrap() as usize;
        assert_eq!(res.inner_iterations, expected);
        assert_abs_diff_eq!(res.first_step_norm, 4.0, epsilon = 1e-14);
    }

    #[test]
    fn picard_reports_non_convergence() {
        let p = shifted_quadratic(array![0.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, 2.0 / 3.0);
        let res = picard_solve(&p, &anchor, array![3.0].view(), 0.0, 5).unwrap();
        assert!(!res.converged);
        assert_eq!(res.inner_iterations, 5);
    }

    #[test]
    fn exact_scalar_quadratic() {
        let p = shifted_quadratic(array![2.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, optimal_mu(1.0, 1.0));
        let x = solve_exact(&p, &anchor, array![0.0].view(), EXACT_TOLERANCE).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn exact_singleton_constraint() {
        let origin_only = FnProx::new(
            |x| if x.iter().all(|&v| v == 0.0) { 0.0 } else { f64::INFINITY },
            |x, _| Array1::zeros(x.len()),
        );
        let p = shifted_quadratic(array![2.0, -1.0], Arc::new(origin_only));
        let anchor = origin_anchor(&p, 1.0, optimal_mu(1.0, 1.0));
        let x = solve_exact(&p, &anchor, array![5.0, 5.0].view(), EXACT_TOLERANCE).unwrap();
        assert_eq!(x, array![0.0, 0.0]);
    }

    #[test]
    fn exact_rejects_nonpositive_tolerance() {
        let p = shifted_quadratic(array![2.0], Arc::new(Zero));
        let anchor = origin_anchor(&p, 1.0, optimal_mu(1.0, 1.0));
        assert!(solve_exact(&p, &anchor, array![0.0].view(), 0.0).is_err());
    }
}

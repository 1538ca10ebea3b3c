//! Least-squares data term and the two regularizer families used in the
//! sparse regression experiments: `l1 - l2` and the logarithmic penalty.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, DcaError, Result};
use crate::problem::{ConvexTerm, DcProblem, ProxFriendlyTerm, SmoothTerm};

/// Seed of the power-iteration start vector. Fixed so `L_f` is reproducible.
const POWER_ITERATION_SEED: u64 = 0x005e_ed1f;

/// Default relative tolerance for the `L_f` estimate.
pub const LIPSCHITZ_TOLERANCE: f64 = 1e-12;
pub const LIPSCHITZ_MAX_ITERS: usize = 100_000;

/// Dense design matrix `A` (m x n, row-major) and observations `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresData {
    matrix: Array2<f64>,
    observations: Array1<f64>,
}

impl LeastSquaresData {
    /// Rejects mismatched shapes and matrices with an all-zero column.
    pub fn new(matrix: Array2<f64>, observations: Array1<f64>) -> Result<Self> {
        let (m, n) = matrix.dim();
        if m == 0 || n == 0 {
            return Err(DcaError::InvalidArgument("empty design matrix".into()));
        }
        check_len(m, observations.len())?;
        if let Some(j) = matrix
            .columns()
            .into_iter()
            .position(|c| c.iter().all(|&v| v == 0.0))
        {
            return Err(DcaError::InvalidArgument(format!("column {j} of A is zero")));
        }
        let matrix = matrix.as_standard_layout().into_owned();
        Ok(Self {
            matrix,
            observations,
        })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn observations(&self) -> &Array1<f64> {
        &self.observations
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// `A^T (A x - b)`.
pub fn least_squares_gradient(data: &LeastSquaresData, x: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_len(data.cols(), x.len())?;
    let residual = data.matrix.dot(&x) - &data.observations;
    Ok(data.matrix.t().dot(&residual))
}

/// Result of [`estimate_lipschitz`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of `A^T A` by power iteration on the Rayleigh quotient.
///
/// Stops when two consecutive quotients differ by at most `tolerance`
/// relative to the newer one. The start vector is drawn from a fixed seed.
pub fn estimate_lipschitz(
    data: &LeastSquaresData,
    tolerance: f64,
    max_iters: usize,
) -> Result<LipschitzEstimate> {
    gram_spectral_radius(data.matrix.view(), tolerance, max_iters)
}

/// Power iteration for `lambda_max(A^T A)` of an arbitrary matrix, same
/// stopping rule and start vector as [`estimate_lipschitz`].
pub fn gram_spectral_radius(
    a: ArrayView2<f64>,
    tolerance: f64,
    max_iters: usize,
) -> Result<LipschitzEstimate> {
    if !(tolerance > 0.0) || max_iters == 0 {
        return Err(DcaError::InvalidArgument(
            "power iteration needs a positive tolerance and iteration budget".into(),
        ));
    }
    if a.is_empty() {
        return Err(DcaError::InvalidArgument("power iteration on an empty matrix".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_ITERATION_SEED);
    let mut v: Array1<f64> = (0..a.ncols())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let nv = v.dot(&v).sqrt();
    v /= nv;

    let mut estimate = 0.0;
    for iteration in 1..=max_iters {
        let w = a.t().dot(&a.dot(&v));
        let rayleigh = v.dot(&w);
        let wn = w.dot(&w).sqrt();
        if wn == 0.0 {
            // v is in the null space; restart along a coordinate axis.
            v.fill(0.0);
            v[iteration % a.ncols()] = 1.0;
            continue;
        }
        v = w / wn;
        let converged = (rayleigh - estimate).abs() <= tolerance * rayleigh.abs();
        estimate = rayleigh;
        if converged {
            return Ok(LipschitzEstimate {
                value: estimate,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(LipschitzEstimate {
        value: estimate,
        iterations: max_iters,
        converged: false,
    })
}

/// `f(x) = ||Ax - b||^2 / 2` with `L_f = lambda_max(A^T A)`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    data: LeastSquaresData,
    transpose: Array2<f64>,
    lipschitz: f64,
}

impl LeastSquares {
    /// Estimates `L_f` by power iteration.
    pub fn new(data: LeastSquaresData) -> Result<Self> {
        let est = estimate_lipschitz(&data, LIPSCHITZ_TOLERANCE, LIPSCHITZ_MAX_ITERS)?;
        Self::with_lipschitz(data, est.value)
    }

    pub fn with_lipschitz(data: LeastSquaresData, lipschitz: f64) -> Result<Self> {
        if !(lipschitz > 0.0) || !lipschitz.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "L_f must be positive and finite, got {lipschitz}"
            )));
        }
        let transpose = data.matrix.t().as_standard_layout().into_owned();
        Ok(Self {
            data,
            transpose,
            lipschitz,
        })
    }

    pub fn data(&self) -> &LeastSquaresData {
        &self.data
    }

    fn residual(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let mut r = self.data.matrix.dot(&x);
        r -= &self.data.observations;
        r
    }

    /// `F = f + g - h` with the split of `spec`.
    pub fn into_problem(self, spec: &RegularizerSpec) -> Result<DcProblem> {
        let n = self.data.cols();
        let (g, h) = spec.split();
        DcProblem::new(Arc::new(self), g, h, n)
    }
}

impl SmoothTerm for LeastSquares {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.residual(x);
        0.5 * r.dot(&r)
    }

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.transpose.dot(&self.residual(x))
    }

    fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
    }

    fn value_and_gradient(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        let r = self.residual(x);
        (0.5 * r.dot(&r), self.transpose.dot(&r))
    }
}

/// Componentwise `sign(x_i) max(|x_i| - threshold, 0)`.
pub fn soft_threshold_prox(x: ArrayView1<f64>, threshold: f64) -> Array1<f64> {
    x.mapv(|v| soft_threshold(v, threshold))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}

/// Subgradient of `gamma ||x||`: `gamma x / ||x||`, and `0` at the origin.
pub fn l1_minus_l2_h_subgradient(x: ArrayView1<f64>, gamma: f64) -> Array1<f64> {
    let nrm = x.dot(&x).sqrt();
    if nrm == 0.0 {
        Array1::zeros(x.len())
    } else {
        x.mapv(|v| gamma * v / nrm)
    }
}

/// `weight * ||x||_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledL1 {
    pub weight: f64,
}

impl ProxFriendlyTerm for ScaledL1 {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        self.weight * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, x: ArrayView1<f64>, step: f64) -> Array1<f64> {
        soft_threshold_prox(x, step * self.weight)
    }
}

/// `gamma ||x||`, the subtracted part of the `l1 - l2` penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledEuclideanNorm {
    pub gamma: f64,
}

impl ConvexTerm for ScaledEuclideanNorm {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        self.gamma * x.dot(&x).sqrt()
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        l1_minus_l2_h_subgradient(x, self.gamma)
    }
}

/// `sum_i gamma (|x_i|/eps - log(|x_i| + eps) + log eps)`.
///
/// Smooth with gradient `gamma sign(x_i) (1/eps - 1/(|x_i| + eps))`, which is
/// `gamma / eps^2`-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogarithmicRemainder {
    pub gamma: f64,
    pub epsilon: f64,
}

impl ConvexTerm for LogarithmicRemainder {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        let eps = self.epsilon;
        self.gamma
            * x.iter()
                .map(|v| {
                    let t = v.abs() / eps;
                    t - t.ln_1p()
                })
                .sum::<f64>()
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let (gamma, eps) = (self.gamma, self.epsilon);
        x.mapv(|v| {
            if v == 0.0 {
                0.0
            } else {
                gamma * v.signum() * (1.0 / eps - 1.0 / (v.abs() + eps))
            }
        })
    }

    fn gradient_lipschitz_constant(&self) -> Option<f64> {
        Some(self.gamma / (self.epsilon * self.epsilon))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    L1MinusL2,
    Logarithmic,
}

/// Which penalty and with which parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub gamma: f64,
    /// Only read by [`RegularizerKind::Logarithmic`].
    pub epsilon: f64,
}

impl RegularizerSpec {
    pub const DEFAULT_GAMMA: f64 = 0.01;
    pub const DEFAULT_EPSILON: f64 = 0.5;

    pub fn l1_minus_l2(gamma: f64) -> Result<Self> {
        let spec = Self {
            kind: RegularizerKind::L1MinusL2,
            gamma,
            epsilon: Self::DEFAULT_EPSILON,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn logarithmic(gamma: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            kind: RegularizerKind::Logarithmic,
            gamma,
            epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.kind == RegularizerKind::Logarithmic
            && (!(self.epsilon > 0.0) || !self.epsilon.is_finite())
        {
            return Err(DcaError::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `(g, h)` for this penalty.
    pub fn split(&self) -> (Arc<dyn ProxFriendlyTerm>, Arc<dyn ConvexTerm>) {
        match self.kind {
            RegularizerKind::L1MinusL2 => (
                Arc::new(ScaledL1 { weight: self.gamma }),
                Arc::new(ScaledEuclideanNorm { gamma: self.gamma }),
            ),
            RegularizerKind::Logarithmic => (
                Arc::new(ScaledL1 {
                    weight: self.gamma / self.epsilon,
                }),
                Arc::new(LogarithmicRemainder {
                    gamma: self.gamma,
                    epsilon: self.epsilon,
                }),
            ),
        }
    }

    /// Value of the full penalty `g - h`, evaluated directly.
    pub fn penalty(&self, x: ArrayView1<f64>) -> f64 {
        match self.kind {
            RegularizerKind::L1MinusL2 => {
                let l1: f64 = x.iter().map(|v| v.abs()).sum();
                self.gamma * (l1 - x.dot(&x).sqrt())
            }
            RegularizerKind::Logarithmic => {
                self.gamma * x.iter().map(|v| (v.abs() / self.epsilon).ln_1p()).sum::<f64>()
            }
        }
    }
}

/// `g = (gamma/eps) ||x||_1` and the smooth remainder `h` of the logarithmic penalty.
pub fn logarithmic_split(spec: &RegularizerSpec) -> Result<(ScaledL1, LogarithmicRemainder)> {
    if spec.kind != RegularizerKind::Logarithmic {
        return Err(DcaError::InvalidArgument(
            "logarithmic_split needs a logarithmic regularizer".into(),
        ));
    }
    spec.validate()?;
    Ok((
        ScaledL1 {
            weight: spec.gamma / spec.epsilon,
        },
        LogarithmicRemainder {
            gamma: spec.gamma,
            epsilon: spec.epsilon,
        },
    ))
}

/// Sum of squared differences, used by sampled Lipschitz checks.
#[cfg(test)]
pub(crate) fn sq_dist(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    let mut s = 0.0;
    ndarray::Zip::from(&x).and(&y).for_each(|a, b| s += (a - b) * (a - b));
    s
}

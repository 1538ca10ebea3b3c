//! Independent reference computations for the integration and acceptance tests.
#![allow(dead_code)]

use cdca::{DcProblem, LeastSquares, LeastSquaresData, RegularizerSpec};
use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal))
}

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_row_iterator(a.nrows(), a.ncols(), a.iter().cloned())
}

/// Gaussian least-squares data of the given shape.
pub fn random_data(seed: u64, m: usize, n: usize) -> LeastSquaresData {
    let mut r = rng(seed);
    let a = gaussian_matrix(&mut r, m, n);
    let b = gaussian_vec(&mut r, m);
    LeastSquaresData::new(a, b).unwrap()
}

pub fn random_problem(seed: u64, m: usize, n: usize, spec: &RegularizerSpec) -> DcProblem {
    LeastSquares::new(random_data(seed, m, n))
        .unwrap()
        .into_problem(spec)
        .unwrap()
}

/// Largest eigenvalue of `A^T A` from a dense symmetric eigensolver.
pub fn dense_lambda_max(a: &Array2<f64>) -> f64 {
    let m = to_dmatrix(a);
    let gram = m.transpose() * &m;
    gram.symmetric_eigenvalues().max()
}

/// `argmin_y t|y| + (y - x)^2 / 2` by scanning a grid of spacing `step` on
/// the segment between 0 and `x`, which contains the minimizer.
pub fn grid_soft_threshold(x: f64, t: f64, step: f64) -> f64 {
    let (lo, hi) = if x < 0.0 { (x, 0.0) } else { (0.0, x) };
    let count = ((hi - lo) / step).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=count {
        let y = (lo + i as f64 * step).min(hi);
        let v = t * y.abs() + 0.5 * (y - x) * (y - x);
        if v < best.0 {
            best = (v, y);
        }
    }
    best.1
}

/// The LPM subproblem for `f = ||Ax - b||^2 / 2`, `g = w ||x||_1`:
/// `min f(x) + w ||x||_1 - <eta, x> + (lambda / 2) ||x - xk||^2`.
pub struct L1Subproblem<'a> {
    pub a: &'a Array2<f64>,
    pub b: &'a Array1<f64>,
    pub weight: f64,
    pub eta: &'a Array1<f64>,
    pub anchor: &'a Array1<f64>,
    pub lambda: f64,
}

impl L1Subproblem<'_> {
    pub fn value(&self, x: ArrayView1<f64>) -> f64 {
        let r = self.a.dot(&x) - self.b;
        let d = &x - self.anchor;
        0.5 * r.dot(&r) + self.weight * x.iter().map(|v| v.abs()).sum::<f64>() - self.eta.dot(&x)
            + 0.5 * self.lambda * d.dot(&d)
    }

    /// Enumerates all `3^n` sign patterns. For each one the objective is a
    /// quadratic on the free coordinates; its stationary point is kept when
    /// its signs agree with the pattern. The minimizer is the kept point with
    /// the smallest objective.
    pub fn enumerate(&self) -> Array1<f64> {
        let n = self.a.ncols();
        assert!(n <= 10, "enumeration is exponential");
        let a = to_dmatrix(self.a);
        let ata = a.transpose() * &a;
        let atb = a.transpose() * DVector::from_iterator(self.b.len(), self.b.iter().cloned());
        let mut best: Option<(f64, Array1<f64>)> = None;
        for code in 0..3usize.pow(n as u32) {
            let mut signs = vec![0i32; n];
            let mut c = code;
            for s in signs.iter_mut() {
                *s = (c % 3) as i32 - 1;
                c /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
            let mut x = Array1::<f64>::zeros(n);
            if !free.is_empty() {
                let k = free.len();
                let h = DMatrix::from_fn(k, k, |i, j| {
                    ata[(free[i], free[j])] + if i == j { self.lambda } else { 0.0 }
                });
                let rhs = DVector::from_fn(k, |i, _| {
                    let p = free[i];
                    atb[p] + self.eta[p] + self.lambda * self.anchor[p] - self.weight * signs[p] as f64
                });
                let sol = h.cholesky().expect("positive definite").solve(&rhs);
                if free.iter().enumerate().any(|(i, &p)| sol[i] * signs[p] as f64 <= 0.0) {
                    continue;
                }
                for (i, &p) in free.iter().enumerate() {
                    x[p] = sol[i];
                }
            }
            let v = self.value(x.view());
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, x));
            }
        }
        best.expect("the zero pattern is always feasible").1
    }

    /// `v = -(grad f(p) - eta + lambda (p - xk))`, which must lie in `w d||p||_1`.
    pub fn optimality_vector(&self, p: ArrayView1<f64>) -> Array1<f64> {
        let r = self.a.dot(&p) - self.b;
        let grad = self.a.t().dot(&r);
        -(grad - self.eta + self.lambda * (&p - self.anchor))
    }

    /// Componentwise distance of `v` from `d(w ||.||_1)(p)`.
    pub fn subdifferential_distance(&self, p: ArrayView1<f64>) -> f64 {
        let v = self.optimality_vector(p);
        let w = self.weight;
        let mut s = 0.0;
        for (pi, vi) in p.iter().zip(v.iter()) {
            let d = if *pi > 0.0 {
                vi - w
            } else if *pi < 0.0 {
                vi + w
            } else {
                (vi.abs() - w).max(0.0)
            };
            s += d * d;
        }
        s.sqrt()
    }

    /// Smallest value of `g(z) - g(p) - <v, z - p>` over the probes; nonnegative
    /// (up to rounding) exactly when `v` is a subgradient of `g` at `p`.
    pub fn worst_subgradient_gap(&self, p: ArrayView1<f64>, probes: &[Array1<f64>]) -> f64 {
        let v = self.optimality_vector(p);
        let g = |x: ArrayView1<f64>| self.weight * x.iter().map(|t| t.abs()).sum::<f64>();
        let gp = g(p);
        probes
            .iter()
            .map(|z| g(z.view()) - gp - v.dot(&(z - &p)))
            .fold(f64::INFINITY, f64::min)
    }
}

//! DC problem model: `F(x) = f(x) + g(x) - h(x)`.
//!
//! `f` is smooth convex with an `L_f`-Lipschitz gradient, `g` is convex and
//! prox friendly (it may take the value `+inf`), and `h` is convex and finite.
//! Each part is an oracle bundle behind a trait so that the solvers never
//! depend on a concrete model.
//!
//! Level-boundedness of `F` is assumed by every convergence result but cannot
//! be checked from oracles; callers are responsible for it.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1};

use crate::error::{check_len, DcaError, Result};

/// Smooth convex part `f` with Lipschitz-continuous gradient.
pub trait SmoothTerm: Send + Sync {
    fn value(&self, x: ArrayView1<f64>) -> f64;

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// Lipschitz constant `L_f` of the gradient.
    fn lipschitz_constant(&self) -> f64;

    /// Value and gradient together. Models that share work between the two
    /// (least squares shares `Ax - b`) override this.
    fn value_and_gradient(&self, x: ArrayView1<f64>) -> (f64, Array1<f64>) {
        (self.value(x), self.gradient(x))
    }
}

/// Convex, lower semi-continuous part `g` with a cheap proximal map.
pub trait ProxFriendlyTerm: Send + Sync {
    /// May return `f64::INFINITY` outside the domain.
    fn value(&self, x: ArrayView1<f64>) -> f64;

    /// `argmin_y g(y) + ||y - x||^2 / (2 step)`.
    fn prox(&self, x: ArrayView1<f64>, step: f64) -> Array1<f64>;
}

/// Convex part `h` that is subtracted.
pub trait ConvexTerm: Send + Sync {
    fn value(&self, x: ArrayView1<f64>) -> f64;

    /// Any element of the subdifferential at `x`.
    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// `L_h` when `h` is continuously differentiable with Lipschitz gradient.
    fn gradient_lipschitz_constant(&self) -> Option<f64> {
        None
    }
}

/// The zero function. Usable as `g` (prox is the identity) or as `h`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ProxFriendlyTerm for Zero {
    fn value(&self, _x: ArrayView1<f64>) -> f64 {
        0.0
    }

    fn prox(&self, x: ArrayView1<f64>, _step: f64) -> Array1<f64> {
        x.to_owned()
    }
}

impl ConvexTerm for Zero {
    fn value(&self, _x: ArrayView1<f64>) -> f64 {
        0.0
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        Array1::zeros(x.len())
    }

    fn gradient_lipschitz_constant(&self) -> Option<f64> {
        Some(0.0)
    }
}

type ValueFn = dyn Fn(ArrayView1<f64>) -> f64 + Send + Sync;
type VectorFn = dyn Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync;
type ProxFn = dyn Fn(ArrayView1<f64>, f64) -> Array1<f64> + Send + Sync;

/// `f` assembled from closures.
pub struct FnSmooth {
    value: Box<ValueFn>,
    gradient: Box<VectorFn>,
    lipschitz: f64,
}

impl FnSmooth {
    pub fn new(
        value: impl Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "Lipschitz constant must be finite and nonnegative, got {lipschitz}"
            )));
        }
        Ok(Self {
            value: Box::new(value),
            gradient: Box::new(gradient),
            lipschitz,
        })
    }
}

impl SmoothTerm for FnSmooth {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (self.gradient)(x)
    }

    fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
    }
}

/// `g` assembled from closures.
pub struct FnProx {
    value: Box<ValueFn>,
    prox: Box<ProxFn>,
}

impl FnProx {
    pub fn new(
        value: impl Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        prox: impl Fn(ArrayView1<f64>, f64) -> Array1<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Box::new(value),
            prox: Box::new(prox),
        }
    }
}

impl ProxFriendlyTerm for FnProx {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        (self.value)(x)
    }

    fn prox(&self, x: ArrayView1<f64>, step: f64) -> Array1<f64> {
        (self.prox)(x, step)
    }
}

/// `h` assembled from closures.
pub struct FnConvex {
    value: Box<ValueFn>,
    subgradient: Box<VectorFn>,
    gradient_lipschitz: Option<f64>,
}

impl FnConvex {
    pub fn new(
        value: impl Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        subgradient: impl Fn(ArrayView1<f64>) -> Array1<f64> + Send + Sync + 'static,
        gradient_lipschitz: Option<f64>,
    ) -> Self {
        Self {
            value: Box::new(value),
            subgradient: Box::new(subgradient),
            gradient_lipschitz,
        }
    }
}

impl ConvexTerm for FnConvex {
    fn value(&self, x: ArrayView1<f64>) -> f64 {
        (self.value)(x)
    }

    fn subgradient(&self, x: ArrayView1<f64>) -> Array1<f64> {
        (self.subgradient)(x)
    }

    fn gradient_lipschitz_constant(&self) -> Option<f64> {
        self.gradient_lipschitz
    }
}

/// A DC program `min f + g - h` over `R^dimension`.
///
/// Immutable once built; cheap to clone and safe to share between threads.
#[derive(Clone)]
pub struct DcProblem {
    smooth: Arc<dyn SmoothTerm>,
    prox_friendly: Arc<dyn ProxFriendlyTerm>,
    concave_part: Arc<dyn ConvexTerm>,
    dimension: usize,
}

impl fmt::Debug for DcProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DcProblem")
            .field("dimension", &self.dimension)
            .field("lipschitz_constant", &self.smooth.lipschitz_constant())
            .finish_non_exhaustive()
    }
}

impl DcProblem {
    /// Rejects a zero dimension and objectives that are not finite at the origin.
    pub fn new(
        smooth: Arc<dyn SmoothTerm>,
        prox_friendly: Arc<dyn ProxFriendlyTerm>,
        concave_part: Arc<dyn ConvexTerm>,
        dimension: usize,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(DcaError::InvalidArgument(
                "problem dimension must be positive".into(),
            ));
        }
        let lf = smooth.lipschitz_constant();
        if !(lf >= 0.0) || !lf.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "Lipschitz constant must be finite and nonnegative, got {lf}"
            )));
        }
        let problem = Self {
            smooth,
            prox_friendly,
            concave_part,
            dimension,
        };
        let origin = Array1::zeros(dimension);
        let f0 = problem.objective(origin.view());
        if !f0.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "objective is not finite at the origin ({f0})"
            )));
        }
        Ok(problem)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lipschitz_constant(&self) -> f64 {
        self.smooth.lipschitz_constant()
    }

    pub fn smooth(&self) -> &dyn SmoothTerm {
        self.smooth.as_ref()
    }

    pub fn prox_friendly(&self) -> &dyn ProxFriendlyTerm {
        self.prox_friendly.as_ref()
    }

    pub fn concave_part(&self) -> &dyn ConvexTerm {
        self.concave_part.as_ref()
    }

    /// Unchecked objective. Returns `+inf` whenever `g(x) = +inf`.
    pub(crate) fn objective(&self, x: ArrayView1<f64>) -> f64 {
        let g = self.prox_friendly.value(x);
        if g == f64::INFINITY {
            return f64::INFINITY;
        }
        self.smooth.value(x) + g - self.concave_part.value(x)
    }
}

/// `F(x) = f(x) + g(x) - h(x)`, or `+inf` outside `dom g`.
pub fn evaluate_objective(problem: &DcProblem, x: ArrayView1<f64>) -> Result<f64> {
    check_len(problem.dimension, x.len())?;
    Ok(problem.objective(x))
}

/// `||grad f(x) + xi - eta||` for caller-supplied `xi in dg(x)` and `eta in dh(x)`.
///
/// A value near zero certifies that `x` is approximately critical.
pub fn criticality_residual(
    problem: &DcProblem,
    x: ArrayView1<f64>,
    eta: ArrayView1<f64>,
    xi: ArrayView1<f64>,
) -> Result<f64> {
    let n = problem.dimension;
    check_len(n, x.len())?;
    check_len(n, eta.len())?;
    check_len(n, xi.len())?;
    let mut w = problem.smooth.gradient(x);
    w += &xi;
    w -= &eta;
    Ok(norm(w.view()))
}

pub(crate) fn norm(x: ArrayView1<f64>) -> f64 {
    x.dot(&x).sqrt()
}

pub(crate) fn distance(x: ArrayView1<f64>, y: ArrayView1<f64>) -> f64 {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

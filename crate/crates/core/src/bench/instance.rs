//! Random sparse least-squares instances.
//!
//! Every instance is a pure function of its [`InstanceSpec`]. Randomness comes
//! from ChaCha8 seeded with `spec.seed`, split into independent streams:
//!
//! | stream | draws |
//! |--------|-------|
//! | 0 | entries of `A` |
//! | 1 | support `S` |
//! | 2 | values of `x*` on `S` |
//! | 3 | observation noise |
//! | 4 | starting point `x0` |

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DcaError, Result};
use crate::operators::{
    estimate_lipschitz, gram_spectral_radius, LeastSquaresData, RegularizerSpec, LIPSCHITZ_MAX_ITERS,
    LIPSCHITZ_TOLERANCE,
};

const STREAM_MATRIX: u64 = 0;
const STREAM_SUPPORT: u64 = 1;
const STREAM_SIGNAL: u64 = 2;
const STREAM_NOISE: u64 = 3;
const STREAM_START: u64 = 4;

pub const DEFAULT_NOISE_SCALE: f64 = 0.001;

/// `(m, n, K)` triple, written `MxNxK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProblemSize {
    pub rows: usize,
    pub cols: usize,
    pub sparsity: usize,
}

impl ProblemSize {
    pub fn new(rows: usize, cols: usize, sparsity: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || sparsity == 0 {
            return Err(DcaError::InvalidArgument(format!(
                "size {rows}x{cols}x{sparsity} must be positive"
            )));
        }
        if sparsity > cols {
            return Err(DcaError::InvalidArgument(format!(
                "sparsity K = {sparsity} exceeds n = {cols}"
            )));
        }
        Ok(Self {
            rows,
            cols,
            sparsity,
        })
    }

    /// `(120 i, 512 i, 20 i)`.
    pub fn scaled(i: usize) -> Self {
        Self {
            rows: 120 * i,
            cols: 512 * i,
            sparsity: 20 * i,
        }
    }

    /// The multiple `i` of the `(120, 512, 20)` base size, rounded up.
    pub fn scale_index(&self) -> usize {
        self.rows.div_ceil(120).max(1)
    }
}

impl fmt::Display for ProblemSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.rows, self.cols, self.sparsity)
    }
}

impl FromStr for ProblemSize {
    type Err = DcaError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(['x', 'X']).collect();
        let bad = || DcaError::InvalidArgument(format!("size '{s}' is not of the form MxNxK"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let nums: Vec<usize> = parts
            .iter()
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Self::new(nums[0], nums[1], nums[2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub size: ProblemSize,
    pub noise_scale: f64,
    pub seed: u64,
    pub regularizer: RegularizerSpec,
}

impl InstanceSpec {
    pub fn new(size: ProblemSize, seed: u64, regularizer: RegularizerSpec) -> Self {
        Self {
            size,
            noise_scale: DEFAULT_NOISE_SCALE,
            seed,
            regularizer,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        ProblemSize::new(self.size.rows, self.size.cols, self.size.sparsity)?;
        if !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "noise scale must be nonnegative, got {}",
                self.noise_scale
            )));
        }
        self.regularizer.validate()
    }
}

/// Data plus the planted sparse signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub data: LeastSquaresData,
    pub ground_truth: Array1<f64>,
    /// Sorted support of `ground_truth`.
    pub support: Vec<usize>,
    /// `lambda_max(G^T G)` of the Gaussian draw `G` before column scaling.
    pub unnormalized_lipschitz: f64,
}

/// Which constant the harness hands to the solvers as `L_f`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipschitzRule {
    /// `lambda_max(A^T A)` of the normalized matrix.
    Tight,
    /// `lambda_max(G^T G)` of the matrix before its columns were scaled,
    /// raised to the tight value if smaller. Still a valid Lipschitz bound,
    /// just a loose one (about `m` times the tight value), which makes
    /// every method take proportionally shorter steps.
    #[default]
    Unnormalized,
}

impl LipschitzRule {
    pub fn lipschitz(self, instance: &Instance) -> Result<f64> {
        let tight = estimate_lipschitz(&instance.data, LIPSCHITZ_TOLERANCE, LIPSCHITZ_MAX_ITERS)?.value;
        Ok(match self {
            LipschitzRule::Tight => tight,
            LipschitzRule::Unnormalized => tight.max(instance.unnormalized_lipschitz),
        })
    }
}

impl fmt::Display for LipschitzRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LipschitzRule::Tight => "tight",
            LipschitzRule::Unnormalized => "unnormalized",
        })
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Gaussian `A` with unit-norm columns, uniform support, Gaussian `x*` on it,
/// and `b = A x* + noise_scale * n_hat`.
pub fn generate_instance(spec: &InstanceSpec) -> Result<Instance> {
    spec.validate()?;
    let ProblemSize {
        rows: m,
        cols: n,
        sparsity: k,
    } = spec.size;

    let mut rng = stream(spec.seed, STREAM_MATRIX);
    let mut a = Array2::from_shape_simple_fn((m, n), || rng.sample::<f64, _>(StandardNormal));
    let unnormalized_lipschitz = gram_spectral_radius(a.view(), LIPSCHITZ_TOLERANCE, LIPSCHITZ_MAX_ITERS)?.value;
    for mut col in a.columns_mut() {
        let nrm = col.dot(&col).sqrt();
        if nrm == 0.0 {
            return Err(DcaError::InvalidArgument("drew an all-zero column".into()));
        }
        col /= nrm;
    }

    let mut rng = stream(spec.seed, STREAM_SUPPORT);
    let mut support = rand::seq::index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();

    let mut rng = stream(spec.seed, STREAM_SIGNAL);
    let mut ground_truth = Array1::zeros(n);
    for &i in &support {
        ground_truth[i] = rng.sample::<f64, _>(StandardNormal);
    }

    let mut b = a.dot(&ground_truth);
    if spec.noise_scale > 0.0 {
        let mut rng = stream(spec.seed, STREAM_NOISE);
        for v in b.iter_mut() {
            *v += spec.noise_scale * rng.sample::<f64, _>(StandardNormal);
        }
    }

    Ok(Instance {
        spec: *spec,
        data: LeastSquaresData::new(a, b)?,
        ground_truth,
        support,
        unnormalized_lipschitz,
    })
}

/// Uniform draw from `(0, 1)^n` on the starting-point stream of `seed`.
pub fn starting_point(seed: u64, n: usize) -> Array1<f64> {
    let mut rng = stream(seed, STREAM_START);
    (0..n).map(|_| rng.sample::<f64, _>(Open01)).collect()
}

/// Serializable form of an [`Instance`]; the matrix is stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub spec: InstanceSpec,
    pub matrix: Vec<Vec<f64>>,
    pub observations: Vec<f64>,
    pub ground_truth: Vec<f64>,
    pub support: Vec<usize>,
    pub unnormalized_lipschitz: f64,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        Self {
            spec: inst.spec,
            matrix: inst
                .data
                .matrix()
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            observations: inst.data.observations().to_vec(),
            ground_truth: inst.ground_truth.to_vec(),
            support: inst.support.clone(),
            unnormalized_lipschitz: inst.unnormalized_lipschitz,
        }
    }
}

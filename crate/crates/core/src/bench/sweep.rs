use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::instance::{generate_instance, starting_point, InstanceSpec, LipschitzRule, ProblemSize};
use crate::error::{DcaError, Result};
use crate::operators::{LeastSquares, RegularizerKind};
use crate::solvers::{RunSummary, SolverConfig, SolverKind, SolverOutput, DEFAULT_TITER_CAP};

/// One solver column of a sweep: which method, `lambda / L_f`, and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub kind: SolverKind,
    pub lambda_multiple: f64,
    pub tol: f64,
    /// Tolerances that replace `tol` for specific sizes.
    #[serde(default)]
    pub tol_by_size: BTreeMap<ProblemSize, f64>,
}

impl SolverSettings {
    pub fn new(kind: SolverKind, lambda_multiple: f64, tol: f64) -> Self {
        Self {
            kind,
            lambda_multiple,
            tol,
            tol_by_size: BTreeMap::new(),
        }
    }

    pub fn tol_for(&self, size: &ProblemSize) -> f64 {
        self.tol_by_size.get(size).copied().unwrap_or(self.tol)
    }

    fn validate(&self) -> Result<()> {
        let tols = std::iter::once(&self.tol).chain(self.tol_by_size.values());
        if tols.into_iter().any(|t| !(*t > 0.0)) {
            return Err(DcaError::InvalidArgument(format!(
                "{}: tolerances must be positive",
                self.kind
            )));
        }
        if !(self.lambda_multiple > 0.0) || !self.lambda_multiple.is_finite() {
            return Err(DcaError::InvalidArgument(format!(
                "{}: lambda multiple must be positive, got {}",
                self.kind, self.lambda_multiple
            )));
        }
        Ok(())
    }

    /// Concrete config for an instance with Lipschitz constant `lf`.
    pub fn config(&self, lf: f64, size: &ProblemSize, titer_cap: usize, check_invariants: bool) -> SolverConfig {
        let mut cfg = SolverConfig::with_lambda_multiple(lf, self.lambda_multiple, self.tol_for(size));
        cfg.titer_cap = titer_cap;
        cfg.check_invariants = check_invariants;
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub trials: usize,
    pub titer_cap: usize,
    /// Trial `t` uses seed `base_seed + t`.
    pub base_seed: u64,
    pub check_invariants: bool,
    /// Worker threads; `0` means one per processor.
    pub jobs: usize,
    pub lipschitz: LipschitzRule,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            trials: 30,
            titer_cap: DEFAULT_TITER_CAP,
            base_seed: 0,
            check_invariants: false,
            jobs: 0,
            lipschitz: LipschitzRule::default(),
        }
    }
}

/// Outcome of one solver on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub lipschitz: f64,
    pub summary: Option<RunSummary>,
    pub hit_cap: bool,
    pub error: Option<String>,
}

impl TrialRecord {
    fn counts(&self) -> bool {
        self.summary.is_some() && !self.hit_cap
    }
}

/// Aggregate of one (size, solver, lambda) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub solver: SolverKind,
    pub family: RegularizerKind,
    pub size: ProblemSize,
    pub lambda_multiple: f64,
    pub tol: f64,
    pub trials: usize,
    /// Trials entering the means: finished, not capped, not failed.
    pub averaged: usize,
    pub mean_iter: Option<f64>,
    pub mean_init: Option<f64>,
    pub mean_titer: Option<f64>,
    pub mean_fval: Option<f64>,
    pub mean_seconds: Option<f64>,
    /// Some trial reached the `tIter` cap.
    pub max_flag: bool,
    pub failures: usize,
    pub runs: Vec<TrialRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Means {
    pub iter: f64,
    pub init: f64,
    pub titer: f64,
    pub fval: f64,
    pub seconds: f64,
}

impl CellReport {
    /// Means over the trials that count, recomputed from `runs`.
    pub(crate) fn means(runs: &[TrialRecord]) -> Option<Means> {
        let used: Vec<&RunSummary> = runs
            .iter()
            .filter(|r| r.counts())
            .filter_map(|r| r.summary.as_ref())
            .collect();
        if used.is_empty() {
            return None;
        }
        let n = used.len() as f64;
        let mean = |f: &dyn Fn(&RunSummary) -> f64| used.iter().map(|s| f(s)).sum::<f64>() / n;
        Some(Means {
            iter: mean(&|s| s.outer_iterations as f64),
            init: mean(&|s| s.extra_inner_iterations as f64),
            titer: mean(&|s| s.total_iterations as f64),
            fval: mean(&|s| s.final_objective),
            seconds: mean(&|s| s.wall_seconds),
        })
    }

    fn from_runs(
        settings: &SolverSettings,
        template: &InstanceSpec,
        runs: Vec<TrialRecord>,
    ) -> Self {
        let means = Self::means(&runs);
        Self {
            solver: settings.kind,
            family: template.regularizer.kind,
            size: template.size,
            lambda_multiple: settings.lambda_multiple,
            tol: settings.tol_for(&template.size),
            trials: runs.len(),
            averaged: runs.iter().filter(|r| r.counts()).count(),
            mean_iter: means.map(|m| m.iter),
            mean_init: means.map(|m| m.init),
            mean_titer: means.map(|m| m.titer),
            mean_fval: means.map(|m| m.fval),
            mean_seconds: means.map(|m| m.seconds),
            max_flag: runs.iter().any(|r| r.hit_cap),
            failures: runs.iter().filter(|r| r.error.is_some()).count(),
            runs,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub cells: Vec<CellReport>,
}

fn run_trial(
    template: &InstanceSpec,
    trial: usize,
    options: &SweepOptions,
    solvers: &[SolverSettings],
) -> Vec<TrialRecord> {
    let seed = options.base_seed.wrapping_add(trial as u64);
    let fail = |lipschitz: f64, msg: String| {
        solvers
            .iter()
            .map(|_| TrialRecord {
                trial,
                seed,
                lipschitz,
                summary: None,
                hit_cap: false,
                error: Some(msg.clone()),
            })
            .collect::<Vec<_>>()
    };
    let spec = template.with_seed(seed);
    let instance = match generate_instance(&spec) {
        Ok(i) => i,
        Err(e) => return fail(f64::NAN, e.to_string()),
    };
    let lf = match options.lipschitz.lipschitz(&instance) {
        Ok(l) => l,
        Err(e) => return fail(f64::NAN, e.to_string()),
    };
    let problem = match LeastSquares::with_lipschitz(instance.data, lf).and_then(|s| s.into_problem(&spec.regularizer)) {
        Ok(p) => p,
        Err(e) => return fail(lf, e.to_string()),
    };
    let x0 = starting_point(seed, spec.size.cols);

    solvers
        .iter()
        .map(|settings| {
            let cfg = settings.config(lf, &spec.size, options.titer_cap, options.check_invariants);
            match settings.kind.solve(&problem, x0.view(), &cfg) {
                Ok(SolverOutput { summary, .. }) => TrialRecord {
                    trial,
                    seed,
                    lipschitz: lf,
                    hit_cap: summary.total_iterations >= options.titer_cap && !summary.converged(),
                    summary: Some(summary),
                    error: None,
                },
                Err(e) => TrialRecord {
                    trial,
                    seed,
                    lipschitz: lf,
                    summary: None,
                    hit_cap: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Runs every solver on `trials` instances of every size.
///
/// Instances and starting points are shared by all solvers of a trial, so
/// comparisons are paired. Trials run on a rayon pool; results are
/// assembled in (size, solver, trial) order regardless of completion order.
pub fn run_sweep(
    sizes: &[InstanceSpec],
    solvers: &[SolverSettings],
    options: &SweepOptions,
) -> Result<BenchmarkReport> {
    if options.trials == 0 {
        return Err(DcaError::InvalidArgument("trials must be at least 1".into()));
    }
    if options.titer_cap == 0 {
        return Err(DcaError::InvalidArgument("tIter cap must be positive".into()));
    }
    for s in solvers {
        s.validate()?;
    }
    for size in sizes {
        ProblemSize::new(size.size.rows, size.size.cols, size.size.sparsity)?;
        size.regularizer.validate()?;
    }

    let units: Vec<(usize, usize)> = (0..sizes.len())
        .flat_map(|s| (0..options.trials).map(move |t| (s, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| DcaError::InvalidArgument(format!("thread pool: {e}")))?;
    let results: Vec<Vec<TrialRecord>> = pool.install(|| {
        units
            .par_iter()
            .map(|&(s, t)| run_trial(&sizes[s], t, options, solvers))
            .collect()
    });

    let mut cells = Vec::with_capacity(sizes.len() * solvers.len());
    for (s, template) in sizes.iter().enumerate() {
        for (j, settings) in solvers.iter().enumerate() {
            let runs: Vec<TrialRecord> = (0..options.trials)
                .map(|t| results[s * options.trials + t][j].clone())
                .collect();
            cells.push(CellReport::from_runs(settings, template, runs));
        }
    }
    Ok(BenchmarkReport { cells })
}

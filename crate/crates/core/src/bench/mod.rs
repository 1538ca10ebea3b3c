//! Sparse least-squares benchmarks: instances, sweeps, reports.

pub mod instance;
pub mod report;
pub mod sweep;

pub use instance::{
    generate_instance, starting_point, Instance, InstanceFile, InstanceSpec, LipschitzRule, ProblemSize,
};
pub use report::{emit_report, read_json_report, report_csv, strip_timing, write_trace, ReportFormat, CSV_HEADER};
pub use sweep::{run_sweep, BenchmarkReport, CellReport, SolverSettings, SweepOptions, TrialRecord};

use crate::operators::RegularizerKind;
use crate::solvers::SolverKind;

/// Default stopping tolerance for a lambda sweep.
///
/// l1-2: `1e-5` everywhere. Logarithmic: `1e-4` at the base size, `5e-5`
/// up to `i = 4`, `2e-5` beyond, where `i` is the size multiple.
pub fn lambda_sweep_tol(family: RegularizerKind, size: &ProblemSize) -> f64 {
    match family {
        RegularizerKind::L1MinusL2 => 1e-5,
        RegularizerKind::Logarithmic => match size.scale_index() {
            0..=1 => 1e-4,
            2..=4 => 5e-5,
            _ => 2e-5,
        },
    }
}

/// Default stopping tolerance for a solver comparison.
///
/// l1-2: `1e-6`. Logarithmic: pDCA_e gets `1.5e-5` (`4e-6` for `i > 3`),
/// every other method `6.5e-5` (`2e-5` for `i > 3`).
pub fn compare_tol(solver: SolverKind, family: RegularizerKind, size: &ProblemSize) -> f64 {
    match family {
        RegularizerKind::L1MinusL2 => 1e-6,
        RegularizerKind::Logarithmic => {
            let small = size.scale_index() <= 3;
            match (solver, small) {
                (SolverKind::PdcaE, true) => 1.5e-5,
                (SolverKind::PdcaE, false) => 4e-6,
                (_, true) => 6.5e-5,
                (_, false) => 2e-5,
            }
        }
    }
}

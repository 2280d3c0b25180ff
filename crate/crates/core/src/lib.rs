//! Certification of Bell nonlocality and EPR steering from data that shows
//! bounded signalling.
//!
//! * [`scenario`]: behaviors, budgets, raw-count ingestion.
//! * [`slhv`]: signalling local hidden-variable polytope (LP).
//! * [`correction`]: analytic corrections to full-correlation Bell bounds.
//! * [`qlinalg`]: dense Hermitian algebra and standard quantum models.
//! * [`signalling`]: guessing probability of reduced states.
//! * [`slhs`]: signalling local hidden-state models (SDP).
//! * [`witness`]: steering witnesses and Schmidt-number bounds.
//! * [`postselect`]: inefficient detectors and post-selection scans.

pub mod correction;
pub mod error;
pub mod postselect;
pub mod qlinalg;
pub mod scenario;
pub mod signalling;
pub mod slhs;
pub mod slhv;
pub mod witness;

pub use error::{Error, Result};
pub use sigcert_conic::{SolverSettings, Status};

use sigcert_conic::SolverReport;

/// Rounds to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

/// Fails unless the backend reported an optimal solution.
pub(crate) fn require_optimal(report: &SolverReport, what: &str) -> Result<()> {
    if report.is_optimal() {
        Ok(())
    } else {
        Err(Error::SolverFailure {
            status: report.status,
            detail: format!(
                "{what}: backend status {}, gap {:.3e}, max residual {:.3e}, {} iterations",
                report.backend_status, report.gap, report.max_residual, report.iterations
            ),
        })
    }
}

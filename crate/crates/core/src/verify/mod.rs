//! Convergence studies against the closed-form limits.

mod checks;
mod report;
mod suite;

pub use checks::{
    check_boundary_limits, check_current_limit, check_elongation_profile, check_energy_profile,
    check_interior_maximum, check_nonstationary_consistency, check_uphill, conjecture_probe,
    refrigerator_scan, richardson, scaled_currents, simpson, ConsistencySetup, TestFunction, UphillGrid,
    BOUNDARY_TOL, CONSISTENCY_TOL, CURRENT_TOL, ENERGY_TOL,
};
pub use report::{Metric, Verdict, VerificationReport};
pub use suite::{run_suite, Suite, SuiteResult};

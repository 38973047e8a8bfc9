//! Exact moments of the chain: stationary solves, time evolution and the
//! derived profile observables.

mod evolve;
mod profile;
mod stationary;

pub use evolve::{
    evolve_moments, gibbs_moments, max_stable_step, product_gaussian_moments, STEP_BOUND,
};
pub use profile::{
    energy_decomposition, equipartition_defect, phi_value, profile_from_moments,
    stationary_profile,
    DecompositionReport, ProfileTable,
};
pub use stationary::{
    check_psd, solve_stationary, solve_stationary_mean, solve_stationary_second_moments,
    solve_stationary_second_moments_with, LyapunovMethod, MomentSolution, FIXED_POINT_MAX_ITERS,
    FIXED_POINT_TOL, MAX_N, PSD_TOL,
};

//! Certification harness: critical-point checks, local-minimum probes,
//! finite-difference gradient oracles, brute-force grid search, the
//! Loewner-gap global certificate and the trace limit, assembled into a
//! deterministic report.

mod checks;
mod config;
mod report;
mod suite;

pub use checks::{
    coefficient_parity_study, critical_point_check, critical_point_check_with,
    default_half_width, finite_diff_grad, gain_residual_check, gradient_agreement_check,
    grid_check, grid_oracle, grid_oracle_with, joseph_equality_check, lambda_samples,
    local_min_probe, loewner_identity_check, probe_direction, sample_gain, trace_limit_check,
    trace_limit_on_posterior, trace_limit_value,
};
pub use config::{
    objective_scale, ProbeConfig, FD_STEP_SCALE, GRID_MAX_DIMS, GRID_POINTS, LAMBDA_GUARD,
    MARGIN_TOL,
};
pub use report::{ClaimKind, Record, VerificationReport};
pub use suite::{
    critical_catalog, grid_catalog, minimization_catalog, random_sympolys, run_suite,
    run_suite_with, SuiteOptions, CRITICAL_TOL, GAIN_RESIDUAL_TOL, GRADIENT_ORACLE_TOL,
    JOSEPH_TOL, LOEWNER_TOL, TRACE_LIMIT_LAMBDA, TRACE_LIMIT_TOL,
};

//! Kalman update covariance machinery and a certification harness showing
//! that the optimal gain minimizes, or is a critical point of, a family of
//! spectral uncertainty measures of the posterior covariance.

pub mod cli;
pub mod error;
pub mod exec;
pub mod kalman;
pub mod matrix;
pub mod objectives;
pub mod verify;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use kalman::{
    gain_residual, innovation_cov, loewner_gap, loewner_gap_closed_form, optimal_gain,
    posterior_cov, posterior_cov_compensated, posterior_cov_standard, posterior_directional_derivative, GainMatrix,
    KalmanProblem, MeasurementMode,
};
pub use objectives::{
    coefficient_vector, eval_objective, eval_on_posterior, objective_grad_k, objective_grad_p,
    ObjectiveSpec, SymmetricPolySpec, SymmetricPolyTerm,
};

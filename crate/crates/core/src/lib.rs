//! Least-squares regression with missing predictors and response: complete-case
//! and available-case covariance estimators, their asymptotic variances, and
//! advice on which one to prefer.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advisor;
pub mod asymptotics;
pub mod data;
pub mod error;
pub mod estimators;
pub mod kurtosis;
pub mod linalg;
pub mod simulation;

pub use asymptotics::{
    ac_variance_terms, v_matrices, v_matrices_with_phi, v_single, AsymptoticReport, HalfVecIndex,
};
pub use data::{observation_proportions, partition_model, CovarianceModel, Dataset, ProportionSet};
pub use error::{Error, Result};
pub use estimators::{coefficients, covariance, fit, CovEstimate, FitResult, Method};
pub use kurtosis::{estimate_kappa, kappa_marginal, kappa_mardia, KappaEstimate, KappaMethod};

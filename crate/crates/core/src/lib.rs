//! Transfer regression with proxy outcomes.
//!
//! A small gold dataset from the prediction task of interest is combined
//! with a large dataset from a closely related proxy task whose coefficients
//! differ by a sparse bias vector. The crate provides:
//!
//! - [`linalg`]: dense symmetric linear algebra, standardization, sample
//!   covariances
//! - [`solvers`]: OLS, ridge, offset-target LASSO (coordinate descent),
//!   logistic regression (Newton), offset-target L1 logistic (proximal
//!   gradient)
//! - [`estimators`]: gold/proxy/averaging/weighted baselines, the two-step
//!   joint estimator with bias recovery, truncation, the oracle benchmark,
//!   and cross-validated λ selection
//! - [`synthgen`]: seeded synthetic two-task scenario generation
//! - [`bounds`]: executable forms of the theoretical error bounds and
//!   assumption diagnostics
//! - [`metrics`]: parameter-error norms, MSE, and AUC

pub mod bounds;
pub mod estimators;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod solvers;
pub mod synthgen;

pub use estimators::{
    BiasVector, CvSelection, EstimatorFit, EstimatorKind, EstimatorSpec, FitOptions, TwoTaskData,
};
pub use linalg::{Matrix, SymMatrix};
pub use solvers::{FitResult, LossFamily};
pub use synthgen::{BiasRegime, ScenarioConfig, ScenarioInstance};

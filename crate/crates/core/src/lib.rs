//! Doubly-robust estimation of the mean of an outcome that is missing at
//! random, together with the Kang–Schafer simulation design used to
//! stress-test these estimators when inverse-probability weights are highly
//! variable.
//!
//! The crate is organised bottom-up:
//!
//! * [`dgp`] draws samples from the benchmark distribution and builds the
//!   correct/misspecified analysis views.
//! * [`linmod`] fits propensity and outcome working models (IRLS, weighted
//!   and covariate-extended regressions, inverse-linear propensity fits and
//!   the extended logistic propensity).
//! * [`estimators`] evaluates the estimator family on fitted values.
//! * [`mc`] runs replicated scenarios deterministically across workers and
//!   summarises the sampling distributions.
//! * [`sensitivity`] builds the propensity × outcome matrix of estimates and
//!   tests row/column homogeneity with a bootstrap Wald test.

pub mod data;
pub mod dgp;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod linmod;
pub mod mc;
pub mod rng;
pub mod sensitivity;

pub use data::{AnalysisView, Dataset};
pub use dgp::{DgpConfig, FullSample};
pub use error::{Error, Result};
pub use estimators::{EstimateFlag, EstimateSet, EstimatorName};
pub use linmod::{Link, OutcomeFit, OutcomeKind, PropensityFit, PropensityKind, WeightDiagnostics};
pub use mc::{DensitySeries, McSummary, ScenarioSpec, SummaryRow};
pub use sensitivity::{ModelSpec, SensitivityMatrix};

/// True population mean of the outcome under the benchmark design.
pub const MU_TRUE: f64 = 210.0;

// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nonparametric change-point detection for nonlinear time-series regression.
//!
//! Observations follow `Y_t = mu(X_t) + sigma(X_t) eps_t`. Two adjacent
//! segments are compared through bias-corrected Nadaraya-Watson estimates of
//! `mu` and `sigma^2` on a common grid, and the sup-norm of the standardized
//! difference is referred to a Gumbel limit. [`detect::cpfind`] applies the
//! test recursively to locate multiple breaks.

pub mod detect;
pub mod error;
pub mod estimators;
pub mod hypothesis;
pub mod ingest;
pub mod kernels;
pub mod report;
pub mod sample;
pub mod simulate;

pub use detect::{cpfind, BreakSet, DetectConfig, DetectedBreak};
pub use error::{Error, Result};
pub use estimators::{estimate_segment, EstimatorConfig, SegmentEstimate};
pub use hypothesis::{
    critical_value, gumbel_quantile, test_joint, test_mean, test_variance, JointOutcome, Target,
    TestConfig, TestOutcome, VarianceAssumption,
};
pub use ingest::{load_csv, CovariateScale, IngestSchema, Transform};
pub use kernels::{BandwidthConfig, Kernel};
pub use report::RunReport;
pub use sample::{TimeSeriesSample, Window};

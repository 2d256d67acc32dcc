//! Dimension Insensitive Euclidean Metric (DIEM).
//!
//! Cosine similarity and the normalized Euclidean distance concentrate
//! around a constant as the dimension grows, and the raw Euclidean distance
//! drifts upward with it. DIEM subtracts the dimension's expected random
//! distance and rescales, giving a comparison whose null distribution has
//! zero mean and a spread that no longer depends on `n`.
//!
//! Modules:
//! - [`vecgen`]: seeded random vectors (uniform box, Gaussian, unit sphere)
//! - [`metrics`]: cosine (signed and unsigned), Euclidean, normalized
//!   Euclidean and Manhattan distances
//! - [`diem`]: calibration and evaluation of DIEM
//! - [`stats`]: boxplot summaries, histograms, KS and z tests
//! - [`simulation`]: dimension sweeps and the convergence/normality studies
//! - [`embedio`]: embedding ingestion and batch comparison

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diem;
pub mod embedio;
pub mod kvdoc;
pub mod metrics;
pub mod simulation;
pub mod stats;
pub mod vecgen;

pub use diem::{calibrate, diem_value, DiemCalibration, DiemError, OrthogonalStrategy};
pub use metrics::{CosineConvention, MetricError, Vector};
pub use stats::{DistributionSummary, Histogram, TestResult};
pub use vecgen::{DomainSpec, SamplingDistribution, SeedSpec, SignDomain};

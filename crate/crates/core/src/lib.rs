//! Permutation tests restricted to derangements.
//!
//! Given paired data `(x_i, y_i)`, the *random family* is every pairing of
//! `y` with a fixed-point-free rearrangement of `x`. [`rfm::rfm_test`]
//! computes a statistic (least-squares slope, Pearson's r or covariance)
//! over the whole family, or over a seeded uniform sample of it, and reports
//! where the observed pairing falls.
//!
//! ```
//! use rfm_core::{rfm_test, PairedSample, RfmConfig};
//!
//! let v: Vec<f64> = (1..=6).map(f64::from).collect();
//! let sample = PairedSample::new(v.clone(), v).unwrap();
//! let result = rfm_test(&sample, &RfmConfig::default()).unwrap();
//! assert_eq!(result.family_size, 265);
//! assert!(result.percentile_of_observed > 97.5);
//! ```

pub mod derangement;
pub mod error;
pub mod rfm;
pub mod stats;

pub use derangement::{
    count_derangements, enumerate_derangements, is_derangement, sample_derangement, Derangement,
    DerangementCount,
};
pub use error::{Error, Result, Variable};
pub use rfm::{
    expected_family_mean, percentile_of, rfm_test, Center, Mode, RfmConfig, RfmResult,
    StatisticKind,
};
pub use stats::{DistributionSummary, PairedSample};

//! Statistic kernels and distribution diagnostics.

pub mod kde;
pub mod kernels;
pub mod shapiro;
pub mod summary;
pub mod tdist;

pub use kde::{
    kde_density, kde_density_at, kde_density_weighted, silverman_bandwidth, Bandwidth, DensityGrid,
    KdeConfig,
};
pub use kernels::{covariance, mean, ols_slope, pearson_r, t_statistic, PairedSample};
pub use shapiro::{shapiro_wilk, SwResult};
pub use summary::{DistributionSummary, Histogram, TailReference};
pub use tdist::{t_cdf, t_two_sided_p};

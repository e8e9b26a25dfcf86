//! Gaussian kernel density estimation on a regular grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Contributions from points further than this many bandwidths away are
/// below `φ(10) ≈ 7.7e-23` and are skipped.
const KERNEL_CUTOFF: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `0.9 · min(sd, IQR / 1.34) · n^(-1/5)`.
    Silverman,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    pub bandwidth: Bandwidth,
    pub grid_points: usize,
    /// Defaults to `[min - 3h, max + 3h]`.
    pub grid_range: Option<(f64, f64)>,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            bandwidth: Bandwidth::Silverman,
            grid_points: 512,
            grid_range: None,
        }
    }
}

impl KdeConfig {
    fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig(
                "KDE grid needs at least 2 points".into(),
            ));
        }
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "bandwidth must be positive, got {h}"
                )));
            }
        }
        if let Some((lo, hi)) = self.grid_range {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidConfig(format!(
                    "invalid grid range [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// A density estimate evaluated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub bandwidth: f64,
    pub points: Vec<(f64, f64)>,
}

impl DensityGrid {
    /// Trapezoidal integral of the density over the grid.
    pub fn integral(&self) -> f64 {
        trapezoid(&self.points)
    }
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

fn gaussian(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Points with non-negative multiplicities, sorted by location.
#[derive(Clone, Debug)]
struct WeightedPoints {
    locs: Vec<f64>,
    weights: Vec<f64>,
    total: f64,
}

impl WeightedPoints {
    fn new(mut pairs: Vec<(f64, f64)>) -> Result<Self> {
        pairs.retain(|&(_, w)| w > 0.0);
        if pairs.is_empty() {
            return Err(Error::InsufficientData {
                required: 1,
                available: 0,
            });
        }
        if let Some(index) = pairs
            .iter()
            .position(|(v, w)| !v.is_finite() || !w.is_finite())
        {
            return Err(Error::Domain(format!("non-finite value at index {index}")));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = pairs.iter().map(|p| p.1).sum();
        let (locs, weights) = pairs.into_iter().unzip();
        Ok(WeightedPoints {
            locs,
            weights,
            total,
        })
    }

    fn unit(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| (v, 1.0)).collect())
    }

    /// Sample standard deviation, treating weights as multiplicities.
    fn sd(&self) -> f64 {
        if self.total <= 1.0 {
            return 0.0;
        }
        let mean = self
            .locs
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum::<f64>()
            / self.total;
        let ss: f64 = self
            .locs
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * (v - mean) * (v - mean))
            .sum();
        (ss / (self.total - 1.0)).sqrt()
    }

    /// Linear-interpolation quantile (R type 7) of the expanded sample.
    fn quantile(&self, p: f64) -> f64 {
        let h = (self.total - 1.0).max(0.0) * p;
        let lo = h.floor();
        let frac = h - lo;
        let a = self.at_rank(lo);
        if frac == 0.0 {
            a
        } else {
            a + frac * (self.at_rank(lo + 1.0) - a)
        }
    }

    // value at 0-based rank `k` of the expanded sample
    fn at_rank(&self, k: f64) -> f64 {
        let mut cum = 0.0;
        for (v, w) in self.locs.iter().zip(&self.weights) {
            cum += w;
            if cum > k {
                return *v;
            }
        }
        *self.locs.last().unwrap()
    }

    fn silverman(&self) -> f64 {
        let sd = self.sd();
        let iqr = self.quantile(0.75) - self.quantile(0.25);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        0.9 * spread * self.total.powf(-0.2)
    }

    fn density_at(&self, g: f64, h: f64) -> f64 {
        let lo = self.locs.partition_point(|&v| v < g - KERNEL_CUTOFF * h);
        let hi = self.locs.partition_point(|&v| v <= g + KERNEL_CUTOFF * h);
        let sum: f64 = self.locs[lo..hi]
            .iter()
            .zip(&self.weights[lo..hi])
            .map(|(v, w)| w * gaussian((g - v) / h))
            .sum();
        sum / (self.total * h)
    }

    fn estimate(&self, cfg: &KdeConfig) -> Result<DensityGrid> {
        cfg.validate()?;
        let h = match cfg.bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Silverman => {
                let h = self.silverman();
                if h.is_nan() || h <= 0.0 {
                    return Err(Error::ZeroBandwidth);
                }
                h
            }
        };
        let (lo, hi) = cfg.grid_range.unwrap_or_else(|| {
            (
                self.locs[0] - 3.0 * h,
                self.locs[self.locs.len() - 1] + 3.0 * h,
            )
        });
        let last = (cfg.grid_points - 1) as f64;
        let points = (0..cfg.grid_points)
            .into_par_iter()
            .map(|i| {
                let g = lo + (hi - lo) * (i as f64 / last);
                (g, self.density_at(g, h))
            })
            .collect();
        Ok(DensityGrid {
            bandwidth: h,
            points,
        })
    }
}

/// Silverman's rule-of-thumb bandwidth. Zero when all values coincide.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    Ok(WeightedPoints::unit(values)?.silverman())
}

/// Density estimate of `values` on the grid described by `cfg`.
pub fn kde_density(values: &[f64], cfg: &KdeConfig) -> Result<DensityGrid> {
    WeightedPoints::unit(values)?.estimate(cfg)
}

/// Density estimate from `(location, count)` pairs such as histogram bin
/// midpoints, each location counted `count` times.
pub fn kde_density_weighted(points: &[(f64, f64)], cfg: &KdeConfig) -> Result<DensityGrid> {
    WeightedPoints::new(points.to_vec())?.estimate(cfg)
}

/// Density at a single point with an explicit bandwidth.
pub fn kde_density_at(values: &[f64], bandwidth: f64, at: f64) -> Result<f64> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    Ok(WeightedPoints::unit(values)?.density_at(at, bandwidth))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_kernel_peak() {
        assert!((kde_density_at(&[0.0], 1.0, 0.0).unwrap() - 0.398_94).abs() < 1e-5);
        assert!((kde_density_at(&[0.0], 2.0, 0.0).unwrap() - 0.199_47).abs() < 1e-5);
    }

    #[test]
    fn symmetric_pair() {
        let d = kde_density_at(&[-1.0, 1.0], 1.0, 0.0).unwrap();
        assert!((d - 0.241_97).abs() < 1e-5);
    }

    #[test]
    fn grid_spans_three_bandwidths_and_integrates() {
        let values = [0.5, 1.0, 1.2, 2.8, 3.3, 4.0];
        let cfg = KdeConfig {
            bandwidth: Bandwidth::Fixed(0.5),
            grid_points: 512,
            grid_range: None,
        };
        let grid = kde_density(&values, &cfg).unwrap();
        assert_eq!(grid.points.len(), 512);
        assert!((grid.points[0].0 - (0.5 - 1.5)).abs() < 1e-12);
        assert!((grid.points[511].0 - (4.0 + 1.5)).abs() < 1e-12);
        assert!(grid.points.iter().all(|p| p.1 >= 0.0));
        assert!((grid.integral() - 1.0).abs() < 0.02);
    }

    #[test]
    fn silverman_matches_hand_computation() {
        // sd = sqrt(var(1..=5, ddof=1)) = sqrt(2.5); IQR (type 7) = 4 - 2 = 2
        let values = [1.0, 2.0, 3.0, 4.0, 5.0];
        let expected = 0.9 * (2.5f64.sqrt()).min(2.0 / 1.34) * 5f64.powf(-0.2);
        assert!((silverman_bandwidth(&values).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn weighted_equals_expanded() {
        let expanded = [1.0, 1.0, 1.0, 2.0, 4.0, 4.0];
        let weighted = [(4.0, 2.0), (1.0, 3.0), (2.0, 1.0)];
        assert!(
            (silverman_bandwidth(&expanded).unwrap()
                - WeightedPoints::new(weighted.to_vec()).unwrap().silverman())
            .abs()
                < 1e-14
        );
        let cfg = KdeConfig::default();
        let a = kde_density(&expanded, &cfg).unwrap();
        let b = kde_density_weighted(&weighted, &cfg).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.0 - q.0).abs() < 1e-12 && (p.1 - q.1).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_values_need_explicit_bandwidth() {
        assert_eq!(
            kde_density(&[2.0, 2.0, 2.0], &KdeConfig::default()),
            Err(Error::ZeroBandwidth)
        );
        let cfg = KdeConfig {
            bandwidth: Bandwidth::Fixed(1.0),
            ..KdeConfig::default()
        };
        assert!(kde_density(&[2.0, 2.0, 2.0], &cfg).is_ok());
    }

    #[test]
    fn config_validation() {
        let bad_grid = KdeConfig {
            grid_points: 1,
            ..KdeConfig::default()
        };
        assert!(kde_density(&[1.0, 2.0], &bad_grid).is_err());
        let bad_h = KdeConfig {
            bandwidth: Bandwidth::Fixed(0.0),
            ..KdeConfig::default()
        };
        assert!(kde_density(&[1.0, 2.0], &bad_h).is_err());
        assert!(kde_density(&[], &KdeConfig::default()).is_err());
    }
}

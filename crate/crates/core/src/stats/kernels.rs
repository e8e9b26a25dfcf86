//! Covariance, Pearson correlation, the least-squares slope and the
//! correlation t statistic.
//!
//! Moments use the population (`1/n`) convention throughout.

use crate::derangement::Derangement;
use crate::error::{Error, Result, Variable};

/// Paired observations `(x_i, y_i)`, `x` explanatory and `y` the response.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub const MIN_LEN: usize = 3;

    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.len() < Self::MIN_LEN {
            return Err(Error::InsufficientData {
                required: Self::MIN_LEN,
                available: x.len(),
            });
        }
        for (variable, values) in [(Variable::X, &x), (Variable::Y, &y)] {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { variable, index });
            }
        }
        Ok(PairedSample { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The pairing `(x_{σ(i)}, y_i)`.
    pub fn permute_x(&self, sigma: &Derangement) -> Result<PairedSample> {
        if sigma.len() != self.len() {
            return Err(Error::LengthMismatch {
                x: sigma.len(),
                y: self.len(),
            });
        }
        Ok(PairedSample {
            x: sigma.apply(&self.x),
            y: self.y.clone(),
        })
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn centered(values: &[f64]) -> Vec<f64> {
    let m = mean(values);
    values.iter().map(|v| v - m).collect()
}

pub(crate) fn sum_of_squares(centered: &[f64]) -> f64 {
    centered.iter().map(|c| c * c).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Population covariance `(1/n) Σ (x_i - x̄)(y_i - ȳ)`.
pub fn covariance(s: &PairedSample) -> f64 {
    dot(&centered(&s.x), &centered(&s.y)) / s.len() as f64
}

/// Pearson's `r`. Fails if either column has zero variance.
pub fn pearson_r(s: &PairedSample) -> Result<f64> {
    let cx = centered(&s.x);
    let cy = centered(&s.y);
    let sxx = nonzero(sum_of_squares(&cx), Variable::X)?;
    let syy = nonzero(sum_of_squares(&cy), Variable::Y)?;
    Ok((dot(&cy, &cx) / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Least-squares slope `Σ y_i (x_i - x̄) / Σ (x_i - x̄)²`.
pub fn ols_slope(s: &PairedSample) -> Result<f64> {
    let cx = centered(&s.x);
    let sxx = nonzero(sum_of_squares(&cx), Variable::X)?;
    Ok(dot(&s.y, &cx) / sxx)
}

fn nonzero(ss: f64, variable: Variable) -> Result<f64> {
    if ss > 0.0 {
        Ok(ss)
    } else {
        Err(Error::ZeroVariance(variable))
    }
}

/// `t = r √(n-2) / √(1-r²)`, Student-t with `n - 2` degrees of freedom when
/// `ρ = 0`.
pub fn t_statistic(r: f64, n: usize) -> Result<f64> {
    if n <= 2 {
        return Err(Error::Domain(format!("t statistic needs n > 2, got {n}")));
    }
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(Error::Domain(format!("correlation {r} outside [-1, 1]")));
    }
    if r.abs() == 1.0 {
        return Err(Error::Domain("t statistic is unbounded at |r| = 1".into()));
    }
    Ok(r * ((n - 2) as f64).sqrt() / (1.0 - r * r).sqrt())
}

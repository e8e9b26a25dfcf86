//! Single-pass summary of a stream of statistic values: moments, extremes, a
//! fixed-range histogram, exact tail counters and (up to a cap) the values
//! themselves.
//!
//! Summaries built over disjoint parts of a stream combine with
//! [`DistributionSummary::merge`]; moments use the pairwise update of Chan,
//! Golub and LeVeque.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed-width bins over `[lo, hi]`; out-of-range values land in the end bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig(
                "histogram needs at least one bin".into(),
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidConfig(format!(
                "invalid histogram range [{lo}, {hi}]"
            )));
        }
        Ok(Histogram {
            lo,
            hi,
            counts: vec![0; bins],
        })
    }

    pub fn bin_of(&self, value: f64) -> usize {
        let bins = self.counts.len();
        let width = self.hi - self.lo;
        if width <= 0.0 {
            return 0;
        }
        let pos = (value - self.lo) / width * bins as f64;
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(bins - 1)
        }
    }

    fn add(&mut self, value: f64) {
        let b = self.bin_of(value);
        self.counts[b] += 1;
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn edges(&self, bin: usize) -> (f64, f64) {
        let w = self.bin_width();
        (self.lo + w * bin as f64, self.lo + w * (bin + 1) as f64)
    }

    pub fn midpoints(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts.iter().enumerate().map(|(i, &c)| {
            let (a, b) = self.edges(i);
            ((a + b) / 2.0, c)
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// What the tail counters compare against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReference {
    /// One-sided counters compare values with this.
    pub observed: f64,
    /// Two-sided counter compares `|v - center|` with `|observed - center|`.
    pub center: f64,
    /// Absolute slack under which two values count as tied.
    pub tie_tolerance: f64,
}

impl TailReference {
    pub fn new(observed: f64, center: f64) -> Self {
        TailReference {
            observed,
            center,
            tie_tolerance: 0.0,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tie_tolerance = tol;
        self
    }

    pub fn is_ge(&self, v: f64) -> bool {
        v >= self.observed - self.tie_tolerance
    }

    pub fn is_le(&self, v: f64) -> bool {
        v <= self.observed + self.tie_tolerance
    }

    pub fn is_abs_ge(&self, v: f64) -> bool {
        (v - self.center).abs() >= (self.observed - self.center).abs() - self.tie_tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
    histogram: Histogram,
    reference: TailReference,
    ge_observed: u64,
    le_observed: u64,
    abs_ge_observed: u64,
    retention_cap: usize,
    retained: Option<Vec<f64>>,
}

impl DistributionSummary {
    pub fn new(reference: TailReference, histogram: Histogram, retention_cap: usize) -> Self {
        DistributionSummary {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            histogram,
            reference,
            ge_observed: 0,
            le_observed: 0,
            abs_ge_observed: 0,
            retention_cap,
            retained: Some(Vec::new()),
        }
    }

    /// An empty summary sharing this one's histogram range, reference and cap.
    pub fn empty_like(&self) -> Self {
        let h = &self.histogram;
        DistributionSummary::new(
            self.reference,
            Histogram {
                lo: h.lo,
                hi: h.hi,
                counts: vec![0; h.counts.len()],
            },
            self.retention_cap,
        )
    }

    pub fn accumulate(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
        self.min = self.min.min(value);
        self.max = self.max.max(value);
        self.histogram.add(value);
        let r = &self.reference;
        self.ge_observed += r.is_ge(value) as u64;
        self.le_observed += r.is_le(value) as u64;
        self.abs_ge_observed += r.is_abs_ge(value) as u64;
        if self.count as usize > self.retention_cap {
            self.retained = None;
        } else if let Some(values) = &mut self.retained {
            values.push(value);
        }
    }

    /// Folds `other` (the continuation of this stream) into `self`.
    ///
    /// Both sides must share histogram range and tail reference.
    pub fn merge(&mut self, other: &DistributionSummary) -> Result<()> {
        if self.histogram.lo != other.histogram.lo
            || self.histogram.hi != other.histogram.hi
            || self.histogram.counts.len() != other.histogram.counts.len()
            || self.reference != other.reference
        {
            return Err(Error::InvalidConfig(
                "cannot merge summaries with different histogram or reference".into(),
            ));
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            let cap = self.retention_cap.min(other.retention_cap);
            *self = other.clone();
            self.retention_cap = cap;
            if self.count as usize > cap {
                self.retained = None;
            }
            return Ok(());
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        self.mean += delta * (nb / n);
        self.m2 += other.m2 + delta * delta * (na * nb / n);
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        for (a, b) in self
            .histogram
            .counts
            .iter_mut()
            .zip(&other.histogram.counts)
        {
            *a += b;
        }
        self.ge_observed += other.ge_observed;
        self.le_observed += other.le_observed;
        self.abs_ge_observed += other.abs_ge_observed;
        self.retention_cap = self.retention_cap.min(other.retention_cap);
        self.retained = match (self.retained.take(), &other.retained) {
            (Some(mut a), Some(b)) if self.count as usize <= self.retention_cap => {
                a.extend_from_slice(b);
                Some(a)
            }
            _ => None,
        };
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Population variance (`1/count`).
    pub fn variance(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            (self.m2 / self.count as f64).max(0.0)
        }
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn histogram(&self) -> &Histogram {
        &self.histogram
    }

    pub fn reference(&self) -> &TailReference {
        &self.reference
    }

    pub fn ge_observed(&self) -> u64 {
        self.ge_observed
    }

    pub fn le_observed(&self) -> u64 {
        self.le_observed
    }

    pub fn abs_ge_observed(&self) -> u64 {
        self.abs_ge_observed
    }

    pub fn retention_cap(&self) -> usize {
        self.retention_cap
    }

    /// Every accumulated value in stream order, if the count never exceeded
    /// the retention cap.
    pub fn retained(&self) -> Option<&[f64]> {
        self.retained.as_deref()
    }

    /// Mid-rank percentile of `observed`:
    /// `100 · (#{v < observed} + ½ #{v = observed}) / count`.
    ///
    /// Uses the exact counters when `observed` is the tail reference,
    /// otherwise the retained values.
    pub fn percentile_of(&self, observed: f64) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptySummary);
        }
        let (below, ties) = if observed == self.reference.observed {
            // every value is >= or <= observed (or both, when tied)
            let below = self.count - self.ge_observed;
            let ties = self.ge_observed + self.le_observed - self.count;
            (below, ties)
        } else if let Some(values) = &self.retained {
            let r = TailReference {
                observed,
                ..self.reference
            };
            let below = values.iter().filter(|&&v| !r.is_ge(v)).count() as u64;
            let ties = values.iter().filter(|&&v| r.is_ge(v) && r.is_le(v)).count() as u64;
            (below, ties)
        } else {
            return Err(Error::ReferenceMismatch {
                observed,
                reference: self.reference.observed,
            });
        };
        Ok(100.0 * (below as f64 + 0.5 * ties as f64) / self.count as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(observed: f64) -> DistributionSummary {
        DistributionSummary::new(
            TailReference::new(observed, 0.0),
            Histogram::new(-2.0, 2.0, 4).unwrap(),
            100,
        )
    }

    #[test]
    fn single_value() {
        let mut s = summary(0.0);
        s.accumulate(1.0);
        assert_eq!(s.count(), 1);
        assert_eq!(s.mean(), 1.0);
        assert_eq!(s.variance(), 0.0);
        assert_eq!(s.retained(), Some(&[1.0][..]));
    }

    #[test]
    fn three_values() {
        let mut s = summary(2.0);
        for v in [1.0, 2.0, 3.0] {
            s.accumulate(v);
        }
        assert_eq!(s.mean(), 2.0);
        assert!((s.variance() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((s.ge_observed(), s.le_observed()), (2, 2));
        assert_eq!(s.abs_ge_observed(), 2);
        assert_eq!(s.histogram().counts, vec![0, 0, 0, 3]);
        assert_eq!(s.percentile_of(2.0).unwrap(), 50.0);
    }

    #[test]
    fn empty_summary() {
        let s = summary(0.0);
        assert!(s.mean().is_nan());
        assert_eq!(s.percentile_of(0.0), Err(Error::EmptySummary));
    }

    #[test]
    fn percentile_conventions() {
        let mut s = summary(1.0);
        s.accumulate(-0.5);
        s.accumulate(-0.5);
        assert_eq!(s.percentile_of(1.0).unwrap(), 100.0);
        assert_eq!(s.percentile_of(-1.0).unwrap(), 0.0);
        assert_eq!(s.percentile_of(-0.5).unwrap(), 50.0);
    }

    #[test]
    fn retention_cap_drops_values() {
        let mut s = DistributionSummary::new(
            TailReference::new(0.0, 0.0),
            Histogram::new(0.0, 1.0, 2).unwrap(),
            2,
        );
        s.accumulate(0.1);
        s.accumulate(0.2);
        assert!(s.retained().is_some());
        s.accumulate(0.3);
        assert!(s.retained().is_none());
        assert_eq!(
            s.percentile_of(0.25),
            Err(Error::ReferenceMismatch {
                observed: 0.25,
                reference: 0.0
            })
        );
    }

    #[test]
    fn merge_matches_single_pass() {
        let data: Vec<f64> = (0..57)
            .map(|i| ((i * 37) % 23) as f64 / 7.0 - 1.5)
            .collect();
        let mut whole = summary(0.3);
        data.iter().for_each(|&v| whole.accumulate(v));
        let mut left = summary(0.3);
        let mut right = summary(0.3);
        data[..20].iter().for_each(|&v| left.accumulate(v));
        data[20..].iter().for_each(|&v| right.accumulate(v));
        left.merge(&right).unwrap();
        assert_eq!(left.count(), whole.count());
        assert!((left.mean() - whole.mean()).abs() <= 1e-12 * whole.mean().abs());
        assert!((left.variance() - whole.variance()).abs() <= 1e-12 * whole.variance());
        assert_eq!(left.histogram(), whole.histogram());
        assert_eq!(left.retained(), whole.retained());
        assert_eq!(left.ge_observed(), whole.ge_observed());
        assert_eq!(left.abs_ge_observed(), whole.abs_ge_observed());
    }

    #[test]
    fn merge_rejects_mismatched_reference() {
        let mut a = summary(0.0);
        let b = summary(1.0);
        assert!(a.merge(&b).is_err());
    }

    #[test]
    fn degenerate_histogram_range() {
        let mut h = Histogram::new(3.0, 3.0, 5).unwrap();
        h.add(3.0);
        assert_eq!(h.counts[0], 1);
        assert!(Histogram::new(1.0, 0.0, 5).is_err());
        assert!(Histogram::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn tie_tolerance() {
        let r = TailReference::new(1.0, 0.0).with_tolerance(1e-9);
        assert!(r.is_ge(1.0 - 1e-12) && r.is_le(1.0 + 1e-12));
        assert!(!r.is_ge(0.99));
        assert!(r.is_abs_ge(-1.0 + 1e-12));
    }
}

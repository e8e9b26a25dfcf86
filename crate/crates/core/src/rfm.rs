//! The random family test: distribute a statistic over every derangement of
//! the explanatory column (or a uniform sample of them) and locate the
//! observed value in that distribution.
//!
//! The family is the set of pairings `(x_{σ(1)}, …, x_{σ(n)})` against the
//! unchanged `y`, for derangements `σ`. The identity pairing is not a member.
//!
//! Exact mode splits the family by `σ(1)` and Monte Carlo mode splits its
//! draws into fixed-size chunks with their own ChaCha streams. Partial
//! summaries are merged in partition order, so results are bit-identical for
//! any number of worker threads.

use std::ops::ControlFlow;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derangement::{
    count_derangements, shuffle_to_derangement, walk, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result, Variable};
use crate::stats::kernels::{
    centered, covariance, ols_slope, pearson_r, sum_of_squares, PairedSample,
};
use crate::stats::summary::{DistributionSummary, Histogram, TailReference};

/// Draws per Monte Carlo chunk; chunk `k` uses ChaCha stream `k`.
pub const MC_CHUNK: u64 = 4096;

/// Relative slack (against the largest attainable |statistic|) under which
/// a family value counts as tied with the observed one.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    OlsSlope,
    PearsonR,
    Covariance,
}

impl StatisticKind {
    pub fn evaluate(self, s: &PairedSample) -> Result<f64> {
        match self {
            StatisticKind::OlsSlope => ols_slope(s),
            StatisticKind::PearsonR => pearson_r(s),
            StatisticKind::Covariance => Ok(covariance(s)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::OlsSlope => "ols_slope",
            StatisticKind::PearsonR => "pearson_r",
            StatisticKind::Covariance => "covariance",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    MonteCarlo { samples: u64 },
}

/// Where the two-sided test measures distance from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Center {
    /// The mean of the statistic over all derangements, `-observed / (n - 1)`.
    FamilyMean,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfmConfig {
    pub statistic: StatisticKind,
    pub mode: Mode,
    pub seed: u64,
    pub retention_cap: usize,
    pub histogram_bins: usize,
    pub max_exact_n: usize,
    pub center: Center,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for RfmConfig {
    fn default() -> Self {
        RfmConfig {
            statistic: StatisticKind::OlsSlope,
            mode: Mode::Exact,
            seed: 0,
            retention_cap: 1 << 24,
            histogram_bins: 256,
            max_exact_n: DEFAULT_ENUMERATION_CAP,
            center: Center::FamilyMean,
            threads: None,
        }
    }
}

impl RfmConfig {
    fn validate(&self) -> Result<()> {
        if self.max_exact_n < 2 {
            return Err(Error::InvalidConfig(
                "max_exact_n must be at least 2".into(),
            ));
        }
        if self.histogram_bins == 0 {
            return Err(Error::InvalidConfig(
                "histogram_bins must be positive".into(),
            ));
        }
        if let Mode::MonteCarlo { samples: 0 } = self.mode {
            return Err(Error::InvalidConfig(
                "Monte Carlo mode needs at least one sample".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RfmResult {
    pub statistic: StatisticKind,
    pub mode: Mode,
    pub seed: u64,
    pub n: usize,
    pub observed: f64,
    /// Center used by the two-sided test.
    pub center: f64,
    pub family: DistributionSummary,
    /// `N(n)` in exact mode, the number of draws in Monte Carlo mode.
    pub family_size: u128,
    pub p_upper: f64,
    pub p_lower: f64,
    pub p_two_sided: f64,
    pub percentile_of_observed: f64,
}

/// Mean of `kind` over all derangement pairings of `s`.
///
/// Under a uniform derangement `P(σ(i) = j) = 1/(n-1)` for every `j ≠ i`, so
/// `E[x_{σ(i)}] = (n x̄ - x_i)/(n-1)`; each statistic is linear in the
/// permuted column, giving `-statistic(s)/(n-1)`.
pub fn expected_family_mean(s: &PairedSample, kind: StatisticKind) -> Result<f64> {
    Ok(-kind.evaluate(s)? / (s.len() - 1) as f64)
}

/// Mid-rank percentile of `observed` within `summary`.
pub fn percentile_of(summary: &DistributionSummary, observed: f64) -> Result<f64> {
    summary.percentile_of(observed)
}

/// The statistic as a function of the pairing only: `Σ w_i · cx_{σ(i)} / d`
/// with `cx` the centered explanatory column. Evaluating the identity
/// pairing reproduces the kernel functions bit for bit.
#[derive(Clone, Debug)]
pub(crate) struct PairingKernel {
    cx: Vec<f64>,
    weights: Vec<f64>,
    denom: f64,
    clamp_unit: bool,
}

impl PairingKernel {
    pub(crate) fn new(s: &PairedSample, kind: StatisticKind) -> Result<Self> {
        let cx = centered(s.x());
        let (weights, denom, clamp_unit) = match kind {
            StatisticKind::OlsSlope => {
                let sxx = sum_of_squares(&cx);
                if sxx <= 0.0 {
                    return Err(Error::ZeroVariance(Variable::X));
                }
                (s.y().to_vec(), sxx, false)
            }
            StatisticKind::PearsonR => {
                let cy = centered(s.y());
                let sxx = sum_of_squares(&cx);
                let syy = sum_of_squares(&cy);
                if sxx <= 0.0 {
                    return Err(Error::ZeroVariance(Variable::X));
                }
                if syy <= 0.0 {
                    return Err(Error::ZeroVariance(Variable::Y));
                }
                (cy, (sxx * syy).sqrt(), true)
            }
            StatisticKind::Covariance => (centered(s.y()), s.len() as f64, false),
        };
        Ok(PairingKernel {
            cx,
            weights,
            denom,
            clamp_unit,
        })
    }

    #[inline]
    pub(crate) fn step(&self, partial: f64, pos: usize, image: usize) -> f64 {
        partial + self.weights[pos] * self.cx[image - 1]
    }

    #[inline]
    pub(crate) fn finish(&self, partial: f64) -> f64 {
        let v = partial / self.denom;
        if self.clamp_unit {
            v.clamp(-1.0, 1.0)
        } else {
            v
        }
    }

    pub(crate) fn evaluate(&self, mapping: &[usize]) -> f64 {
        let partial = mapping
            .iter()
            .enumerate()
            .fold(0.0, |acc, (pos, &image)| self.step(acc, pos, image));
        self.finish(partial)
    }

    pub(crate) fn observed(&self) -> f64 {
        let identity: Vec<usize> = (1..=self.cx.len()).collect();
        self.evaluate(&identity)
    }

    /// Smallest and largest value over all pairings (rearrangement bound),
    /// a superset of the derangement family's range.
    pub(crate) fn attainable_range(&self) -> (f64, f64) {
        let mut w = self.weights.clone();
        let mut c = self.cx.clone();
        w.sort_by(f64::total_cmp);
        c.sort_by(f64::total_cmp);
        let hi: f64 = w.iter().zip(&c).map(|(a, b)| a * b).sum();
        let lo: f64 = w.iter().zip(c.iter().rev()).map(|(a, b)| a * b).sum();
        (self.finish(lo), self.finish(hi))
    }
}

fn run_in_pool<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn merge_in_order(
    template: &DistributionSummary,
    parts: Vec<Result<DistributionSummary>>,
) -> Result<DistributionSummary> {
    let mut total = template.empty_like();
    for part in parts {
        total.merge(&part?)?;
    }
    Ok(total)
}

pub fn rfm_test(s: &PairedSample, cfg: &RfmConfig) -> Result<RfmResult> {
    cfg.validate()?;
    let n = s.len();
    let kernel = PairingKernel::new(s, cfg.statistic)?;
    let observed = kernel.observed();
    let center = match cfg.center {
        Center::FamilyMean => -observed / (n - 1) as f64,
        Center::Zero => 0.0,
    };
    let (lo, hi) = kernel.attainable_range();
    let tol = TIE_RELATIVE_TOLERANCE * lo.abs().max(hi.abs());
    let reference = TailReference::new(observed, center).with_tolerance(tol);
    let template = DistributionSummary::new(
        reference,
        Histogram::new(lo, hi, cfg.histogram_bins)?,
        cfg.retention_cap,
    );

    let (family, family_size) = match cfg.mode {
        Mode::Exact => {
            let count = count_derangements(n)?.get();
            if n > cfg.max_exact_n {
                return Err(Error::EnumerationTooLarge {
                    n,
                    cap: cfg.max_exact_n,
                    count,
                });
            }
            let parts = run_in_pool(cfg.threads, || {
                (2..=n)
                    .into_par_iter()
                    .map(|first| exact_partition(&kernel, &template, n, first))
                    .collect::<Vec<_>>()
            })?;
            let family = merge_in_order(&template, parts)?;
            debug_assert_eq!(family.count() as u128, count);
            (family, count)
        }
        Mode::MonteCarlo { samples } => {
            let chunks = samples.div_ceil(MC_CHUNK);
            let parts = run_in_pool(cfg.threads, || {
                (0..chunks)
                    .into_par_iter()
                    .map(|k| {
                        let len = MC_CHUNK.min(samples - k * MC_CHUNK);
                        mc_chunk(&kernel, &template, n, cfg.seed, k, len)
                    })
                    .collect::<Vec<_>>()
            })?;
            (merge_in_order(&template, parts)?, samples as u128)
        }
    };

    let size = family.count() as f64;
    let (p_upper, p_lower, p_two_sided) = match cfg.mode {
        Mode::Exact => (
            family.ge_observed() as f64 / size,
            family.le_observed() as f64 / size,
            family.abs_ge_observed() as f64 / size,
        ),
        Mode::MonteCarlo { .. } => {
            let corrected = |b: u64| (b as f64 + 1.0) / (size + 1.0);
            (
                corrected(family.ge_observed()),
                corrected(family.le_observed()),
                corrected(family.abs_ge_observed()),
            )
        }
    };
    let percentile_of_observed = family.percentile_of(observed)?;

    Ok(RfmResult {
        statistic: cfg.statistic,
        mode: cfg.mode,
        seed: cfg.seed,
        n,
        observed,
        center,
        family,
        family_size,
        p_upper,
        p_lower,
        p_two_sided,
        percentile_of_observed,
    })
}

fn exact_partition(
    kernel: &PairingKernel,
    template: &DistributionSummary,
    n: usize,
    first: usize,
) -> Result<DistributionSummary> {
    let mut summary = template.empty_like();
    let mut degenerate = None;
    let _ = walk(
        n,
        first,
        0.0,
        |partial, pos, image| kernel.step(partial, pos, image),
        |d, partial| {
            let v = kernel.finish(partial);
            if !v.is_finite() {
                degenerate = Some(d.mapping().to_vec());
                return ControlFlow::Break(());
            }
            summary.accumulate(v);
            ControlFlow::Continue(())
        },
    );
    match degenerate {
        Some(mapping) => Err(Error::DegenerateMember { mapping }),
        None => Ok(summary),
    }
}

fn mc_chunk(
    kernel: &PairingKernel,
    template: &DistributionSummary,
    n: usize,
    seed: u64,
    chunk: u64,
    len: u64,
) -> Result<DistributionSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut summary = template.empty_like();
    let mut buf: Vec<usize> = (1..=n).collect();
    for _ in 0..len {
        shuffle_to_derangement(&mut buf, &mut rng);
        let v = kernel.evaluate(&buf);
        if !v.is_finite() {
            return Err(Error::DegenerateMember { mapping: buf });
        }
        summary.accumulate(v);
    }
    Ok(summary)
}

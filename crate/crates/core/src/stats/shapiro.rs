//! Shapiro–Wilk normality test using Royston's approximation (AS R94),
//! valid for `3 <= n <= 5000`.
//!
//! Larger inputs are reduced to a seeded random subsample of 5000 values and
//! the result is flagged as subsampled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_N: usize = 3;
pub const MAX_N: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwResult {
    pub w: f64,
    pub p_value: f64,
    pub n_used: usize,
    pub subsampled: bool,
}

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

pub fn shapiro_wilk(values: &[f64], seed: u64) -> Result<SwResult> {
    if values.len() < MIN_N {
        return Err(Error::InsufficientData {
            required: MIN_N,
            available: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at index {index}")));
    }
    let subsampled = values.len() > MAX_N;
    let mut x: Vec<f64> = if subsampled {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, values.len(), MAX_N).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| values[i]).collect()
    } else {
        values.to_vec()
    };
    x.sort_by(f64::total_cmp);

    let n = x.len();
    let range = x[n - 1] - x[0];
    if range <= 0.0 {
        return Err(Error::ZeroSpread);
    }
    let lo = x[0];
    for v in &mut x {
        *v = (*v - lo) / range;
    }

    let (w, p_value) = swilk(&x);
    Ok(SwResult {
        w,
        p_value,
        n_used: n,
        subsampled,
    })
}

/// Polynomial `c[0] + c[1] x + …`.
fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Half of the antisymmetric weight vector, `a[0]` is the weight of the
/// largest order statistic.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let std_normal = Normal::standard();
    let an = n as f64;
    let an25 = an + 0.25;
    let mut m: Vec<f64> = (1..=half)
        .map(|i| std_normal.inverse_cdf((i as f64 - 0.375) / an25))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / an.sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
            / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
            .sqrt();
        m[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    m[0] = a1;
    for v in &mut m[first_scaled..] {
        *v /= -fac;
    }
    m
}

/// `x` sorted ascending and scaled to unit range.
fn swilk(x: &[f64]) -> (f64, f64) {
    let n = x.len();
    let a = coefficients(n);
    // signed weight of the i-th order statistic (0-based)
    let weight = |i: usize| -> f64 {
        let j = n - 1 - i;
        match i.cmp(&j) {
            std::cmp::Ordering::Less => -a[i],
            std::cmp::Ordering::Greater => a[j],
            std::cmp::Ordering::Equal => 0.0,
        }
    };

    let an = n as f64;
    let sa = (0..n).map(weight).sum::<f64>() / an;
    let sx = x.iter().sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, &xi) in x.iter().enumerate() {
        let asa = weight(i) - sa;
        let xsx = xi - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    // 1 - W, formed directly to keep precision when W is close to 1
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = (1.0 - w1).clamp(f64::MIN_POSITIVE, 1.0);

    if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        let stqr = std::f64::consts::FRAC_PI_3;
        let p = (pi6 * (w.sqrt().asin() - stqr)).clamp(0.0, 1.0);
        return (w, p);
    }
    if w1 <= 0.0 {
        return (w, 1.0);
    }

    let mut y = w1.ln();
    let (m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if y >= gamma {
            return (w, 1e-99);
        }
        y = -(gamma - y).ln();
        (poly(&C3, an), poly(&C4, an).exp())
    } else {
        let lnn = an.ln();
        (poly(&C5, lnn), poly(&C6, lnn).exp())
    };
    let p = Normal::new(m, s).map(|d| d.sf(y)).unwrap_or(f64::NAN);
    (w, p.clamp(0.0, 1.0))
}

//! Derangements of `{1..n}`: exact counting, lexicographic enumeration and
//! uniform sampling.
//!
//! Mappings are stored 1-based, so `mapping[j - 1]` is the image of `j`.

use std::fmt;
use std::ops::ControlFlow;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest `n` whose derangement count fits in a `u128`.
pub const MAX_COUNTABLE_N: usize = 34;

/// Default upper bound on `n` for exhaustive enumeration (N(12) = 176,214,841).
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// A fixed-point-free permutation of `{1..n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Derangement {
    mapping: Vec<usize>,
}

impl Derangement {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        if is_derangement(&mapping) {
            Ok(Derangement { mapping })
        } else {
            Err(Error::NotADerangement(mapping))
        }
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    /// Always false: the smallest derangement has two elements.
    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// The 1-based images `(σ(1), …, σ(n))`.
    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    /// Image of the 1-based position `j`.
    pub fn image(&self, j: usize) -> usize {
        self.mapping[j - 1]
    }

    /// Reorders `values` as `(v[σ(1)], …, v[σ(n)])`.
    ///
    /// Panics if `values.len() != self.len()`.
    pub fn apply<T: Clone>(&self, values: &[T]) -> Vec<T> {
        assert_eq!(values.len(), self.mapping.len(), "length mismatch");
        self.mapping
            .iter()
            .map(|&m| values[m - 1].clone())
            .collect()
    }

    pub fn into_mapping(self) -> Vec<usize> {
        self.mapping
    }
}

impl fmt::Display for Derangement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.mapping.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

/// Exact number of derangements `N(n)`, with `N(1) = 0`, `N(2) = 1` and
/// `N(n) = (n - 1)(N(n - 1) + N(n - 2))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DerangementCount {
    n: usize,
    value: u128,
}

impl DerangementCount {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self) -> u128 {
        self.value
    }
}

impl fmt::Display for DerangementCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub fn count_derangements(n: usize) -> Result<DerangementCount> {
    if n == 0 {
        return Err(Error::Domain("derangements are defined for n >= 1".into()));
    }
    let overflow = || Error::CountOverflow {
        n,
        max: MAX_COUNTABLE_N,
    };
    // (N(k - 2), N(k - 1)) starting at k = 3
    let (mut prev2, mut prev1): (u128, u128) = (0, 1);
    let value = match n {
        1 => 0,
        2 => 1,
        _ => {
            for k in 3..=n {
                let next = (prev1.checked_add(prev2).ok_or_else(overflow)?)
                    .checked_mul((k - 1) as u128)
                    .ok_or_else(overflow)?;
                prev2 = prev1;
                prev1 = next;
            }
            prev1
        }
    };
    Ok(DerangementCount { n, value })
}

/// True iff `mapping` is a permutation of `{1..n}` with no fixed point.
pub fn is_derangement(mapping: &[usize]) -> bool {
    let n = mapping.len();
    if n < 2 {
        return false;
    }
    let mut seen = vec![false; n];
    for (j, &m) in mapping.iter().enumerate() {
        if m == 0 || m > n || m == j + 1 || seen[m - 1] {
            return false;
        }
        seen[m - 1] = true;
    }
    true
}

fn check_enumerable(n: usize, cap: usize) -> Result<()> {
    let count = count_derangements(n)?;
    if n > cap {
        return Err(Error::EnumerationTooLarge {
            n,
            cap,
            count: count.get(),
        });
    }
    Ok(())
}

/// Visits every derangement of `{1..n}` in lexicographic order and returns
/// the number visited. `n = 1` visits nothing.
pub fn enumerate_derangements<F>(n: usize, cap: usize, mut visitor: F) -> Result<u64>
where
    F: FnMut(&Derangement),
{
    enumerate_derangements_until(n, cap, |d| {
        visitor(d);
        ControlFlow::Continue(())
    })
}

/// Like [`enumerate_derangements`], but stops as soon as the visitor breaks.
pub fn enumerate_derangements_until<F>(n: usize, cap: usize, mut visitor: F) -> Result<u64>
where
    F: FnMut(&Derangement) -> ControlFlow<()>,
{
    check_enumerable(n, cap)?;
    let mut visited = 0u64;
    for first in 2..=n {
        let flow = walk(
            n,
            first,
            (),
            |_, _, _| (),
            |d, _| {
                visited += 1;
                visitor(d)
            },
        );
        if flow.is_break() {
            break;
        }
    }
    Ok(visited)
}

/// Visits the derangements with `σ(1) = first` in lexicographic order.
///
/// The sub-families for `first` in `2..=n` partition the full family, which
/// is what parallel drivers split on.
pub fn enumerate_partition<F>(n: usize, first: usize, cap: usize, mut visitor: F) -> Result<u64>
where
    F: FnMut(&Derangement),
{
    check_enumerable(n, cap)?;
    if n >= 2 && !(2..=n).contains(&first) {
        return Err(Error::Domain(format!(
            "first image must lie in 2..={n}, got {first}"
        )));
    }
    let mut visited = 0u64;
    let _ = walk(
        n,
        first,
        (),
        |_, _, _| (),
        |d, _| {
            visited += 1;
            visitor(d);
            ControlFlow::Continue(())
        },
    );
    Ok(visited)
}

/// Depth-first lexicographic walk over derangements with `σ(1) = first`,
/// threading a prefix state through `step(state, position, image)`
/// (position 0-based, image 1-based). `leaf` sees the completed mapping and
/// the final state.
///
/// Callers must have validated `n <= MAX_COUNTABLE_N`.
pub(crate) fn walk<S, St, Lf>(
    n: usize,
    first: usize,
    init: S,
    step: St,
    mut leaf: Lf,
) -> ControlFlow<()>
where
    S: Copy,
    St: Fn(S, usize, usize) -> S,
    Lf: FnMut(&Derangement, S) -> ControlFlow<()>,
{
    if n < 2 || first < 2 || first > n {
        return ControlFlow::Continue(());
    }
    let mut current = Derangement {
        mapping: vec![0; n],
    };
    current.mapping[0] = first;
    let used = 1u64 << (first - 1);
    let state = step(init, 0, first);
    descend(&mut current, 1, used, state, &step, &mut leaf)
}

fn descend<S, St, Lf>(
    current: &mut Derangement,
    pos: usize,
    used: u64,
    state: S,
    step: &St,
    leaf: &mut Lf,
) -> ControlFlow<()>
where
    S: Copy,
    St: Fn(S, usize, usize) -> S,
    Lf: FnMut(&Derangement, S) -> ControlFlow<()>,
{
    let n = current.mapping.len();
    if pos == n {
        return leaf(current, state);
    }
    for value in 1..=n {
        let bit = 1u64 << (value - 1);
        if value == pos + 1 || used & bit != 0 {
            continue;
        }
        current.mapping[pos] = value;
        descend(
            current,
            pos + 1,
            used | bit,
            step(state, pos, value),
            step,
            leaf,
        )?;
    }
    ControlFlow::Continue(())
}

/// Draws a derangement uniformly from all `N(n)` of them.
///
/// Shuffles uniformly and rejects any permutation with a fixed point; the
/// acceptance rate tends to `1/e`.
pub fn sample_derangement<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Derangement> {
    if n < 2 {
        return Err(Error::EmptyFamily { n });
    }
    let mut mapping: Vec<usize> = (1..=n).collect();
    shuffle_to_derangement(&mut mapping, rng);
    Ok(Derangement { mapping })
}

/// In-place rejection sampler over a reusable buffer of length `n >= 2`.
/// The buffer contents on entry must be a permutation of `{1..n}`.
pub(crate) fn shuffle_to_derangement<R: Rng + ?Sized>(buf: &mut [usize], rng: &mut R) {
    debug_assert!(buf.len() >= 2);
    loop {
        buf.shuffle(rng);
        if buf.iter().enumerate().all(|(j, &m)| m != j + 1) {
            return;
        }
    }
}

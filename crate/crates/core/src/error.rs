use std::fmt;

use thiserror::Error;

/// Which column of a paired sample an error refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variable {
    X,
    Y,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::X => f.write_str("x"),
            Variable::Y => f.write_str("y"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("derangement count N({n}) exceeds the 128-bit range (n must be <= {max})")]
    CountOverflow { n: usize, max: usize },

    #[error("no derangement exists for n = {n}")]
    EmptyFamily { n: usize },

    #[error(
        "exact enumeration of n = {n} visits N({n}) = {count} derangements, above the cap n <= {cap}; \
         raise the cap explicitly or use Monte Carlo mode"
    )]
    EnumerationTooLarge { n: usize, cap: usize, count: u128 },

    #[error("not a derangement: {0:?}")]
    NotADerangement(Vec<usize>),

    #[error("need at least {required} values, got {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("x has {x} values but y has {y}")]
    LengthMismatch { x: usize, y: usize },

    #[error("non-finite {variable} value at index {index}")]
    NonFinite { variable: Variable, index: usize },

    #[error("{0} has zero variance")]
    ZeroVariance(Variable),

    #[error("values have zero spread")]
    ZeroSpread,

    #[error(
        "bandwidth rule gave zero bandwidth (all values identical); pass an explicit bandwidth"
    )]
    ZeroBandwidth,

    #[error("statistic is undefined for family member {mapping:?}")]
    DegenerateMember { mapping: Vec<usize> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("summary is empty")]
    EmptySummary,

    #[error("observed value {observed} differs from the summary reference {reference} and no values are retained")]
    ReferenceMismatch { observed: f64, reference: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

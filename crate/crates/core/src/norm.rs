//! Exponents, ground distances and cascaded `(p,q)` norms.
//!
//! Aggregation over rows works on *powered* distances: `d^p` for finite `p`
//! (summed, rooted once at the end) and the raw distance for `p = ∞`
//! (combined with `max`, no root).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{FairError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1);
    pub const TWO: Exponent = Exponent::Finite(2);

    pub fn finite(p: u32) -> Result<Self> {
        if p == 0 {
            return Err(FairError::InvalidExponent(p.to_string()));
        }
        Ok(Exponent::Finite(p))
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `d^p`, or `d` itself when infinite.
    #[inline]
    pub fn power(self, d: f64) -> f64 {
        match self {
            Exponent::Finite(1) | Exponent::Infinite => d,
            Exponent::Finite(2) => d * d,
            Exponent::Finite(p) => d.powi(p as i32),
        }
    }

    /// Combine two powered terms: sum for finite, max for infinite.
    #[inline]
    pub fn combine(self, acc: f64, term: f64) -> f64 {
        match self {
            Exponent::Finite(_) => acc + term,
            Exponent::Infinite => acc.max(term),
        }
    }

    /// Inverse of [`Exponent::power`] applied to an aggregate.
    #[inline]
    pub fn root(self, acc: f64) -> f64 {
        match self {
            Exponent::Finite(1) | Exponent::Infinite => acc,
            Exponent::Finite(2) => acc.sqrt(),
            Exponent::Finite(p) => acc.powf(1.0 / p as f64),
        }
    }

    pub fn aggregate<I: IntoIterator<Item = f64>>(self, distances: I) -> f64 {
        let acc = distances
            .into_iter()
            .fold(0.0, |acc, d| self.combine(acc, self.power(d)));
        self.root(acc)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = FairError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => other
                .parse::<u32>()
                .map_err(|_| FairError::InvalidExponent(s.to_string()))
                .and_then(Exponent::finite),
        }
    }
}

impl TryFrom<String> for Exponent {
    type Error = FairError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Exponent> for String {
    fn from(e: Exponent) -> String {
        e.to_string()
    }
}

/// Outer (aggregation) exponent `p` and inner (ground) exponent `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: Exponent,
    pub q: Exponent,
}

impl NormSpec {
    pub fn new(p: Exponent, q: Exponent) -> Self {
        NormSpec { p, q }
    }

    /// Euclidean k-median, `(1,2)`.
    pub fn k_median() -> Self {
        NormSpec::new(Exponent::ONE, Exponent::TWO)
    }

    /// Euclidean k-center, `(∞,2)`.
    pub fn k_center() -> Self {
        NormSpec::new(Exponent::Infinite, Exponent::TWO)
    }

    /// Frobenius `(2,2)`; squaring the cost gives the k-means objective.
    pub fn k_means() -> Self {
        NormSpec::new(Exponent::TWO, Exponent::TWO)
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// `ℓq` distance between two coordinate slices of equal length.
#[inline]
pub fn lq_distance(a: &[f64], b: &[f64], q: Exponent) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match q {
        Exponent::Finite(1) => diffs.sum(),
        Exponent::Finite(2) => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        Exponent::Infinite => diffs.fold(0.0, f64::max),
        Exponent::Finite(p) => diffs.map(|d| d.powi(p as i32)).sum::<f64>().powf(1.0 / p as f64),
    }
}

/// Cascaded norm of a row-major matrix: `q`-norm of each row, then the
/// `p`-norm of the vector of row norms.
pub fn cascaded_norm(rows: &[Vec<f64>], p: Exponent, q: Exponent) -> f64 {
    p.aggregate(rows.iter().map(|row| {
        let zeros = vec![0.0; row.len()];
        lq_distance(row, &zeros, q)
    }))
}

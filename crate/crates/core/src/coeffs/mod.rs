//! Triangular coefficient matrices and the deterministic quantities built on
//! them: diagonals, convergence criteria, maximal-inequality bounds and tails.

mod criteria;
mod matrix;
mod weights;

use std::fmt;
use std::str::FromStr;

pub use criteria::{
    absolute_sum, column_sums, criterion_sum, diagonal, levy_bound, tail_a, tail_b, tail_report,
    weighted_criterion_sum, weighted_levy_bound, AbsoluteSum, ConvergenceFlag, DiagonalProfile,
    TailPolicy, TailReport, STAGNATION_RTOL,
};
pub(crate) use criteria::diagonal_square_sum;
pub use matrix::{CoefficientMatrix, Support};
pub use weights::VectorWeights;

use crate::error::{invalid, Error, Result};

/// Catalog of closed-form entry laws `n -> f(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryLaw {
    /// `2^-n`
    Geometric,
    /// `1/n`
    Harmonic,
    /// `1/n^2`
    InverseSquare,
    /// `1`
    Ones,
}

impl EntryLaw {
    pub fn value(&self, n: usize) -> f64 {
        let x = n as f64;
        match self {
            EntryLaw::Geometric => 0.5f64.powi(n as i32),
            EntryLaw::Harmonic => 1.0 / x,
            EntryLaw::InverseSquare => 1.0 / (x * x),
            EntryLaw::Ones => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EntryLaw::Geometric => "geometric",
            EntryLaw::Harmonic => "harmonic",
            EntryLaw::InverseSquare => "inverse-square",
            EntryLaw::Ones => "ones",
        }
    }

    /// Upper bound on `sum_{k > K} f(k)^2`.
    pub fn square_tail(&self, k: usize) -> f64 {
        let x = k.max(1) as f64;
        match self {
            EntryLaw::Geometric => 0.25f64.powi(k as i32) / 3.0,
            EntryLaw::Harmonic => 1.0 / x,
            EntryLaw::InverseSquare => 1.0 / (3.0 * x * x * x),
            EntryLaw::Ones => f64::INFINITY,
        }
    }

    /// Upper bound on `sum_{n > N} |f(n)|`.
    pub fn abs_tail(&self, n: usize) -> f64 {
        match self {
            EntryLaw::Geometric => 0.5f64.powi(n as i32),
            EntryLaw::InverseSquare => 1.0 / n.max(1) as f64,
            EntryLaw::Harmonic | EntryLaw::Ones => f64::INFINITY,
        }
    }
}

impl FromStr for EntryLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" | "2^-n" => Ok(EntryLaw::Geometric),
            "harmonic" | "1/n" => Ok(EntryLaw::Harmonic),
            "inverse-square" | "1/n2" | "1/n^2" => Ok(EntryLaw::InverseSquare),
            "ones" | "1" => Ok(EntryLaw::Ones),
            other => Err(invalid(format!(
                "unknown entry law '{other}' (expected geometric, harmonic, inverse-square or ones)"
            ))),
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

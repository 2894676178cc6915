//! Estimators, verdicts and the deterministic replica reduction.
//!
//! Replicas (Monte Carlo) and outcomes (exhaustive enumeration) are both
//! addressed by a `u64` index. Work is split into fixed-size chunks that are
//! evaluated in parallel and merged in chunk order, so every result is
//! independent of the number of worker threads.

use rayon::prelude::*;

use crate::innovations::EnumCap;
use crate::sum::CompensatedSum;

/// Number of indices folded sequentially inside one parallel work item.
pub(crate) const CHUNK: u64 = 1024;

/// Number of standard errors separating a statistical pass from a failure.
pub const SE_MARGIN: f64 = 3.0;

/// Relative roundoff slack granted to exact (enumerated) comparisons.
pub const EXACT_SLACK: f64 = 1e-12;

/// Running mean and centred second moment (Welford, merged with Chan's rule).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * (other.count as f64 / n as f64);
        self.m2 += other.m2
            + delta * delta * (self.count as f64 * other.count as f64 / n as f64);
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Anything that can absorb a chunk result produced later in index order.
pub(crate) trait Accumulator: Send {
    fn absorb(&mut self, later: Self);
}

impl Accumulator for Vec<Moments> {
    fn absorb(&mut self, later: Self) {
        for (a, b) in self.iter_mut().zip(later.iter()) {
            a.merge(b);
        }
    }
}

impl Accumulator for Vec<u64> {
    fn absorb(&mut self, later: Self) {
        for (a, b) in self.iter_mut().zip(later) {
            *a += b;
        }
    }
}

/// Folds `f` over `0..count` in fixed chunks and merges chunk results in order.
pub(crate) fn reduce_indexed<A, I, F>(count: u64, init: I, f: F) -> A
where
    A: Accumulator,
    I: Fn() -> A + Sync,
    F: Fn(u64, &mut A) + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let partials: Vec<A> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(count);
            for idx in c * CHUNK..end {
                f(idx, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in partials {
        total.absorb(p);
    }
    total
}

impl Accumulator for Vec<CompensatedSum> {
    fn absorb(&mut self, later: Self) {
        for (a, b) in self.iter_mut().zip(later) {
            a.add(b.value());
        }
    }
}

/// Exact-mode means of `width` quantities over `0..count` using compensated
/// sums, so that dyadic values average without rounding.
pub(crate) fn means_indexed<F>(count: u64, width: usize, f: F) -> Vec<f64>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    let sums = reduce_indexed(
        count,
        || vec![CompensatedSum::new(); width],
        |idx, acc: &mut Vec<CompensatedSum>| {
            let mut values = vec![0.0; width];
            f(idx, &mut values);
            for (s, v) in acc.iter_mut().zip(values) {
                s.add(v);
            }
        },
    );
    sums.iter().map(|s| s.value() / count as f64).collect()
}

/// Per-index statistics of `width` quantities, reduced deterministically.
pub(crate) fn moments_indexed<F>(count: u64, width: usize, f: F) -> Vec<Moments>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    reduce_indexed(
        count,
        || vec![Moments::default(); width],
        |idx, acc: &mut Vec<Moments>| {
            let mut values = vec![0.0; width];
            f(idx, &mut values);
            for (m, v) in acc.iter_mut().zip(values) {
                m.push(v);
            }
        },
    )
}

/// Monte Carlo estimate of an expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
    /// Half-open range of stream ids consumed.
    pub streams: (u64, u64),
}

impl McEstimate {
    pub(crate) fn from_moments(m: &Moments, seed: u64, first_stream: u64) -> Self {
        Self {
            mean: m.mean(),
            std_error: m.std_error(),
            replicas: m.count(),
            seed,
            streams: (first_stream, first_stream + m.count()),
        }
    }
}

/// How an expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exhaustive enumeration of all Rademacher sign outcomes.
    Exact(EnumCap),
    /// Seeded Monte Carlo over replicas `0..replicas` (one stream each).
    MonteCarlo { replicas: u64, seed: u64 },
}

impl Method {
    pub fn monte_carlo(replicas: u64, seed: u64) -> Self {
        Method::MonteCarlo { replicas, seed }
    }

    pub fn exact() -> Self {
        Method::Exact(EnumCap::default())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Method::Exact(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Method::Exact(_) => "exact",
            Method::MonteCarlo { .. } => "monte-carlo",
        }
    }

    pub(crate) fn check_replicas(&self) -> crate::Result<()> {
        match self {
            Method::MonteCarlo { replicas, .. } if *replicas < 2 => Err(crate::error::invalid(
                format!("at least 2 replicas are required, got {replicas}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Outcome of an inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    /// Statistical noise prevents a decision either way.
    Inconclusive,
    Fail,
}

impl Verdict {
    /// Exact comparison `lhs <= rhs` up to roundoff.
    pub fn exact(lhs: f64, rhs: f64) -> Self {
        if lhs <= rhs + EXACT_SLACK * rhs.abs().max(1.0) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Statistical comparison of `lhs <= rhs` given the standard error of
    /// `lhs - rhs`.
    pub fn statistical(lhs: f64, rhs: f64, diff_se: f64) -> Self {
        let diff = lhs - rhs;
        if diff + SE_MARGIN * diff_se <= 0.0 {
            Verdict::Pass
        } else if diff - SE_MARGIN * diff_se > 0.0 {
            Verdict::Fail
        } else {
            Verdict::Inconclusive
        }
    }

    /// Worst of a collection; `Pass` when empty.
    pub fn worst<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        it.into_iter().max().unwrap_or(Verdict::Pass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Fail => "fail",
        }
    }
}

/// Result of checking `E[lhs] <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub lhs: f64,
    pub lhs_se: Option<f64>,
    pub rhs: f64,
    pub rhs_se: Option<f64>,
    /// `rhs - lhs`.
    pub margin: f64,
    pub method: &'static str,
    pub verdict: Verdict,
}

impl BoundReport {
    pub(crate) fn exact(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            lhs_se: None,
            rhs,
            rhs_se: None,
            margin: rhs - lhs,
            method: "exact",
            verdict: Verdict::exact(lhs, rhs),
        }
    }

    pub(crate) fn statistical(lhs: f64, lhs_se: f64, rhs: f64, rhs_se: Option<f64>) -> Self {
        let diff_se = (lhs_se * lhs_se + rhs_se.unwrap_or(0.0).powi(2)).sqrt();
        Self {
            lhs,
            lhs_se: Some(lhs_se),
            rhs,
            rhs_se,
            margin: rhs - lhs,
            method: "monte-carlo",
            verdict: Verdict::statistical(lhs, rhs, diff_se),
        }
    }
}

impl BoundReport {
    /// Statistical check where `lhs` and `rhs` come from the same replicas and
    /// `diff_se` is the standard error of their paired difference.
    pub(crate) fn paired(lhs: f64, lhs_se: f64, rhs: f64, rhs_se: f64, diff_se: f64) -> Self {
        Self {
            lhs,
            lhs_se: Some(lhs_se),
            rhs,
            rhs_se: Some(rhs_se),
            margin: rhs - lhs,
            method: "monte-carlo",
            verdict: Verdict::statistical(lhs, rhs, diff_se),
        }
    }
}

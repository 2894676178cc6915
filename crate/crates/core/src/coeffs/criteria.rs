use num_complex::Complex64;

use super::{CoefficientMatrix, VectorWeights};
use crate::error::{invalid, Result};
use crate::sum::CompensatedSum;

/// Relative movement over the last decade below which a partial sum is
/// considered stagnant.
pub const STAGNATION_RTOL: f64 = 1e-8;

/// How a truncated criterion is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TailPolicy {
    /// Report the partial value only.
    None,
    /// Declare convergence when partial sums moved less than
    /// [`STAGNATION_RTOL`] (relative) between index `N/10` and `N`, for the
    /// outer sum and every inner diagonal sum.
    #[default]
    Stagnation,
    /// Use the matrix's closed-form tail bound when it has one; otherwise
    /// fall back to stagnation.
    Analytic,
}

impl TailPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            TailPolicy::None => "none",
            TailPolicy::Stagnation => "stagnation",
            TailPolicy::Analytic => "analytic",
        }
    }
}

impl std::str::FromStr for TailPolicy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(TailPolicy::None),
            "stagnation" | "geometric-extrapolation" => Ok(TailPolicy::Stagnation),
            "analytic" => Ok(TailPolicy::Analytic),
            other => Err(invalid(format!("unknown tail policy '{other}'"))),
        }
    }
}

/// Advisory convergence judgement. `Converged` only means the criterion was
/// not falsified at this truncation; it is never a proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConvergenceFlag {
    Unassessed,
    Converged,
    NotConverged,
    /// The inner l2 sum of this diagonal has not stagnated.
    InnerDivergent { diagonal: usize },
}

impl ConvergenceFlag {
    pub fn is_converged(&self) -> bool {
        matches!(self, ConvergenceFlag::Converged)
    }

    pub fn describe(&self) -> String {
        match self {
            ConvergenceFlag::Unassessed => "unassessed".into(),
            ConvergenceFlag::Converged => "converged (criterion not falsified at this truncation)".into(),
            ConvergenceFlag::NotConverged => "not converged (partial criterion still growing)".into(),
            ConvergenceFlag::InnerDivergent { diagonal } => {
                format!("inner sum diverges at diagonal {diagonal}")
            }
        }
    }
}

/// Truncated diagonal norms `|d_n|` and the running criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalProfile {
    /// `|d_n^(K)|` for `n = 1..=N`.
    pub norms: Vec<f64>,
    /// `sum_{m <= n} |d_m^(K)|`, nondecreasing.
    pub partial_criterion: Vec<f64>,
    pub inner_cutoff: usize,
    pub policy: TailPolicy,
    /// Policy actually applied (analytic falls back to stagnation).
    pub applied_policy: TailPolicy,
    pub flag: ConvergenceFlag,
    /// Closed-form bound on the neglected remainder, when one was used.
    pub tail_bound: Option<f64>,
}

impl DiagonalProfile {
    /// Truncated criterion: a lower bound on the infinite one.
    pub fn value(&self) -> f64 {
        self.partial_criterion.last().copied().unwrap_or(0.0)
    }

    pub fn converged(&self) -> bool {
        self.flag.is_converged()
    }
}

fn stagnant(early: f64, late: f64) -> bool {
    (late - early).abs() <= STAGNATION_RTOL * late.abs()
}

/// `sum_{k=lo..=hi} |a(d+k-1,k)|^2 |u_{d+k-1}|^2`, plus the partial value
/// after the first tenth of the range.
pub(crate) fn diagonal_square_sum(
    m: &CoefficientMatrix,
    w: Option<&VectorWeights>,
    d: usize,
    lo: usize,
    hi: usize,
) -> (f64, f64) {
    let mut acc = CompensatedSum::new();
    let len = (hi + 1).saturating_sub(lo);
    let checkpoint = lo + len / 10;
    let mut early = None;
    for k in m.support().diagonal_positions(d, lo, hi) {
        if early.is_none() && k >= checkpoint {
            early = Some(acc.value());
        }
        let row = d + k - 1;
        let mut v = m.abs_sq(row, k);
        if let Some(w) = w {
            v *= w.norm_sq_unchecked(row);
        }
        acc.add(v);
    }
    let total = acc.value();
    (total, early.unwrap_or(total))
}

/// Diagonal `d_n` truncated to `K` entries: `(a(n,1), a(n+1,2), ..., a(n+K-1,K))`.
pub fn diagonal(m: &CoefficientMatrix, n: usize, k: usize) -> Result<Vec<Complex64>> {
    if n == 0 || k == 0 {
        return Err(invalid("diagonal index and cutoff must be positive"));
    }
    m.require_order(n + k - 1, k)?;
    Ok((1..=k).map(|j| m.entry(n + j - 1, j)).collect())
}

fn profile(
    m: &CoefficientMatrix,
    w: Option<&VectorWeights>,
    outer: usize,
    inner: usize,
    policy: TailPolicy,
) -> Result<DiagonalProfile> {
    if outer == 0 || inner == 0 {
        return Err(invalid("criterion cutoffs N and K must be positive"));
    }
    m.require_order(outer + inner - 1, inner)?;
    if let Some(w) = w {
        w.require(outer + inner - 1)?;
    }
    let mut norms = Vec::with_capacity(outer);
    let mut partial = Vec::with_capacity(outer);
    let mut running = CompensatedSum::new();
    let mut first_moving_inner = None;
    for d in 1..=outer {
        let (total, early) = diagonal_square_sum(m, w, d, 1, inner);
        if first_moving_inner.is_none() && !stagnant(early, total) {
            first_moving_inner = Some(d);
        }
        let norm = total.sqrt();
        running.add(norm);
        norms.push(norm);
        partial.push(running.value());
    }

    let stagnation_flag = || {
        if let Some(diagonal) = first_moving_inner {
            return ConvergenceFlag::InnerDivergent { diagonal };
        }
        let late = *partial.last().unwrap();
        let early = if outer / 10 == 0 { 0.0 } else { partial[outer / 10 - 1] };
        if stagnant(early, late) {
            ConvergenceFlag::Converged
        } else {
            ConvergenceFlag::NotConverged
        }
    };

    let (applied, flag, tail_bound) = match policy {
        TailPolicy::None => (TailPolicy::None, ConvergenceFlag::Unassessed, None),
        TailPolicy::Stagnation => (TailPolicy::Stagnation, stagnation_flag(), None),
        TailPolicy::Analytic => match (w, m.analytic_tail(outer, inner)) {
            (None, Some(t)) => {
                let flag = if t.is_finite() { ConvergenceFlag::Converged } else { ConvergenceFlag::NotConverged };
                (TailPolicy::Analytic, flag, Some(t))
            }
            _ => (TailPolicy::Stagnation, stagnation_flag(), None),
        },
    };

    Ok(DiagonalProfile {
        norms,
        partial_criterion: partial,
        inner_cutoff: inner,
        policy,
        applied_policy: applied,
        flag,
        tail_bound,
    })
}

/// `sum_{n=1..N} (sum_{k=1..K} |a(n+k-1,k)|^2)^(1/2)`.
pub fn criterion_sum(m: &CoefficientMatrix, outer: usize, inner: usize, policy: TailPolicy) -> Result<DiagonalProfile> {
    profile(m, None, outer, inner, policy)
}

/// Criterion with every `|a(n+k-1,k)|^2` weighted by `|u_{n+k-1}|^2`.
pub fn weighted_criterion_sum(
    m: &CoefficientMatrix,
    w: &VectorWeights,
    outer: usize,
    inner: usize,
    policy: TailPolicy,
) -> Result<DiagonalProfile> {
    profile(m, Some(w), outer, inner, policy)
}

fn levy(m: &CoefficientMatrix, w: Option<&VectorWeights>, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(invalid("horizon must be positive"));
    }
    m.require_order(horizon, 1)?;
    if let Some(w) = w {
        w.require(horizon)?;
    }
    let mut acc = CompensatedSum::new();
    for d in 1..=horizon {
        acc.add(diagonal_square_sum(m, w, d, 1, horizon - d + 1).0.sqrt());
    }
    Ok(2.0 * acc.value())
}

/// Finite maximal-inequality bound
/// `2 sum_{n=1..N} (sum_{k=1..N-n+1} |a(n+k-1,k)|^2)^(1/2)`.
pub fn levy_bound(m: &CoefficientMatrix, horizon: usize) -> Result<f64> {
    levy(m, None, horizon)
}

/// Bound for the series `sum X_n u_n`.
pub fn weighted_levy_bound(m: &CoefficientMatrix, w: &VectorWeights, horizon: usize) -> Result<f64> {
    levy(m, Some(w), horizon)
}

fn tail_a_impl(m: &CoefficientMatrix, w: Option<&VectorWeights>, n: usize, k: usize) -> Result<f64> {
    m.require_order(n + k, k)?;
    if let Some(w) = w {
        w.require(n + k)?;
    }
    let mut acc = CompensatedSum::new();
    for d in 1..=n {
        // Rows n+1..=n+K of diagonal d.
        acc.add(diagonal_square_sum(m, w, d, n + 2 - d, n + 1 - d + k).0.sqrt());
    }
    Ok(acc.value())
}

fn tail_b_impl(m: &CoefficientMatrix, w: Option<&VectorWeights>, n: usize, k: usize) -> Result<f64> {
    m.require_order(n + 2 * k - 1, k)?;
    if let Some(w) = w {
        w.require(n + 2 * k - 1)?;
    }
    let mut acc = CompensatedSum::new();
    for d in n + 1..=n + k {
        acc.add(diagonal_square_sum(m, w, d, 1, k).0.sqrt());
    }
    Ok(acc.value())
}

/// Tail quantity `A_N`: the parts of diagonals `1..=N` lying in rows
/// `N+1..=N+K`.
pub fn tail_a(m: &CoefficientMatrix, n: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("tail cutoff K must be positive"));
    }
    tail_a_impl(m, None, n, k)
}

/// Tail quantity `B_N = sum_{n=N+1..N+K} |d_n^(K)|`.
pub fn tail_b(m: &CoefficientMatrix, n: usize, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(invalid("tail cutoff K must be positive"));
    }
    tail_b_impl(m, None, n, k)
}

/// `A_N`, `B_N` and the bound `2 (A_N + B_N)` on
/// `E sup_{l <= K} |S_{N+l} - S_N|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub n: usize,
    pub inner_cutoff: usize,
    pub a: f64,
    pub b: f64,
    pub bound_rhs: f64,
}

pub fn tail_report(m: &CoefficientMatrix, w: Option<&VectorWeights>, n: usize, k: usize) -> Result<TailReport> {
    if k == 0 {
        return Err(invalid("tail cutoff K must be positive"));
    }
    let a = tail_a_impl(m, w, n, k)?;
    let b = tail_b_impl(m, w, n, k)?;
    Ok(TailReport { n, inner_cutoff: k, a, b, bound_rhs: 2.0 * (a + b) })
}

/// Truncated double absolute sum `sum_{n<=N} sum_{k<=n} |a(n,k)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteSum {
    pub value: f64,
    pub converged: bool,
}

pub fn absolute_sum(m: &CoefficientMatrix, rows: usize) -> Result<AbsoluteSum> {
    if rows == 0 {
        return Err(invalid("row count must be positive"));
    }
    m.require_order(rows, 1)?;
    let mut acc = CompensatedSum::new();
    let mut early = 0.0;
    for n in 1..=rows {
        for k in m.support().columns(n) {
            acc.add(m.entry(n, k).norm());
        }
        if n == rows / 10 {
            early = acc.value();
        }
    }
    let value = acc.value();
    Ok(AbsoluteSum { value, converged: stagnant(early, value) })
}

/// Truncated column sums `c_k = sum_{n=k..N} a(n,k)`, `k = 1..=N`.
///
/// Diagnostic only: exchanging the order of summation is not justified for
/// the infinite series in general.
pub fn column_sums(m: &CoefficientMatrix, rows: usize) -> Result<Vec<Complex64>> {
    m.require_order(rows, 1)?;
    let mut re = vec![CompensatedSum::new(); rows];
    let mut im = vec![CompensatedSum::new(); rows];
    for n in 1..=rows {
        for k in m.support().columns(n) {
            let z = m.entry(n, k);
            re[k - 1].add(z.re);
            im[k - 1].add(z.im);
        }
    }
    Ok(re.iter().zip(&im).map(|(r, i)| Complex64::new(r.value(), i.value())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{EntryLaw, Support};
    use crate::covfactor::fgn0_coefficients;

    fn ones2() -> CoefficientMatrix {
        CoefficientMatrix::from_rows(&[vec![1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn diagonals_of_catalog_matrices() {
        let id = CoefficientMatrix::identity(6);
        let re = |v: Vec<Complex64>| v.into_iter().map(|z| z.re).collect::<Vec<_>>();
        assert_eq!(re(diagonal(&id, 1, 3).unwrap()), vec![1.0; 3]);
        assert_eq!(re(diagonal(&id, 2, 3).unwrap()), vec![0.0; 3]);
        let col = CoefficientMatrix::collinear(EntryLaw::Geometric, 6);
        assert_eq!(re(diagonal(&col, 2, 3).unwrap()), vec![0.25, 0.0, 0.0]);
        let f = re(diagonal(&fgn0_coefficients(5), 2, 2).unwrap());
        assert!((f[0] + 0.5).abs() < 1e-15);
        assert!((f[1] + (2.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_beyond_order_names_the_entry() {
        let err = diagonal(&CoefficientMatrix::identity(3), 2, 3).unwrap_err();
        assert_eq!(err, crate::Error::Truncation { n: 4, k: 3, order: 3 });
    }

    #[test]
    fn harmonic_diagonal_criterion() {
        let m = CoefficientMatrix::diagonal(EntryLaw::Harmonic, 20_000);
        let p = criterion_sum(&m, 10_000, 10_000, TailPolicy::None).unwrap();
        let limit = std::f64::consts::PI / 6f64.sqrt();
        assert!((p.value() - limit).abs() < 1e-4);
        assert_eq!(p.flag, ConvergenceFlag::Unassessed);
        let analytic = criterion_sum(&m, 10_000, 10_000, TailPolicy::Analytic).unwrap();
        assert!(analytic.converged());
        assert!(analytic.value() + analytic.tail_bound.unwrap() >= limit);
    }

    #[test]
    fn collinear_geometric_criterion_tends_to_one() {
        let m = CoefficientMatrix::collinear(EntryLaw::Geometric, 800);
        let p = criterion_sum(&m, 400, 400, TailPolicy::Stagnation).unwrap();
        assert!((p.value() - 1.0).abs() < 1e-15);
        assert!(p.converged());
    }

    #[test]
    fn zero_matrix_converges_to_zero() {
        let p = criterion_sum(&CoefficientMatrix::zero(40), 20, 20, TailPolicy::Stagnation).unwrap();
        assert_eq!(p.value(), 0.0);
        assert!(p.converged());
    }

    #[test]
    fn weighted_identity_matches_diagonal_example() {
        let w = VectorWeights::axis_cycling(1, "1/n", |n| 1.0 / n as f64).unwrap();
        let m = CoefficientMatrix::identity(4000);
        let a = weighted_criterion_sum(&m, &w, 2000, 2000, TailPolicy::None).unwrap().value();
        let b = criterion_sum(&CoefficientMatrix::diagonal(EntryLaw::Harmonic, 4000), 2000, 2000, TailPolicy::None).unwrap().value();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn weighted_power_decay_stagnates_below_bound() {
        let w = VectorWeights::axis_cycling(1, "geo", |n| 0.5f64.powf(n as f64 / 2.0)).unwrap();
        let m = CoefficientMatrix::power_decay(2.0, 800).unwrap();
        let p = weighted_criterion_sum(&m, &w, 400, 400, TailPolicy::Stagnation).unwrap();
        assert!(p.converged(), "{:?}", p.flag);
        assert!(p.value() < std::f64::consts::PI.powi(2) / 3.0);
        let zero = VectorWeights::axis_cycling(1, "zero", |_| 0.0).unwrap();
        assert_eq!(weighted_criterion_sum(&m, &zero, 50, 50, TailPolicy::None).unwrap().value(), 0.0);
    }

    #[test]
    fn power_decay_inner_sum_diverges_at_first_diagonal() {
        let m = CoefficientMatrix::power_decay(1.0, 400).unwrap();
        let p = criterion_sum(&m, 200, 200, TailPolicy::Stagnation).unwrap();
        assert_eq!(p.flag, ConvergenceFlag::InnerDivergent { diagonal: 1 });
        assert_eq!(p.flag.describe(), "inner sum diverges at diagonal 1");
        let a = criterion_sum(&m, 200, 200, TailPolicy::Analytic).unwrap();
        assert_eq!(a.flag, ConvergenceFlag::NotConverged);
    }

    #[test]
    fn fgn0_with_geometric_weights_converges() {
        let w = VectorWeights::axis_cycling(1, "geo", |n| 0.5f64.powf(n as f64 / 2.0)).unwrap();
        let p = weighted_criterion_sum(&fgn0_coefficients(800), &w, 400, 400, TailPolicy::Stagnation).unwrap();
        assert!(p.converged(), "{:?}", p.flag);
    }

    #[test]
    fn analytic_policy_falls_back_with_weights() {
        let w = VectorWeights::axis_cycling(1, "unit", |_| 1.0).unwrap();
        let m = CoefficientMatrix::collinear(EntryLaw::Geometric, 100);
        let p = weighted_criterion_sum(&m, &w, 40, 40, TailPolicy::Analytic).unwrap();
        assert_eq!(p.applied_policy, TailPolicy::Stagnation);
        assert_eq!(p.tail_bound, None);
    }

    #[test]
    fn levy_bound_examples() {
        assert_eq!(levy_bound(&CoefficientMatrix::identity(1), 1).unwrap(), 2.0);
        assert!((levy_bound(&ones2(), 2).unwrap() - 2.0 * (2f64.sqrt() + 1.0)).abs() < 1e-15);
        assert_eq!(levy_bound(&CoefficientMatrix::zero(2), 2).unwrap(), 0.0);
    }

    #[test]
    fn tail_examples() {
        let col = CoefficientMatrix::collinear(EntryLaw::Geometric, 100);
        // d_n = (2^-n, 0, ...), so B_N = 2^-N - 2^-(N+K) and A_N = 0.
        assert!((tail_b(&col, 10, 20).unwrap() - (0.5f64.powi(10) - 0.5f64.powi(30))).abs() < 1e-18);
        assert_eq!(tail_a(&col, 10, 20).unwrap(), 0.0);
        let diag = CoefficientMatrix::diagonal(EntryLaw::Harmonic, 100);
        let a = tail_a(&diag, 10, 30).unwrap();
        let expect = (11..=40).map(|k| 1.0 / (k * k) as f64).sum::<f64>().sqrt();
        assert!((a - expect).abs() < 1e-15);
        assert_eq!(tail_b(&diag, 10, 30).unwrap(), 0.0);
        let zero = CoefficientMatrix::zero(100);
        let r = tail_report(&zero, None, 10, 20).unwrap();
        assert_eq!((r.a, r.b, r.bound_rhs), (0.0, 0.0, 0.0));
    }

    #[test]
    fn tail_requires_enough_rows() {
        let m = CoefficientMatrix::ones(20);
        assert!(matches!(tail_b(&m, 10, 6), Err(crate::Error::Truncation { .. })));
        assert!(tail_b(&m, 10, 5).is_ok());
    }

    #[test]
    fn absolute_sum_examples() {
        let h = absolute_sum(&CoefficientMatrix::diagonal(EntryLaw::Harmonic, 1000), 1000).unwrap();
        let harmonic: f64 = (1..=1000).map(|n| 1.0 / n as f64).sum();
        assert!((h.value - harmonic).abs() < 1e-12);
        assert!(!h.converged);
        let s = absolute_sum(&CoefficientMatrix::diagonal(EntryLaw::InverseSquare, 100_000), 100_000).unwrap();
        assert!((s.value - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-4);
        assert_eq!(absolute_sum(&CoefficientMatrix::zero(5), 5).unwrap().value, 0.0);
    }

    #[test]
    fn column_sum_examples() {
        let c = column_sums(&CoefficientMatrix::collinear(EntryLaw::Geometric, 30), 30).unwrap();
        assert!((c[0].re - (1.0 - 0.5f64.powi(30))).abs() < 1e-16);
        assert!(c[1..].iter().all(|z| z.re == 0.0));
        let d = column_sums(&CoefficientMatrix::diagonal(EntryLaw::Harmonic, 5), 5).unwrap();
        assert_eq!(d[3].re, 0.25);
        let o: Vec<f64> = column_sums(&CoefficientMatrix::ones(3), 3).unwrap().iter().map(|z| z.re).collect();
        assert_eq!(o, vec![3.0, 2.0, 1.0]);
    }

    #[test]
    fn power_decay_and_shift_mask_examples() {
        let p = CoefficientMatrix::power_decay(2.0, 5).unwrap();
        assert_eq!((p.get_re(3, 1).unwrap(), p.get_re(3, 3).unwrap()), (1.0 / 9.0, 1.0));
        let q = CoefficientMatrix::power_decay(1.0, 5).unwrap();
        assert_eq!(q.get_re(4, 1).unwrap(), 0.25);
        let ones = CoefficientMatrix::ones(4);
        let s = ones.shift_mask(1);
        assert_eq!(s.get_re(1, 1).unwrap(), 0.0);
        assert_eq!(s.get_re(2, 1).unwrap(), 1.0);
        assert!(ones.shift_mask(4).to_real_rows(4).unwrap().iter().flatten().all(|&x| x == 0.0));
        assert_eq!(ones.shift_mask(0).to_real_rows(4).unwrap(), ones.to_real_rows(4).unwrap());
    }

    #[test]
    fn banded_support_masks_entries() {
        let m = CoefficientMatrix::from_fn(6, Support::Banded { width: 1 }, "b", |_, _| 1.0);
        assert_eq!(m.get_re(5, 3).unwrap(), 0.0);
        assert_eq!(m.get_re(5, 4).unwrap(), 1.0);
        assert_eq!(diagonal_square_sum(&m, None, 3, 1, 4).0, 0.0);
    }
}

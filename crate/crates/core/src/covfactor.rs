//! Coefficient matrices from covariance structures: dense lower Cholesky
//! factorization, the fractional Gaussian noise kernel, and the explicit
//! banded model of fractional Gaussian noise with index 0.

use num_complex::Complex64;

use crate::coeffs::{CoefficientMatrix, Support};
use crate::error::{invalid, Error, Result};

/// Pivots below this fraction of the largest diagonal entry abort the factorization.
pub const PIVOT_RTOL: f64 = 1e-12;

/// `|x|^p` with the convention `|0|^p = 0` for every `p >= 0`, including `p = 0`.
fn pow_abs(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(p)
    }
}

/// Covariance `E(Δ_n Δ_m)` of fractional Gaussian noise with Hurst index `H`:
/// `½|k+1|^{2H} + ½|k-1|^{2H} - |k|^{2H}` with `k = n - m`.
pub fn fgn_covariance(hurst: f64, n: i64, m: i64) -> Result<f64> {
    if !(0.0..1.0).contains(&hurst) {
        return Err(invalid(format!("Hurst index must lie in [0, 1), got {hurst}")));
    }
    let k = (n - m) as f64;
    let p = 2.0 * hurst;
    Ok(0.5 * pow_abs(k + 1.0, p) + 0.5 * pow_abs(k - 1.0, p) - pow_abs(k, p))
}

/// A symmetric covariance kernel of finite size.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    /// Row-major `size x size` symmetric matrix.
    Explicit { size: usize, values: Vec<f64> },
    Fgn { hurst: f64, size: usize },
}

impl CovarianceSpec {
    /// Explicit matrix; rejects asymmetric or non-square input.
    pub fn explicit(rows: &[Vec<f64>]) -> Result<Self> {
        let size = rows.len();
        if size == 0 {
            return Err(invalid("covariance matrix is empty"));
        }
        let mut values = Vec::with_capacity(size * size);
        for row in rows {
            if row.len() != size {
                return Err(Error::Dimension { expected: size, found: row.len() });
            }
            values.extend_from_slice(row);
        }
        for i in 0..size {
            for j in 0..i {
                let (a, b) = (values[i * size + j], values[j * size + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(invalid(format!(
                        "covariance is not symmetric at ({}, {}): {a} vs {b}",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self::Explicit { size, values })
    }

    pub fn fgn(hurst: f64, size: usize) -> Result<Self> {
        fgn_covariance(hurst, 0, 0)?;
        if size == 0 {
            return Err(invalid("covariance size must be positive"));
        }
        Ok(Self::Fgn { hurst, size })
    }

    pub fn size(&self) -> usize {
        match self {
            Self::Explicit { size, .. } | Self::Fgn { size, .. } => *size,
        }
    }

    /// `R(n, m)`, 1-based.
    pub fn entry(&self, n: usize, m: usize) -> f64 {
        match self {
            Self::Explicit { size, values } => values[(n - 1) * size + (m - 1)],
            Self::Fgn { hurst, .. } => fgn_covariance(*hurst, n as i64, m as i64).expect("validated Hurst index"),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Explicit { size, .. } => format!("explicit({size})"),
            Self::Fgn { hurst, size } => format!("fgn:H={hurst}({size})"),
        }
    }
}

/// Lower-triangular factor `α` with `α αᵀ = R` and nonnegative diagonal.
pub fn cholesky_lower(spec: &CovarianceSpec) -> Result<CoefficientMatrix> {
    let n = spec.size();
    let max_diag = (1..=n).map(|i| spec.entry(i, i)).fold(0.0f64, f64::max);
    let threshold = PIVOT_RTOL * max_diag;
    let mut l = vec![0.0f64; n * (n + 1) / 2];
    let idx = |i: usize, j: usize| i * (i + 1) / 2 + j;
    for i in 0..n {
        for j in 0..=i {
            let mut s = spec.entry(i + 1, j + 1);
            for p in 0..j {
                s -= l[idx(i, p)] * l[idx(j, p)];
            }
            if i == j {
                if !(s > threshold) {
                    return Err(Error::NotPositiveDefinite { index: i + 1, value: s });
                }
                l[idx(i, i)] = s.sqrt();
            } else {
                l[idx(i, j)] = s / l[idx(j, j)];
            }
        }
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| l[idx(i, 0)..=idx(i, i)].to_vec()).collect();
    Ok(CoefficientMatrix::from_rows(&rows)?.with_label(format!("chol[{}]", spec.label())))
}

/// Explicit index-0 fractional Gaussian noise model
/// `Δ_n = -√((n-1)/(2n)) Z_{n-1} + √((n+1)/(2n)) Z_n`, `Z_0 = 0`.
pub fn fgn0_coefficients(order: usize) -> CoefficientMatrix {
    CoefficientMatrix::from_fn(order, Support::Banded { width: 1 }, "fgn0", |n, k| {
        let x = n as f64;
        if k == n {
            ((x + 1.0) / (2.0 * x)).sqrt()
        } else if k + 1 == n {
            -((x - 1.0) / (2.0 * x)).sqrt()
        } else {
            0.0
        }
    })
    // The main diagonal tends to 1/√2, so its l2 norm diverges.
    .with_analytic_tail(|_, _| f64::INFINITY)
}

/// Flips column signs so that every diagonal entry is nonnegative.
pub fn normalize_column_signs(m: &CoefficientMatrix) -> Result<CoefficientMatrix> {
    let order = m.order();
    let signs: Vec<f64> = (1..=order)
        .map(|j| if m.get(j, j).map(|z| z.re < 0.0).unwrap_or(false) { -1.0 } else { 1.0 })
        .collect();
    let rows: Vec<Vec<Complex64>> =
        (1..=order).map(|n| (1..=n).map(|k| m.entry(n, k) * signs[k - 1]).collect()).collect();
    Ok(CoefficientMatrix::from_complex_rows(&rows)?
        .with_label(m.label().to_string())
        .with_support(m.support()))
}

/// Largest elementwise deviation of `M Mᴴ` from the covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    pub max_deviation: f64,
    /// 1-based position `(n, m)` of the largest deviation.
    pub at: (usize, usize),
    pub tol: f64,
    pub passed: bool,
}

pub fn verify_factorization(m: &CoefficientMatrix, spec: &CovarianceSpec, tol: f64) -> Result<FactorizationReport> {
    let size = spec.size();
    m.require_order(size, size)?;
    let rows: Vec<Vec<Complex64>> = (1..=size).map(|n| m.row(n)).collect::<Result<_>>()?;
    let mut worst = (0.0f64, (1, 1));
    for n in 1..=size {
        for j in 1..=n {
            let (rn, rj) = (&rows[n - 1], &rows[j - 1]);
            let dot: Complex64 = rn[..j].iter().zip(&rj[..j]).map(|(a, b)| a * b.conj()).sum();
            let dev = (dot - Complex64::new(spec.entry(n, j), 0.0)).norm();
            if dev > worst.0 || dev.is_nan() {
                worst = (dev, (n, j));
            }
        }
    }
    Ok(FactorizationReport { max_deviation: worst.0, at: worst.1, tol, passed: worst.0 <= tol })
}

/// Largest `|a(n,k) - b(n,k)|` over rows `1..=rows`.
pub fn max_entry_deviation(a: &CoefficientMatrix, b: &CoefficientMatrix, rows: usize) -> Result<f64> {
    a.require_order(rows, rows)?;
    b.require_order(rows, rows)?;
    let mut worst = 0.0f64;
    for n in 1..=rows {
        for k in 1..=n {
            worst = worst.max((a.entry(n, k) - b.entry(n, k)).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values() {
        for h in [0.0, 0.1, 0.5, 0.9] {
            assert_eq!(fgn_covariance(h, 4, 4).unwrap(), 1.0);
        }
        for k in 1..20 {
            assert_eq!(fgn_covariance(0.5, k, 0).unwrap(), 0.0);
        }
        assert_eq!(fgn_covariance(0.0, 2, 1).unwrap(), -0.5);
        assert_eq!(fgn_covariance(0.0, 1, 2).unwrap(), -0.5);
        assert_eq!(fgn_covariance(0.0, 3, 1).unwrap(), 0.0);
        assert!(fgn_covariance(1.0, 1, 1).is_err());
        assert!(fgn_covariance(-0.1, 1, 1).is_err());
    }

    #[test]
    fn kernel_is_even() {
        for h in [0.0, 0.3, 0.7, 0.95] {
            for k in 0..30 {
                assert_eq!(fgn_covariance(h, k, 0).unwrap(), fgn_covariance(h, 0, k).unwrap());
            }
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let spec = CovarianceSpec::explicit(&[vec![1.0, -0.5], vec![-0.5, 1.0]]).unwrap();
        let l = cholesky_lower(&spec).unwrap();
        assert_eq!(l.get_re(1, 1).unwrap(), 1.0);
        assert_eq!(l.get_re(2, 1).unwrap(), -0.5);
        assert!((l.get_re(2, 2).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn white_noise_factors_to_identity() {
        let l = cholesky_lower(&CovarianceSpec::fgn(0.5, 30).unwrap()).unwrap();
        let id = CoefficientMatrix::identity(30);
        assert!(max_entry_deviation(&l, &id, 30).unwrap() < 1e-12);
    }

    #[test]
    fn fgn0_rows() {
        let m = fgn0_coefficients(10);
        assert_eq!(m.get_re(1, 1).unwrap(), 1.0);
        assert_eq!(m.get_re(2, 1).unwrap(), -0.5);
        assert!((m.get_re(2, 2).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        for n in 1..=10 {
            let s: f64 = (1..=n).map(|k| m.get_re(n, k).unwrap().powi(2)).sum();
            assert!((s - 1.0).abs() < 1e-14);
            for k in 1..n.saturating_sub(1) {
                assert_eq!(m.get_re(n, k).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn non_spd_reports_pivot() {
        let spec = CovarianceSpec::explicit(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        match cholesky_lower(&spec) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(CovarianceSpec::explicit(&[vec![1.0, 0.1], vec![0.2, 1.0]]).is_err());
    }

    #[test]
    fn corrupted_entry_deviation_equals_perturbation() {
        let spec = CovarianceSpec::fgn(0.0, 6).unwrap();
        let mut rows = fgn0_coefficients(6).to_real_rows(6).unwrap();
        rows[3][0] += 0.25; // a(4,1): row 4 previously had zero there
        let bad = CoefficientMatrix::from_rows(&rows).unwrap();
        let rep = verify_factorization(&bad, &spec, 1e-10).unwrap();
        assert!(!rep.passed);
        // (MMᵀ)(4,4) moves by 0.25², (4,1) by 0.25·a(1,1) = 0.25.
        assert!((rep.max_deviation - 0.25).abs() < 1e-15, "{rep:?}");
    }

    #[test]
    fn column_sign_normalization() {
        let m = CoefficientMatrix::from_rows(&[vec![-1.0], vec![0.5, -2.0]]).unwrap();
        let n = normalize_column_signs(&m).unwrap();
        assert_eq!(n.to_real_rows(2).unwrap(), vec![vec![1.0], vec![-0.5, 2.0]]);
    }
}

use std::fmt;
use std::ops::RangeInclusive;
use std::sync::Arc;

use num_complex::Complex64;

use super::EntryLaw;
use crate::error::{invalid, Error, Result};
use crate::innovations::SignPattern;

type EntryFn = dyn Fn(usize, usize) -> Complex64 + Send + Sync;
type TailFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// Declared sparsity of a coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Support {
    /// Any `k <= n` may be nonzero.
    Full,
    /// `a(n,k) = 0` whenever `k < n - width`: row `n` combines `Z_{n-width}..Z_n`.
    Banded { width: usize },
    /// Only column 1 is nonzero.
    Collinear,
    /// Only the main diagonal is nonzero.
    Diagonal,
}

impl Support {
    /// Columns of row `n` that may hold a nonzero entry.
    pub fn columns(&self, n: usize) -> RangeInclusive<usize> {
        match *self {
            Support::Full => 1..=n,
            Support::Banded { width } => n.saturating_sub(width).max(1)..=n,
            Support::Collinear => 1..=1,
            Support::Diagonal => n..=n,
        }
    }

    /// Positions `k` on diagonal `d` (entries `a(d+k-1, k)`) that may be nonzero,
    /// intersected with `lo..=hi`.
    pub(crate) fn diagonal_positions(&self, d: usize, lo: usize, hi: usize) -> RangeInclusive<usize> {
        #[allow(clippy::reversed_empty_ranges)]
        let empty = 1..=0;
        if lo > hi {
            return empty;
        }
        match *self {
            Support::Full => lo..=hi,
            Support::Banded { width } if d <= width + 1 => lo..=hi,
            Support::Banded { .. } => empty,
            Support::Collinear if lo == 1 => 1..=1,
            Support::Collinear => empty,
            Support::Diagonal if d == 1 => lo..=hi,
            Support::Diagonal => empty,
        }
    }

    fn label(&self) -> String {
        match self {
            Support::Full => "full".into(),
            Support::Banded { width } => format!("banded({width})"),
            Support::Collinear => "collinear".into(),
            Support::Diagonal => "diagonal".into(),
        }
    }
}

#[derive(Clone)]
enum Source {
    /// Packed rows: row `n` occupies `n(n-1)/2 .. n(n+1)/2`.
    Table(Arc<Vec<Complex64>>),
    Rule(Arc<EntryFn>),
}

/// Lower-triangular coefficient array `a(n,k)`, `1 <= k <= n`, indices 1-based.
///
/// Backed either by an explicit table or by a pure rule. Values are immutable
/// after construction and cheap to clone.
#[derive(Clone)]
pub struct CoefficientMatrix {
    source: Source,
    support: Support,
    order: usize,
    complex: bool,
    label: String,
    analytic_tail: Option<Arc<TailFn>>,
}

impl fmt::Debug for CoefficientMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientMatrix")
            .field("label", &self.label)
            .field("order", &self.order)
            .field("support", &self.support)
            .field("complex", &self.complex)
            .finish()
    }
}

fn packed_index(n: usize, k: usize) -> usize {
    n * (n - 1) / 2 + (k - 1)
}

impl CoefficientMatrix {
    /// Explicit real table; row `i` (1-based) must hold exactly `i` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let complex_rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_complex_rows(&complex_rows)
    }

    /// Explicit complex table.
    pub fn from_complex_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("a coefficient table needs at least one row"));
        }
        let mut entries = Vec::with_capacity(rows.len() * (rows.len() + 1) / 2);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != i + 1 {
                return Err(invalid(format!("row {} has {} entries, expected {}", i + 1, row.len(), i + 1)));
            }
            if let Some(bad) = row.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(invalid(format!("row {} holds a non-finite entry {bad}", i + 1)));
            }
            entries.extend_from_slice(row);
        }
        let complex = entries.iter().any(|z| z.im != 0.0);
        Ok(Self {
            source: Source::Table(Arc::new(entries)),
            support: Support::Full,
            order: rows.len(),
            complex,
            label: "table".into(),
            analytic_tail: None,
        })
    }

    /// Rule-backed real matrix. Entries outside `support` are forced to zero.
    pub fn from_fn<F>(order: usize, support: Support, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        Self::from_complex_fn(order, support, label, false, move |n, k| Complex64::new(f(n, k), 0.0))
    }

    pub fn from_complex_fn<F>(
        order: usize,
        support: Support,
        label: impl Into<String>,
        complex: bool,
        f: F,
    ) -> Self
    where
        F: Fn(usize, usize) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            source: Source::Rule(Arc::new(f)),
            support,
            order,
            complex,
            label: label.into(),
            analytic_tail: None,
        }
    }

    /// Attaches a closed-form upper bound on `criterion - criterion_sum(N, K)`,
    /// called as `tail(N, K)`; `f64::INFINITY` declares divergence.
    pub fn with_analytic_tail<F>(mut self, tail: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        self.analytic_tail = Some(Arc::new(tail));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Declares a narrower support; entries outside it are treated as zero.
    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn is_complex(&self) -> bool {
        self.complex
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_table(&self) -> bool {
        matches!(self.source, Source::Table(_))
    }

    pub(crate) fn analytic_tail(&self, outer: usize, inner: usize) -> Option<f64> {
        self.analytic_tail.as_ref().map(|t| t(outer, inner))
    }

    /// `a(n,k)` with bounds checking; zero above the diagonal.
    pub fn get(&self, n: usize, k: usize) -> Result<Complex64> {
        if n == 0 || k == 0 || n > self.order {
            return Err(Error::Truncation { n, k, order: self.order });
        }
        Ok(self.entry(n, k))
    }

    /// Real part of `a(n,k)`; convenient for real matrices.
    pub fn get_re(&self, n: usize, k: usize) -> Result<f64> {
        self.get(n, k).map(|z| z.re)
    }

    /// Unchecked entry for `1 <= n <= order`, `k >= 1`.
    #[inline]
    pub(crate) fn entry(&self, n: usize, k: usize) -> Complex64 {
        if k > n || !self.support.columns(n).contains(&k) {
            return Complex64::new(0.0, 0.0);
        }
        match &self.source {
            Source::Table(t) => t[packed_index(n, k)],
            Source::Rule(f) => f(n, k),
        }
    }

    #[inline]
    pub(crate) fn abs_sq(&self, n: usize, k: usize) -> f64 {
        self.entry(n, k).norm_sqr()
    }

    pub(crate) fn require_order(&self, n: usize, k: usize) -> Result<()> {
        if n > self.order {
            Err(Error::Truncation { n, k, order: self.order })
        } else {
            Ok(())
        }
    }

    /// Row `n` as a dense vector of length `n`.
    pub fn row(&self, n: usize) -> Result<Vec<Complex64>> {
        self.require_order(n, n)?;
        Ok((1..=n).map(|k| self.entry(n, k)).collect())
    }

    /// Real parts of rows `1..=rows`.
    pub fn to_real_rows(&self, rows: usize) -> Result<Vec<Vec<f64>>> {
        self.require_order(rows, rows)?;
        Ok((1..=rows).map(|n| (1..=n).map(|k| self.entry(n, k).re).collect()).collect())
    }

    /// Explicit table holding rows `1..=rows`, keeping support and label.
    pub fn materialize(&self, rows: usize) -> Result<Self> {
        self.require_order(rows, rows)?;
        let rows_v: Vec<Vec<Complex64>> =
            (1..=rows).map(|n| (1..=n).map(|k| self.entry(n, k)).collect()).collect();
        let mut m = Self::from_complex_rows(&rows_v)?;
        m.support = self.support;
        m.label = self.label.clone();
        m.complex = self.complex;
        Ok(m)
    }

    /// Masked copy `b(n,k) = a(n,k)` for `n > offset`, zero otherwise.
    pub fn shift_mask(&self, offset: usize) -> Self {
        let inner = self.clone();
        let mut m = Self::from_complex_fn(
            self.order,
            self.support,
            format!("{}|rows>{offset}", self.label),
            self.complex,
            move |n, k| if n > offset { inner.entry(n, k) } else { Complex64::new(0.0, 0.0) },
        );
        if offset == 0 {
            m.analytic_tail = self.analytic_tail.clone();
        }
        m
    }

    /// Multiplies row `n` by `ε_n`.
    pub fn flip_rows(&self, signs: &SignPattern) -> Result<Self> {
        if signs.len() < self.order {
            return Err(Error::Dimension { expected: self.order, found: signs.len() });
        }
        let inner = self.clone();
        let signs = signs.clone();
        let mut m = Self::from_complex_fn(
            self.order,
            self.support,
            format!("{}|flipped", self.label),
            self.complex,
            move |n, k| inner.entry(n, k) * signs.get(n),
        );
        m.analytic_tail = self.analytic_tail.clone();
        Ok(m)
    }

    pub fn support_label(&self) -> String {
        self.support.label()
    }

    // --- catalog -----------------------------------------------------------

    pub fn zero(order: usize) -> Self {
        Self::from_fn(order, Support::Diagonal, "zero", |_, _| 0.0).with_analytic_tail(|_, _| 0.0)
    }

    /// `a(n,n) = 1`, everything else zero.
    pub fn identity(order: usize) -> Self {
        Self::diagonal(EntryLaw::Ones, order)
    }

    /// All-ones lower triangle.
    pub fn ones(order: usize) -> Self {
        Self::from_fn(order, Support::Full, "ones", |_, _| 1.0).with_analytic_tail(|_, _| f64::INFINITY)
    }

    /// `a(n,n) = law(n)`: independent terms.
    pub fn diagonal(law: EntryLaw, order: usize) -> Self {
        Self::from_fn(order, Support::Diagonal, format!("diag:{}", law.name()), move |n, _| law.value(n))
            .with_analytic_tail(move |_, inner| law.square_tail(inner).sqrt())
    }

    /// `a(n,1) = law(n)`: collinear terms.
    pub fn collinear(law: EntryLaw, order: usize) -> Self {
        Self::from_fn(order, Support::Collinear, format!("collinear:{}", law.name()), move |n, _| law.value(n))
            .with_analytic_tail(move |outer, _| law.abs_tail(outer))
    }

    /// `a(n,k) = (n-k+1)^(-alpha)`.
    pub fn power_decay(alpha: f64, order: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("power decay exponent must be positive, got {alpha}")));
        }
        // Each diagonal is constant, so every inner l2 sum diverges.
        Ok(Self::from_fn(order, Support::Full, format!("power:alpha={alpha}"), move |n, k| {
            ((n - k + 1) as f64).powf(-alpha)
        })
        .with_analytic_tail(|_, _| f64::INFINITY))
    }
}

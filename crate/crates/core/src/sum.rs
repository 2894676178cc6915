//! Compensated summation.
//!
//! Diagonal norms at `N = 10^4` accumulate ten thousand terms of very
//! different magnitudes; the identities checked by the test suite hold to
//! `1e-12`, which plain left-to-right summation does not reliably meet.

/// Neumaier (improved Kahan–Babuška) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl Extend<f64> for CompensatedSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    let mut acc = CompensatedSum::new();
    acc.extend(iter);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
        assert_eq!(xs.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn harmonic_squares_match_reference() {
        // Reverse-order naive summation of positive decreasing terms is the
        // accurate reference here.
        let n = 100_000;
        let forward = compensated_sum((1..=n).map(|k| 1.0 / (k as f64 * k as f64)));
        let reverse: f64 = (1..=n).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum();
        assert!((forward - reverse).abs() < 1e-15);
    }
}

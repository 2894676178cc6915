//! Path realization of `X_n = ε_n Σ_{k≤n} a(n,k) Z_k` and the maximal
//! inequality checks built on it.

use crate::coeffs::{self, CoefficientMatrix, TailReport, VectorWeights};
use crate::error::{invalid, Error, Result};
use crate::innovations::{sample_innovations, EnumCap, InnovationLaw, InnovationSpec, Innovations, SignPattern};
use crate::stats::{means_indexed, moments_indexed, BoundReport, McEstimate, Method};

/// A coefficient matrix together with an optional change of sign and
/// optional vector weights (`Σ ε_n X_n u_n` with scalar innovations).
#[derive(Debug, Clone)]
pub struct SeriesModel {
    matrix: CoefficientMatrix,
    signs: Option<SignPattern>,
    weights: Option<VectorWeights>,
}

impl From<CoefficientMatrix> for SeriesModel {
    fn from(matrix: CoefficientMatrix) -> Self {
        Self::new(matrix)
    }
}

impl SeriesModel {
    pub fn new(matrix: CoefficientMatrix) -> Self {
        Self { matrix, signs: None, weights: None }
    }

    pub fn with_signs(mut self, signs: SignPattern) -> Self {
        self.signs = Some(signs);
        self
    }

    pub fn with_weights(mut self, weights: VectorWeights) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn matrix(&self) -> &CoefficientMatrix {
        &self.matrix
    }

    pub fn signs(&self) -> Option<&SignPattern> {
        self.signs.as_ref()
    }

    pub fn weights(&self) -> Option<&VectorWeights> {
        self.weights.as_ref()
    }

    fn components(&self) -> usize {
        if self.matrix.is_complex() {
            2
        } else {
            1
        }
    }

    /// Dimension of the terms for innovations of dimension `innovation_dim`.
    /// Complex coefficients double it (real and imaginary blocks).
    pub fn output_dim(&self, innovation_dim: usize) -> usize {
        let base = self.weights.as_ref().map_or(innovation_dim, |w| w.dim());
        base * self.components()
    }

    /// Checks that every ingredient reaches row `horizon`.
    pub fn check(&self, innovation_dim: usize, horizon: usize) -> Result<()> {
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        self.matrix.require_order(horizon, 1)?;
        if let Some(s) = &self.signs {
            if s.len() < horizon {
                return Err(Error::Dimension { expected: horizon, found: s.len() });
            }
        }
        if let Some(w) = &self.weights {
            if innovation_dim != 1 {
                return Err(Error::Dimension { expected: 1, found: innovation_dim });
            }
            w.require(horizon)?;
        }
        Ok(())
    }

    /// Maximal bound `2 Σ_n (Σ_k |a|^2 |u|^2)^(1/2)`; signs do not enter.
    pub fn levy_bound(&self, horizon: usize) -> Result<f64> {
        match &self.weights {
            Some(w) => coeffs::weighted_levy_bound(&self.matrix, w, horizon),
            None => coeffs::levy_bound(&self.matrix, horizon),
        }
    }

    pub fn tail_report(&self, offset: usize, inner: usize) -> Result<TailReport> {
        coeffs::tail_report(&self.matrix, self.weights.as_ref(), offset, inner)
    }

    /// Writes `X_n` into `out` (length `output_dim`). `z` holds at least `n`
    /// innovations of dimension `zdim`; `ubuf` has the weight dimension.
    #[inline]
    fn term_into(&self, z: &[f64], zdim: usize, n: usize, out: &mut [f64], ubuf: &mut [f64]) {
        out.fill(0.0);
        let eps = self.signs.as_ref().map_or(1.0, |s| s.get(n));
        let complex = self.matrix.is_complex();
        match &self.weights {
            None => {
                let (re, im) = out.split_at_mut(zdim);
                for k in self.matrix.support().columns(n) {
                    let a = self.matrix.entry(n, k);
                    let zk = &z[(k - 1) * zdim..k * zdim];
                    for (o, x) in re.iter_mut().zip(zk) {
                        *o += a.re * x;
                    }
                    if complex {
                        for (o, x) in im.iter_mut().zip(zk) {
                            *o += a.im * x;
                        }
                    }
                }
                if eps != 1.0 {
                    out.iter_mut().for_each(|x| *x *= eps);
                }
            }
            Some(w) => {
                let (mut xr, mut xi) = (0.0, 0.0);
                for k in self.matrix.support().columns(n) {
                    let a = self.matrix.entry(n, k);
                    xr += a.re * z[k - 1];
                    xi += a.im * z[k - 1];
                }
                w.fill(n, ubuf);
                let d = ubuf.len();
                for (i, u) in ubuf.iter().enumerate() {
                    out[i] = eps * xr * u;
                    if complex {
                        out[d + i] = eps * xi * u;
                    }
                }
            }
        }
    }

    /// `sup_{1<=l<=m} |X_{offset+1} + ... + X_{offset+l}|` for one realization.
    pub(crate) fn tail_sup(&self, z: &Innovations, offset: usize, m: usize) -> f64 {
        let zdim = z.dim();
        let dim = self.output_dim(zdim);
        let mut term = vec![0.0; dim];
        let mut ubuf = vec![0.0; self.weights.as_ref().map_or(0, |w| w.dim())];
        let mut acc = vec![0.0; dim];
        let mut sup = 0.0f64;
        for n in offset + 1..=offset + m {
            self.term_into(z.as_flat(), zdim, n, &mut term, &mut ubuf);
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            sup = sup.max(norm(&acc));
        }
        sup
    }
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// One realization: terms, prefix sums and running supremum of `|S_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPath {
    dim: usize,
    terms: Vec<f64>,
    prefix: Vec<f64>,
    running_sup: Vec<f64>,
}

impl SeriesPath {
    pub(crate) fn from_terms(dim: usize, terms: Vec<f64>) -> Self {
        let horizon = terms.len() / dim;
        let mut prefix = vec![0.0; terms.len()];
        let mut running_sup = Vec::with_capacity(horizon);
        let mut sup = 0.0f64;
        for n in 0..horizon {
            for i in 0..dim {
                let prev = if n == 0 { 0.0 } else { prefix[(n - 1) * dim + i] };
                prefix[n * dim + i] = prev + terms[n * dim + i];
            }
            sup = sup.max(norm(&prefix[n * dim..(n + 1) * dim]));
            running_sup.push(sup);
        }
        Self { dim, terms, prefix, running_sup }
    }

    pub fn horizon(&self) -> usize {
        self.running_sup.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `X_n`, 1-based.
    pub fn term(&self, n: usize) -> &[f64] {
        &self.terms[(n - 1) * self.dim..n * self.dim]
    }

    /// `S_n`, 1-based.
    pub fn prefix_sum(&self, n: usize) -> &[f64] {
        &self.prefix[(n - 1) * self.dim..n * self.dim]
    }

    pub fn prefix_norm(&self, n: usize) -> f64 {
        norm(self.prefix_sum(n))
    }

    pub fn prefix_norms(&self) -> Vec<f64> {
        (1..=self.horizon()).map(|n| self.prefix_norm(n)).collect()
    }

    /// `max_{j<=n} |S_j|`, 1-based.
    pub fn running_sup(&self, n: usize) -> f64 {
        self.running_sup[n - 1]
    }

    /// `max_{j<=N} |S_j|`.
    pub fn sup(&self) -> f64 {
        self.running_sup.last().copied().unwrap_or(0.0)
    }
}

/// Builds the path `X_n = ε_n Σ_k a(n,k) Z_k` (times `u_n` when weighted).
pub fn build_path(model: &SeriesModel, z: &Innovations, horizon: usize) -> Result<SeriesPath> {
    model.check(z.dim(), horizon)?;
    if z.len() < horizon {
        return Err(Error::Dimension { expected: horizon, found: z.len() });
    }
    let zdim = z.dim();
    let dim = model.output_dim(zdim);
    let mut terms = vec![0.0; horizon * dim];
    let mut ubuf = vec![0.0; model.weights.as_ref().map_or(0, |w| w.dim())];
    for n in 1..=horizon {
        model.term_into(z.as_flat(), zdim, n, &mut terms[(n - 1) * dim..n * dim], &mut ubuf);
    }
    Ok(SeriesPath::from_terms(dim, terms))
}

fn mc_tail_sup(model: &SeriesModel, spec: &InnovationSpec, offset: usize, m: usize, replicas: u64, seed: u64) -> Result<McEstimate> {
    Method::monte_carlo(replicas, seed).check_replicas()?;
    model.check(spec.dim(), offset + m)?;
    let ms = moments_indexed(replicas, 1, |r, out| {
        let z = sample_innovations(spec, offset + m, seed, r);
        out[0] = model.tail_sup(&z, offset, m);
    });
    Ok(McEstimate::from_moments(&ms[0], seed, 0))
}

fn exact_tail_sup_spec(model: &SeriesModel, spec: &InnovationSpec, offset: usize, m: usize, cap: EnumCap) -> Result<f64> {
    spec.require_enumerable()?;
    let total = offset + m;
    cap.check(total)?;
    model.check(spec.dim(), total)?;
    let means = means_indexed(1u64 << total, 1, |mask, out| {
        let z = spec.from_sign_mask(mask, total);
        out[0] = model.tail_sup(&z, offset, m);
    });
    Ok(means[0])
}

/// Monte Carlo estimate of `E sup_{n<=N} |S_n|` over replicas `0..replicas`.
pub fn mc_expected_sup(model: &SeriesModel, spec: &InnovationSpec, horizon: usize, replicas: u64, seed: u64) -> Result<McEstimate> {
    mc_tail_sup(model, spec, 0, horizon, replicas, seed)
}

/// Exact `E sup_{n<=N} |S_n|` under scalar Rademacher innovations.
pub fn exact_expected_sup(model: &SeriesModel, horizon: usize, cap: EnumCap) -> Result<f64> {
    exact_tail_sup_spec(model, &InnovationSpec::scalar(InnovationLaw::Rademacher), 0, horizon, cap)
}

/// Monte Carlo estimate of `E sup_{1<=l<=m} |X_{N+1} + ... + X_{N+l}|`.
pub fn tail_sup_estimate(
    model: &SeriesModel,
    spec: &InnovationSpec,
    offset: usize,
    m: usize,
    replicas: u64,
    seed: u64,
) -> Result<McEstimate> {
    if m == 0 {
        return Err(invalid("tail horizon m must be positive"));
    }
    mc_tail_sup(model, spec, offset, m, replicas, seed)
}

/// Exact tail supremum under enumerable Rademacher innovations.
pub fn exact_tail_sup(model: &SeriesModel, spec: &InnovationSpec, offset: usize, m: usize, cap: EnumCap) -> Result<f64> {
    if m == 0 {
        return Err(invalid("tail horizon m must be positive"));
    }
    exact_tail_sup_spec(model, spec, offset, m, cap)
}

fn sup_bound_report(
    model: &SeriesModel,
    spec: &InnovationSpec,
    offset: usize,
    m: usize,
    rhs: f64,
    method: Method,
) -> Result<BoundReport> {
    match method {
        Method::Exact(cap) => Ok(BoundReport::exact(exact_tail_sup_spec(model, spec, offset, m, cap)?, rhs)),
        Method::MonteCarlo { replicas, seed } => {
            let est = mc_tail_sup(model, spec, offset, m, replicas, seed)?;
            Ok(BoundReport::statistical(est.mean, est.std_error, rhs, None))
        }
    }
}

/// Checks `E sup_{n<=N} |S_n| <= levy_bound(N)`.
pub fn verify_levy(model: &SeriesModel, spec: &InnovationSpec, horizon: usize, method: Method) -> Result<BoundReport> {
    let rhs = model.levy_bound(horizon)?;
    sup_bound_report(model, spec, 0, horizon, rhs, method)
}

/// Checks `E sup_{l<=m} |S_{N+l} - S_N| <= 2 (A_N + B_N)` with inner cutoff `m`.
pub fn verify_tail(
    model: &SeriesModel,
    spec: &InnovationSpec,
    offset: usize,
    m: usize,
    method: Method,
) -> Result<(BoundReport, TailReport)> {
    if m == 0 {
        return Err(invalid("tail horizon m must be positive"));
    }
    let tails = model.tail_report(offset, m)?;
    Ok((sup_bound_report(model, spec, offset, m, tails.bound_rhs, method)?, tails))
}

/// The components `s_{n,N}` of the prefix-sum sequence `(S_1, ..., S_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    dim: usize,
    horizon: usize,
    components: Vec<Vec<f64>>,
}

impl Decomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Position `j` of component `n`, both 1-based.
    pub fn value(&self, n: usize, j: usize) -> &[f64] {
        &self.components[n - 1][(j - 1) * self.dim..j * self.dim]
    }

    /// `|s_{n,N}|_∞ = max_j |s_{n,N}(j)|`.
    pub fn max_norm(&self, n: usize) -> f64 {
        (1..=self.horizon).map(|j| norm(self.value(n, j))).fold(0.0, f64::max)
    }

    /// Elementwise `Σ_n s_{n,N}`, flat `N x dim`.
    pub fn sum(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.horizon * self.dim];
        for c in &self.components {
            for (o, x) in out.iter_mut().zip(c) {
                *o += x;
            }
        }
        out
    }
}

/// `s_{n,N}(j) = Σ_{k=1..j-n+1} a(n+k-1,k) Z_k` for `j >= n`, zero before.
pub fn prefix_decomposition(matrix: &CoefficientMatrix, z: &Innovations, horizon: usize) -> Result<Decomposition> {
    matrix.require_order(horizon, 1)?;
    if z.len() < horizon {
        return Err(Error::Dimension { expected: horizon, found: z.len() });
    }
    let zdim = z.dim();
    let complex = matrix.is_complex();
    let dim = if complex { 2 * zdim } else { zdim };
    let mut components = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let mut comp = vec![0.0; horizon * dim];
        let mut acc = vec![0.0; dim];
        for j in n..=horizon {
            let k = j - n + 1;
            let a = matrix.entry(j, k);
            for (i, x) in z.get(k).iter().enumerate() {
                acc[i] += a.re * x;
                if complex {
                    acc[zdim + i] += a.im * x;
                }
            }
            comp[(j - 1) * dim..j * dim].copy_from_slice(&acc);
        }
        components.push(comp);
    }
    Ok(Decomposition { dim, horizon, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::EntryLaw;

    fn example2() -> CoefficientMatrix {
        CoefficientMatrix::from_rows(&[vec![1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn hand_evaluated_path() {
        let p = build_path(&example2().into(), &Innovations::scalar(vec![1.0, 1.0]), 2).unwrap();
        assert_eq!(p.prefix_sum(1), &[1.0]);
        assert_eq!(p.prefix_sum(2), &[3.0]);
        assert_eq!((p.running_sup(1), p.running_sup(2)), (1.0, 3.0));
    }

    #[test]
    fn identity_reduces_to_random_walk() {
        let z = Innovations::scalar(vec![1.0, -1.0, -1.0, 1.0]);
        let p = build_path(&CoefficientMatrix::identity(4).into(), &z, 4).unwrap();
        let s: Vec<f64> = (1..=4).map(|n| p.prefix_sum(n)[0]).collect();
        assert_eq!(s, vec![1.0, 0.0, -1.0, 0.0]);
        for n in 1..=4 {
            assert_eq!(p.term(n), z.get(n));
        }
    }

    #[test]
    fn global_sign_flip_negates_prefix_sums() {
        let spec = InnovationSpec::scalar(InnovationLaw::Gaussian);
        let z = sample_innovations(&spec, 8, 3, 0);
        let m = CoefficientMatrix::power_decay(1.5, 8).unwrap();
        let p = build_path(&m.clone().into(), &z, 8).unwrap();
        let q = build_path(&SeriesModel::new(m).with_signs(SignPattern::constant(-1, 8).unwrap()), &z, 8).unwrap();
        for n in 1..=8 {
            assert_eq!(p.prefix_sum(n)[0], -q.prefix_sum(n)[0]);
            assert_eq!(p.running_sup(n), q.running_sup(n));
        }
    }

    #[test]
    fn weights_require_scalar_innovations() {
        let model = SeriesModel::new(CoefficientMatrix::identity(3))
            .with_weights(VectorWeights::axis_cycling(2, "unit", |_| 1.0).unwrap());
        let z = Innovations::from_flat(2, vec![0.0; 6]).unwrap();
        assert!(matches!(build_path(&model, &z, 3), Err(Error::Dimension { .. })));
        let z = Innovations::scalar(vec![1.0, 2.0, 3.0]);
        let p = build_path(&model, &z, 3).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.prefix_sum(3), &[4.0, 2.0]);
    }

    #[test]
    fn complex_coefficients_use_real_and_imaginary_blocks() {
        use num_complex::Complex64;
        let m = CoefficientMatrix::from_complex_rows(&[vec![Complex64::new(0.0, 1.0)]]).unwrap();
        let p = build_path(&m.into(), &Innovations::scalar(vec![2.0]), 1).unwrap();
        assert_eq!(p.prefix_sum(1), &[0.0, 2.0]);
        assert_eq!(p.sup(), 2.0);
    }

    #[test]
    fn exact_examples() {
        let cap = EnumCap::default();
        assert_eq!(exact_expected_sup(&example2().into(), 2, cap).unwrap(), 2.0);
        assert_eq!(exact_expected_sup(&CoefficientMatrix::identity(2).into(), 2, cap).unwrap(), 1.5);
        assert_eq!(exact_expected_sup(&CoefficientMatrix::zero(3).into(), 3, cap).unwrap(), 0.0);
    }

    #[test]
    fn rademacher_single_term_is_exactly_one() {
        let spec = InnovationSpec::scalar(InnovationLaw::Rademacher);
        let est = mc_expected_sup(&CoefficientMatrix::identity(1).into(), &spec, 1, 100, 9).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert_eq!(est.streams, (0, 100));
    }

    #[test]
    fn example_matrix_mc_mean_near_two() {
        let spec = InnovationSpec::scalar(InnovationLaw::Rademacher);
        let est = mc_expected_sup(&example2().into(), &spec, 2, 100_000, 1).unwrap();
        assert!((est.mean - 2.0).abs() < 3.0 * est.std_error, "{est:?}");
    }

    #[test]
    fn verify_levy_examples() {
        let rep = verify_levy(&example2().into(), &InnovationSpec::default(), 2, Method::exact()).unwrap();
        assert_eq!(rep.lhs, 2.0);
        assert!((rep.rhs - 2.0 * (2f64.sqrt() + 1.0)).abs() < 1e-14);
        assert_eq!(rep.verdict, crate::Verdict::Pass);
        let zero = verify_levy(&CoefficientMatrix::zero(4).into(), &InnovationSpec::default(), 4, Method::exact()).unwrap();
        assert_eq!((zero.lhs, zero.rhs, zero.margin), (0.0, 0.0, 0.0));
        assert_eq!(zero.verdict, crate::Verdict::Pass);
    }

    #[test]
    fn too_few_replicas_rejected() {
        let spec = InnovationSpec::default();
        assert!(mc_expected_sup(&CoefficientMatrix::identity(2).into(), &spec, 2, 1, 0).is_err());
    }

    #[test]
    fn decomposition_matches_small_display() {
        let d = prefix_decomposition(&example2(), &Innovations::scalar(vec![1.0, 1.0]), 2).unwrap();
        assert_eq!((d.value(1, 1), d.value(1, 2)), (&[1.0][..], &[2.0][..]));
        assert_eq!((d.value(2, 1), d.value(2, 2)), (&[0.0][..], &[1.0][..]));
        assert_eq!(d.sum(), vec![1.0, 3.0]);
    }

    #[test]
    fn diagonal_decomposition_has_single_component() {
        let z = sample_innovations(&InnovationSpec::scalar(InnovationLaw::Gaussian), 6, 2, 0);
        let d = prefix_decomposition(&CoefficientMatrix::diagonal(EntryLaw::Harmonic, 6), &z, 6).unwrap();
        for n in 2..=6 {
            assert_eq!(d.max_norm(n), 0.0);
        }
    }

    #[test]
    fn tail_with_zero_offset_is_the_plain_supremum() {
        let spec = InnovationSpec::scalar(InnovationLaw::Gaussian);
        let model: SeriesModel = CoefficientMatrix::power_decay(2.0, 30).unwrap().into();
        let a = mc_expected_sup(&model, &spec, 12, 500, 4).unwrap();
        let b = tail_sup_estimate(&model, &spec, 0, 12, 500, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collinear_tail_sup_is_the_direct_sum() {
        let m = CoefficientMatrix::collinear(EntryLaw::Geometric, 40);
        let exact = exact_tail_sup(&m.clone().into(), &InnovationSpec::default(), 10, 10, EnumCap::default()).unwrap();
        let direct: f64 = (11..=20).map(|n| 0.5f64.powi(n)).sum();
        assert!((exact - direct).abs() < 1e-16);
        let (rep, tails) = verify_tail(&m.into(), &InnovationSpec::default(), 10, 10, Method::exact()).unwrap();
        assert_eq!(tails.a, 0.0);
        assert_eq!(rep.verdict, crate::Verdict::Pass);
        assert!(rep.lhs <= tails.bound_rhs);
    }
}

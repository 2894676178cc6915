//! Predictable random coefficients: `a(n,k)` may depend on `Z_1..Z_{k-1}`.
//!
//! Predictability is structural. A rule only ever sees a [`Past`] holding the
//! first `k-1` innovations, and `Past` cannot be built outside this crate:
//!
//! ```compile_fail
//! use hsl_core::adaptive::Past;
//! let z = [1.0, -1.0, 1.0];
//! let past = Past { values: &z, dim: 1 };
//! ```

use std::fmt;
use std::sync::Arc;

use crate::coeffs::{self, diagonal_square_sum, CoefficientMatrix, EntryLaw, Support, TailPolicy};
use crate::error::{Error, Result};
use crate::innovations::{InnovationLaw, InnovationSpec, Innovations, Outcomes};
use crate::simulate::{build_path, norm, SeriesModel, SeriesPath};
use crate::stats::{means_indexed, moments_indexed, BoundReport, McEstimate, Method, Moments};
use crate::sum::CompensatedSum;

/// The innovations `Z_1..Z_{k-1}` visible when evaluating column `k`.
#[derive(Debug, Clone, Copy)]
pub struct Past<'a> {
    values: &'a [f64],
    dim: usize,
}

impl<'a> Past<'a> {
    fn new(z: &'a Innovations, visible: usize) -> Self {
        Self { values: &z.as_flat()[..visible * z.dim()], dim: z.dim() }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Z_j`, 1-based, `j <= len()`.
    pub fn get(&self, j: usize) -> &'a [f64] {
        &self.values[(j - 1) * self.dim..j * self.dim]
    }

    pub fn last(&self) -> Option<&'a [f64]> {
        (!self.is_empty()).then(|| self.get(self.len()))
    }
}

type CoeffFn = dyn Fn(usize, usize, &Past<'_>) -> f64 + Send + Sync;
type EntryFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// Rule `(n, k, Z_1..Z_{k-1}) -> a(n,k)`.
#[derive(Clone)]
pub struct PredictableRule {
    label: String,
    order: usize,
    support: Support,
    coeff: Arc<CoeffFn>,
    envelope: Option<Arc<EntryFn>>,
    rms: Option<Arc<EntryFn>>,
    rms_law: Option<InnovationLaw>,
}

impl fmt::Debug for PredictableRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PredictableRule")
            .field("label", &self.label)
            .field("order", &self.order)
            .field("support", &self.support)
            .field("envelope", &self.envelope.is_some())
            .field("closed_form_moments", &self.rms.is_some())
            .finish()
    }
}

fn coordinate_sum(z: &[f64]) -> f64 {
    z.iter().sum()
}

/// `E clamp(Z,-1,1)^2` for a unit-variance scalar law.
fn clamped_second_moment(law: InnovationLaw) -> f64 {
    const PHI_AT_ONE: f64 = 0.241_970_724_519_143_37;
    match law {
        InnovationLaw::Rademacher => 1.0,
        InnovationLaw::Uniform => 1.0 - 2.0 / (3.0 * 3f64.sqrt()),
        InnovationLaw::Gaussian => 1.0 - 2.0 * PHI_AT_ONE,
    }
}

impl PredictableRule {
    pub fn new<F>(label: impl Into<String>, order: usize, support: Support, coeff: F) -> Self
    where
        F: Fn(usize, usize, &Past<'_>) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            order,
            support,
            coeff: Arc::new(coeff),
            envelope: None,
            rms: None,
            rms_law: None,
        }
    }

    /// Declares `env(n,k) >= |a(n,k)|` for every history.
    pub fn with_envelope<F>(mut self, env: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        self.envelope = Some(Arc::new(env));
        self
    }

    /// Declares the closed form `(E|a(n,k)|^2)^(1/2)`, valid for every
    /// innovation law when `law` is `None`, else only for scalar `law`.
    pub fn with_rms<F>(mut self, rms: F, law: Option<InnovationLaw>) -> Self
    where
        F: Fn(usize, usize) -> f64 + Send + Sync + 'static,
    {
        self.rms = Some(Arc::new(rms));
        self.rms_law = law;
        self
    }

    /// Deterministic coefficients; complex matrices are rejected.
    pub fn constant(matrix: CoefficientMatrix) -> Result<Self> {
        if matrix.is_complex() {
            return Err(Error::Unsupported("predictable rules take real coefficients".into()));
        }
        let (a, e, r) = (matrix.clone(), matrix.clone(), matrix.clone());
        Ok(Self::new(format!("constant:{}", matrix.label()), matrix.order(), matrix.support(), move |n, k, _| {
            a.entry(n, k).re
        })
        .with_envelope(move |n, k| e.entry(n, k).re.abs())
        .with_rms(move |n, k| r.entry(n, k).re.abs(), None))
    }

    /// `a(n,1) = s(n)`, `a(n,k) = sign(Σ coords Z_{k-1}) s(n)`; `sign(0) = +1`.
    pub fn sign_of_previous(scale: EntryLaw, order: usize) -> Self {
        Self::new(format!("sign-prev:{}", scale.name()), order, Support::Full, move |n, _, past| {
            let s = scale.value(n);
            match past.last() {
                Some(z) if coordinate_sum(z) < 0.0 => -s,
                _ => s,
            }
        })
        .with_envelope(move |n, _| scale.value(n).abs())
        .with_rms(move |n, _| scale.value(n).abs(), None)
    }

    /// `a(n,1) = s(n)`, `a(n,k) = clamp(Σ coords Z_{k-1}, -1, 1) s(n)`.
    /// Second moments are closed-form for scalar innovations of law `law`.
    pub fn clamp_of_previous(scale: EntryLaw, law: InnovationLaw, order: usize) -> Self {
        let c = clamped_second_moment(law).sqrt();
        Self::new(format!("clamp-prev:{}", scale.name()), order, Support::Full, move |n, _, past| {
            let s = scale.value(n);
            past.last().map_or(s, |z| coordinate_sum(z).clamp(-1.0, 1.0) * s)
        })
        .with_envelope(move |n, _| scale.value(n).abs())
        .with_rms(move |n, k| if k == 1 { scale.value(n).abs() } else { c * scale.value(n).abs() }, Some(law))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn has_envelope(&self) -> bool {
        self.envelope.is_some()
    }

    /// Whether closed-form second moments apply under `spec`.
    pub fn has_closed_form(&self, spec: &InnovationSpec) -> bool {
        self.rms.is_some() && self.rms_law.is_none_or(|law| spec.dim() == 1 && spec.law() == law)
    }

    /// Coefficients of one realization, rows `1..=rows`; column `k` is
    /// evaluated on exactly `Z_1..Z_{k-1}`.
    pub fn realize(&self, z: &Innovations, rows: usize) -> Result<CoefficientMatrix> {
        if rows > self.order {
            return Err(Error::Truncation { n: rows, k: 1, order: self.order });
        }
        if z.len() + 1 < rows {
            return Err(Error::Dimension { expected: rows - 1, found: z.len() });
        }
        let mut table = Vec::with_capacity(rows);
        for n in 1..=rows {
            let mut row = vec![0.0; n];
            for k in self.support.columns(n) {
                row[k - 1] = (self.coeff)(n, k, &Past::new(z, k - 1));
            }
            table.push(row);
        }
        Ok(CoefficientMatrix::from_rows(&table)?.with_support(self.support).with_label(self.label.clone()))
    }

    fn deterministic(&self, f: &Arc<EntryFn>, label: &str) -> CoefficientMatrix {
        let f = f.clone();
        CoefficientMatrix::from_fn(self.order, self.support, format!("{}|{label}", self.label), move |n, k| f(n, k))
    }

    fn envelope_matrix(&self) -> Option<CoefficientMatrix> {
        self.envelope.as_ref().map(|f| self.deterministic(f, "envelope"))
    }

    fn rms_matrix(&self, spec: &InnovationSpec) -> Option<CoefficientMatrix> {
        if !self.has_closed_form(spec) {
            return None;
        }
        self.rms.as_ref().map(|f| self.deterministic(f, "rms"))
    }
}

/// One realization of the predictable series.
pub fn simulate_predictable(
    rule: &PredictableRule,
    spec: &InnovationSpec,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> Result<SeriesPath> {
    let z = crate::innovations::sample_innovations(spec, horizon, seed, stream);
    build_path(&SeriesModel::new(rule.realize(&z, horizon)?), &z, horizon)
}

/// Outer sum `Σ_d sqrt(mean_d)` with compensated summation.
fn root_sum(means: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    means.iter().for_each(|m| acc.add(m.sqrt()));
    acc.value()
}

/// Plug-in estimate of `Σ_{d<=N} (Σ_{k<=inner(d)} E|a(d+k-1,k)|^2)^(1/2)` with
/// a delta-method standard error.
fn square_profile_estimate<I>(rule: &PredictableRule, outcomes: &Outcomes, rows: usize, outer: usize, inner: I) -> Result<(f64, f64)>
where
    I: Fn(usize) -> usize + Sync,
{
    rule.realize(&outcomes.get(0), rows)?;
    let squares = |i: u64, out: &mut [f64]| {
        let a = rule.realize(&outcomes.get(i), rows).expect("validated realization");
        for d in 1..=outer {
            out[d - 1] = diagonal_square_sum(&a, None, d, 1, inner(d)).0;
        }
    };
    if outcomes.is_exact() {
        return Ok((root_sum(&means_indexed(outcomes.len(), outer, squares)), 0.0));
    }
    let ms = moments_indexed(outcomes.len(), outer, squares);
    let means: Vec<f64> = ms.iter().map(Moments::mean).collect();
    let value = root_sum(&means);
    let grad: Vec<f64> = ms.iter().map(|m| if m.mean() > 0.0 { 0.5 / m.mean().sqrt() } else { 0.0 }).collect();
    let lin = moments_indexed(outcomes.len(), 1, |i, out| {
        let mut q = vec![0.0; outer];
        squares(i, &mut q);
        out[0] = q.iter().zip(&grad).map(|(q, g)| q * g).sum();
    });
    Ok((value, lin[0].std_error()))
}

/// Expected-square criterion estimate and its deterministic envelope bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareCriterion {
    pub value: McEstimate,
    pub envelope_value: Option<f64>,
    /// Closed-form value when the rule declares second moments for this spec.
    pub closed_form: Option<f64>,
}

/// `Σ_{n<=N} (Σ_{k<=K} E|a(n+k-1,k)|^2)^(1/2)` estimated over replicas.
pub fn expected_square_criterion(
    rule: &PredictableRule,
    spec: &InnovationSpec,
    outer: usize,
    inner: usize,
    replicas: u64,
    seed: u64,
) -> Result<SquareCriterion> {
    if outer == 0 || inner == 0 {
        return Err(crate::error::invalid("criterion cutoffs N and K must be positive"));
    }
    let rows = outer + inner - 1;
    let outcomes = Outcomes::new(spec, rows, Method::monte_carlo(replicas, seed))?;
    let (mean, std_error) = square_profile_estimate(rule, &outcomes, rows, outer, |_| inner)?;
    let value = McEstimate { mean, std_error, replicas, seed, streams: (0, replicas) };
    let criterion = |m: Option<CoefficientMatrix>| -> Result<Option<f64>> {
        m.map(|m| coeffs::criterion_sum(&m, outer, inner, TailPolicy::None).map(|p| p.value())).transpose()
    };
    Ok(SquareCriterion {
        value,
        envelope_value: criterion(rule.envelope_matrix())?,
        closed_form: criterion(rule.rms_matrix(spec))?,
    })
}

/// Where the right-hand side of [`martingale_bound`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    ClosedForm,
    Enumeration,
    /// Estimated on streams disjoint from the left-hand side.
    MonteCarlo,
}

impl MomentSource {
    pub fn label(&self) -> &'static str {
        match self {
            MomentSource::ClosedForm => "closed-form",
            MomentSource::Enumeration => "enumeration",
            MomentSource::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleReport {
    pub bound: BoundReport,
    pub rhs_source: MomentSource,
    /// `2 Σ_n (Σ_k env^2)^(1/2)`, an upper bound on the rhs.
    pub envelope_rhs: Option<f64>,
}

/// Checks `E sup_{n<=N} |S_n| <= 2 Σ_n (Σ_{k<=N-n+1} E|a(n+k-1,k)|^2)^(1/2)`.
pub fn martingale_bound(rule: &PredictableRule, spec: &InnovationSpec, horizon: usize, method: Method) -> Result<MartingaleReport> {
    if horizon == 0 {
        return Err(crate::error::invalid("horizon must be positive"));
    }
    let outcomes = Outcomes::new(spec, horizon, method)?;
    rule.realize(&outcomes.get(0), horizon)?;
    let sup_of = |i: u64, out: &mut [f64]| {
        let z = outcomes.get(i);
        let a = rule.realize(&z, horizon).expect("validated realization");
        out[0] = SeriesModel::new(a).tail_sup(&z, 0, horizon);
    };
    let lhs = if outcomes.is_exact() {
        None
    } else {
        Some(moments_indexed(outcomes.len(), 1, sup_of).swap_remove(0))
    };

    let envelope_rhs = rule.envelope_matrix().map(|m| coeffs::levy_bound(&m, horizon)).transpose()?;
    let (rhs, rhs_se, source) = match rule.rms_matrix(spec) {
        Some(m) => (coeffs::levy_bound(&m, horizon)?, None, MomentSource::ClosedForm),
        None => {
            let inner = |d: usize| horizon - d + 1;
            if outcomes.is_exact() {
                let (v, _) = square_profile_estimate(rule, &outcomes, horizon, horizon, inner)?;
                (2.0 * v, None, MomentSource::Enumeration)
            } else {
                let shifted = outcomes.shifted(outcomes.len());
                let (v, se) = square_profile_estimate(rule, &shifted, horizon, horizon, inner)?;
                (2.0 * v, Some(2.0 * se), MomentSource::MonteCarlo)
            }
        }
    };
    let bound = match lhs {
        None => BoundReport::exact(means_indexed(outcomes.len(), 1, sup_of)[0], rhs),
        Some(lhs) => BoundReport::statistical(lhs.mean(), lhs.std_error(), rhs, rhs_se),
    };
    Ok(MartingaleReport { bound, rhs_source: source, envelope_rhs })
}

/// `E sup_{j<=m} |M_j|^2 <= 4 E |M_m|^2` for the martingale
/// `M_j = Σ_{i<=j} a(n+i-1,i) Z_i` behind component `n`, `m = N-n+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoobReport {
    pub component: usize,
    pub steps: usize,
    pub bound: BoundReport,
}

/// Doob check for every component `n = 1..=N`.
pub fn doob_components(rule: &PredictableRule, spec: &InnovationSpec, horizon: usize, method: Method) -> Result<Vec<DoobReport>> {
    if horizon == 0 {
        return Err(crate::error::invalid("horizon must be positive"));
    }
    let outcomes = Outcomes::new(spec, horizon, method)?;
    rule.realize(&outcomes.get(0), horizon)?;
    let sample = |i: u64, out: &mut [f64]| {
        let z = outcomes.get(i);
        let a = rule.realize(&z, horizon).expect("validated realization");
        let mut m = vec![0.0; z.dim()];
        for n in 1..=horizon {
            m.fill(0.0);
            let mut sup_sq = 0.0f64;
            for k in 1..=horizon - n + 1 {
                let c = a.entry(n + k - 1, k).re;
                for (mi, zi) in m.iter_mut().zip(z.get(k)) {
                    *mi += c * zi;
                }
                sup_sq = sup_sq.max(norm(&m).powi(2));
            }
            let last_sq = norm(&m).powi(2);
            out[3 * (n - 1)] = sup_sq;
            out[3 * (n - 1) + 1] = last_sq;
            out[3 * (n - 1) + 2] = sup_sq - 4.0 * last_sq;
        }
    };
    let component = |n: usize, bound| DoobReport { component: n, steps: horizon - n + 1, bound };
    if outcomes.is_exact() {
        let v = means_indexed(outcomes.len(), 3 * horizon, sample);
        return Ok((1..=horizon)
            .map(|n| component(n, BoundReport::exact(v[3 * (n - 1)], 4.0 * v[3 * (n - 1) + 1])))
            .collect());
    }
    let ms = moments_indexed(outcomes.len(), 3 * horizon, sample);
    Ok((1..=horizon)
        .map(|n| {
            let (sup, last, diff) = (&ms[3 * (n - 1)], &ms[3 * (n - 1) + 1], &ms[3 * (n - 1) + 2]);
            let bound =
                BoundReport::paired(sup.mean(), sup.std_error(), 4.0 * last.mean(), 4.0 * last.std_error(), diff.std_error());
            component(n, bound)
        })
        .collect())
}

/// Doob check for component `n`.
pub fn doob_check(component: usize, rule: &PredictableRule, spec: &InnovationSpec, horizon: usize, method: Method) -> Result<DoobReport> {
    if component == 0 || component > horizon {
        return Err(crate::error::invalid(format!("component {component} outside 1..={horizon}")));
    }
    Ok(doob_components(rule, spec, horizon, method)?.swap_remove(component - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::innovations::sample_innovations;
    use crate::simulate::{mc_expected_sup, verify_levy};
    use crate::Verdict;

    #[test]
    fn rule_sees_exactly_k_minus_one_innovations() {
        let rule = PredictableRule::new("probe", 6, Support::Full, |_, k, past| {
            assert_eq!(past.len(), k - 1);
            past.len() as f64
        });
        let z = sample_innovations(&InnovationSpec::scalar(InnovationLaw::Gaussian), 6, 1, 0);
        let a = rule.realize(&z, 6).unwrap();
        assert_eq!(a.get_re(6, 4).unwrap(), 3.0);
    }

    #[test]
    fn realized_coefficients_ignore_future_innovations() {
        let rule = PredictableRule::clamp_of_previous(EntryLaw::Geometric, InnovationLaw::Gaussian, 8);
        let spec = InnovationSpec::scalar(InnovationLaw::Gaussian);
        let z = sample_innovations(&spec, 8, 5, 0);
        let a = rule.realize(&z, 8).unwrap();
        let mut perturbed = z.as_flat().to_vec();
        perturbed[4] += 10.0;
        let b = rule.realize(&Innovations::scalar(perturbed), 8).unwrap();
        for n in 1..=8 {
            for k in 1..=5.min(n) {
                assert_eq!(a.get(n, k).unwrap(), b.get(n, k).unwrap());
            }
        }
    }

    #[test]
    fn constant_rule_path_matches_build_path() {
        let m = CoefficientMatrix::power_decay(1.2, 10).unwrap();
        let rule = PredictableRule::constant(m.clone()).unwrap();
        let spec = InnovationSpec::scalar(InnovationLaw::Uniform);
        let p = simulate_predictable(&rule, &spec, 10, 3, 7).unwrap();
        let q = build_path(&m.into(), &sample_innovations(&spec, 10, 3, 7), 10).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn complex_constant_rule_rejected() {
        use num_complex::Complex64;
        let m = CoefficientMatrix::from_complex_rows(&[vec![Complex64::new(0.0, 1.0)]]).unwrap();
        assert!(matches!(PredictableRule::constant(m), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sign_rule_has_deterministic_moduli() {
        let rule = PredictableRule::sign_of_previous(EntryLaw::InverseSquare, 12);
        let z = sample_innovations(&InnovationSpec::default(), 12, 2, 0);
        let a = rule.realize(&z, 12).unwrap();
        for n in 1..=12 {
            for k in 1..=n {
                assert_eq!(a.get_re(n, k).unwrap().abs(), 1.0 / (n * n) as f64);
            }
        }
    }

    #[test]
    fn clamp_rule_stays_within_envelope() {
        let rule = PredictableRule::clamp_of_previous(EntryLaw::Geometric, InnovationLaw::Gaussian, 10);
        let z = sample_innovations(&InnovationSpec::scalar(InnovationLaw::Gaussian), 10, 4, 0);
        let a = rule.realize(&z, 10).unwrap();
        for n in 1..=10 {
            for k in 1..=n {
                assert!(a.get_re(n, k).unwrap().abs() <= 0.5f64.powi(n as i32));
            }
        }
    }

    #[test]
    fn constant_rule_square_criterion_is_exact() {
        let m = CoefficientMatrix::power_decay(2.0, 40).unwrap();
        let rule = PredictableRule::constant(m.clone()).unwrap();
        let r = expected_square_criterion(&rule, &InnovationSpec::default(), 10, 20, 50, 1).unwrap();
        let direct = coeffs::criterion_sum(&m, 10, 20, TailPolicy::None).unwrap().value();
        assert_eq!(r.value.mean, direct);
        assert_eq!(r.value.std_error, 0.0);
        assert_eq!(r.closed_form, Some(direct));
    }

    #[test]
    fn sign_rule_square_criterion_matches_profile() {
        let rule = PredictableRule::sign_of_previous(EntryLaw::InverseSquare, 40);
        let r = expected_square_criterion(&rule, &InnovationSpec::default(), 10, 20, 50, 1).unwrap();
        let profile = CoefficientMatrix::from_fn(40, Support::Full, "n^-2", |n, _| 1.0 / (n * n) as f64);
        let direct = coeffs::criterion_sum(&profile, 10, 20, TailPolicy::None).unwrap().value();
        assert!((r.value.mean - direct).abs() <= 1e-15 * direct);
        assert_eq!(r.value.std_error, 0.0);
    }

    #[test]
    fn clamp_rule_square_criterion_below_envelope() {
        let spec = InnovationSpec::scalar(InnovationLaw::Gaussian);
        let rule = PredictableRule::clamp_of_previous(EntryLaw::Harmonic, InnovationLaw::Gaussian, 40);
        let r = expected_square_criterion(&rule, &spec, 10, 20, 20_000, 3).unwrap();
        let env = r.envelope_value.unwrap();
        assert!(r.value.mean <= env);
        let closed = r.closed_form.unwrap();
        assert!((r.value.mean - closed).abs() < 4.0 * r.value.std_error, "{r:?}");
    }

    #[test]
    fn clamped_moments_match_sampling() {
        for law in [InnovationLaw::Gaussian, InnovationLaw::Uniform] {
            let z = sample_innovations(&InnovationSpec::scalar(law), 400_000, 11, 0);
            let m: f64 = z.as_flat().iter().map(|x| x.clamp(-1.0, 1.0).powi(2)).sum::<f64>() / 400_000.0;
            assert!((m - clamped_second_moment(law)).abs() < 3e-3, "{law}: {m}");
        }
    }

    #[test]
    fn constant_rule_reduces_to_levy() {
        let m = CoefficientMatrix::power_decay(1.0, 8).unwrap();
        let rule = PredictableRule::constant(m.clone()).unwrap();
        let spec = InnovationSpec::default();
        let a = martingale_bound(&rule, &spec, 8, Method::exact()).unwrap();
        let b = verify_levy(&m.clone().into(), &spec, 8, Method::exact()).unwrap();
        assert_eq!(a.bound, b);
        let a = martingale_bound(&rule, &spec, 8, Method::monte_carlo(300, 5)).unwrap();
        let b = verify_levy(&m.clone().into(), &spec, 8, Method::monte_carlo(300, 5)).unwrap();
        assert_eq!(a.bound, b);
        let est = mc_expected_sup(&m.into(), &spec, 8, 300, 5).unwrap();
        assert_eq!(a.bound.lhs, est.mean);
    }

    #[test]
    fn sign_rule_exact_martingale_bound() {
        let rule = PredictableRule::sign_of_previous(EntryLaw::InverseSquare, 10);
        let r = martingale_bound(&rule, &InnovationSpec::default(), 10, Method::exact()).unwrap();
        assert_eq!(r.rhs_source, MomentSource::ClosedForm);
        assert_eq!(r.bound.verdict, Verdict::Pass);
    }

    #[test]
    fn enumerated_moments_agree_with_closed_form() {
        let closed = PredictableRule::clamp_of_previous(EntryLaw::Harmonic, InnovationLaw::Rademacher, 8);
        let bare = PredictableRule::new("bare", 8, Support::Full, move |n, k, p| {
            let s = 1.0 / n as f64;
            if k == 1 { s } else { p.last().unwrap()[0].clamp(-1.0, 1.0) * s }
        });
        let spec = InnovationSpec::default();
        let a = martingale_bound(&closed, &spec, 8, Method::exact()).unwrap();
        let b = martingale_bound(&bare, &spec, 8, Method::exact()).unwrap();
        assert_eq!(b.rhs_source, MomentSource::Enumeration);
        assert!((a.bound.rhs - b.bound.rhs).abs() < 1e-12);
        assert_eq!(a.bound.lhs, b.bound.lhs);
    }

    #[test]
    fn unknown_moments_use_disjoint_streams() {
        let spec = InnovationSpec::scalar(InnovationLaw::Uniform);
        let rule = PredictableRule::new("bare", 6, Support::Full, |n, k, p| {
            if k == 1 { 1.0 } else { p.last().unwrap()[0].clamp(-1.0, 1.0) / n as f64 }
        });
        let r = martingale_bound(&rule, &spec, 6, Method::monte_carlo(4000, 8)).unwrap();
        assert_eq!(r.rhs_source, MomentSource::MonteCarlo);
        assert!(r.bound.rhs_se.unwrap() > 0.0);
        assert_eq!(r.bound.verdict, Verdict::Pass);
    }

    #[test]
    fn zero_rule_bound_is_trivial() {
        let rule = PredictableRule::constant(CoefficientMatrix::zero(6)).unwrap();
        let r = martingale_bound(&rule, &InnovationSpec::default(), 6, Method::exact()).unwrap();
        assert_eq!((r.bound.lhs, r.bound.rhs), (0.0, 0.0));
        assert_eq!(r.bound.verdict, Verdict::Pass);
    }

    #[test]
    fn single_term_component_has_unit_ratio() {
        let rule = PredictableRule::constant(CoefficientMatrix::ones(5)).unwrap();
        let r = doob_check(5, &rule, &InnovationSpec::default(), 5, Method::exact()).unwrap();
        assert_eq!(r.steps, 1);
        assert_eq!(r.bound.lhs * 4.0, r.bound.rhs);
    }

    #[test]
    fn doob_exact_for_sign_rule() {
        let rule = PredictableRule::sign_of_previous(EntryLaw::Harmonic, 8);
        for r in doob_components(&rule, &InnovationSpec::default(), 8, Method::exact()).unwrap() {
            assert_eq!(r.bound.verdict, Verdict::Pass, "{r:?}");
        }
    }

    #[test]
    fn doob_monte_carlo_passes() {
        let spec = InnovationSpec::scalar(InnovationLaw::Gaussian);
        let rule = PredictableRule::constant(CoefficientMatrix::ones(6)).unwrap();
        for r in doob_components(&rule, &spec, 6, Method::monte_carlo(5000, 2)).unwrap() {
            assert_ne!(r.bound.verdict, Verdict::Fail, "{r:?}");
        }
    }

    #[test]
    fn component_index_validated() {
        let rule = PredictableRule::constant(CoefficientMatrix::ones(3)).unwrap();
        assert!(doob_check(0, &rule, &InnovationSpec::default(), 3, Method::exact()).is_err());
        assert!(doob_check(4, &rule, &InnovationSpec::default(), 3, Method::exact()).is_err());
    }
}

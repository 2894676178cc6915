//! First-crossing times `τ_r`, the flipped series `T_n = Σ ζ_i X_i`, the
//! stopping-time inequality and the fourth-moment diagnostics.

use crate::error::{invalid, Result};
use crate::innovations::{InnovationSpec, Outcomes};
use crate::simulate::{build_path, norm, SeriesModel, SeriesPath};
use crate::stats::{means_indexed, moments_indexed, reduce_indexed, Accumulator, Method, Verdict, SE_MARGIN};

/// Relative tolerance of the crossing identity `S_N + T_N = 2 S_τ`.
pub const IDENTITY_RTOL: f64 = 1e-12;

/// `min { n : |S_n| > r }` over the given norms, `None` for `min ∅ = ∞`.
pub fn crossing_index(norms: &[f64], level: f64) -> Option<usize> {
    norms.iter().position(|&s| s > level).map(|i| i + 1)
}

/// `ζ_n = +1` iff `τ >= n`.
pub fn zeta_signs(tau: Option<usize>, horizon: usize) -> Vec<i8> {
    (1..=horizon).map(|n| if tau.is_none_or(|t| t >= n) { 1 } else { -1 }).collect()
}

/// Stopping data of one path at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRecord {
    level: f64,
    tau: Option<usize>,
    zeta: Vec<i8>,
    dim: usize,
    flipped: Vec<f64>,
}

impl StoppingRecord {
    pub fn level(&self) -> f64 {
        self.level
    }

    /// `τ_r`; `None` when the path never crosses.
    pub fn tau(&self) -> Option<usize> {
        self.tau
    }

    pub fn zeta(&self) -> &[i8] {
        &self.zeta
    }

    pub fn horizon(&self) -> usize {
        self.zeta.len()
    }

    /// `T_n`, 1-based.
    pub fn flipped_sum(&self, n: usize) -> &[f64] {
        &self.flipped[(n - 1) * self.dim..n * self.dim]
    }

    pub fn terminal_flipped(&self) -> &[f64] {
        self.flipped_sum(self.horizon())
    }
}

/// Builds `τ_r`, `ζ` and `T` for `path`; `r` must be positive.
pub fn first_crossing(path: &SeriesPath, level: f64) -> Result<StoppingRecord> {
    if !(level > 0.0) {
        return Err(invalid(format!("crossing level must be positive, got {level}")));
    }
    let horizon = path.horizon();
    let dim = path.dim();
    let tau = crossing_index(&path.prefix_norms(), level);
    let zeta = zeta_signs(tau, horizon);
    let mut flipped = vec![0.0; horizon * dim];
    let mut acc = vec![0.0; dim];
    for n in 1..=horizon {
        let z = f64::from(zeta[n - 1]);
        for (a, x) in acc.iter_mut().zip(path.term(n)) {
            *a += z * x;
        }
        flipped[(n - 1) * dim..n * dim].copy_from_slice(&acc);
    }
    Ok(StoppingRecord { level, tau, zeta, dim, flipped })
}

/// `max_i |S_N + T_N - 2 S_τ|_i` scaled by `1 + |S|`-type magnitude; `None`
/// when `τ = ∞`.
pub fn crossing_identity_residual(path: &SeriesPath, record: &StoppingRecord) -> Option<f64> {
    let tau = record.tau?;
    let s_n = path.prefix_sum(path.horizon());
    let s_tau = path.prefix_sum(tau);
    let scale = 1.0 + norm(s_n) + norm(s_tau);
    let worst = s_n
        .iter()
        .zip(record.terminal_flipped())
        .zip(s_tau)
        .map(|((s, t), st)| (s + t - 2.0 * st).abs())
        .fold(0.0, f64::max);
    Some(worst / scale)
}

/// `P(sup_n |S_n| > r) <= P(|S_N| > r) + P(|T_N| > r)` at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingReport {
    pub level: f64,
    pub p_sup: f64,
    pub p_terminal: f64,
    pub p_flipped: f64,
    /// Standard error of the paired difference of indicators (Monte Carlo).
    pub diff_se: Option<f64>,
    /// Outcomes with `τ <= N` and outcomes where the crossing identity failed
    /// (exact mode only).
    pub crossed: Option<u64>,
    pub identity_failures: Option<u64>,
    pub method: &'static str,
    pub verdict: Verdict,
}

impl StoppingReport {
    pub fn lhs(&self) -> f64 {
        self.p_sup
    }

    pub fn rhs(&self) -> f64 {
        self.p_terminal + self.p_flipped
    }

    pub fn margin(&self) -> f64 {
        self.rhs() - self.lhs()
    }
}

/// `(sup event, |S_N| > r, |T_N| > r, identity holds)` for every level.
fn level_events(path: &SeriesPath, levels: &[f64], mut emit: impl FnMut(usize, bool, bool, bool, Option<bool>)) {
    let horizon = path.horizon();
    let s_norm = path.prefix_norm(horizon);
    for (i, &r) in levels.iter().enumerate() {
        let rec = first_crossing(path, r).expect("levels validated");
        let identity = crossing_identity_residual(path, &rec).map(|res| {
            let both = norm(&path
                .prefix_sum(horizon)
                .iter()
                .zip(rec.terminal_flipped())
                .map(|(s, t)| s + t)
                .collect::<Vec<_>>());
            res <= IDENTITY_RTOL && both > 2.0 * r * (1.0 - IDENTITY_RTOL)
        });
        emit(i, path.sup() > r, s_norm > r, norm(rec.terminal_flipped()) > r, identity);
    }
}

#[derive(Debug, Clone, Default)]
struct Counts(Vec<u64>);

impl Accumulator for Counts {
    fn absorb(&mut self, later: Self) {
        self.0.absorb(later.0);
    }
}

/// Checks the stopping-time inequality for each level of `levels`.
pub fn verify_stopping_inequality(
    model: &SeriesModel,
    spec: &InnovationSpec,
    horizon: usize,
    levels: &[f64],
    method: Method,
) -> Result<Vec<StoppingReport>> {
    if let Some(bad) = levels.iter().find(|r| !(**r > 0.0)) {
        return Err(invalid(format!("crossing level must be positive, got {bad}")));
    }
    model.check(spec.dim(), horizon)?;
    let outcomes = Outcomes::new(spec, horizon, method)?;
    let path_of = |i: u64| build_path(model, &outcomes.get(i), horizon).expect("validated model");
    let width = levels.len();
    if outcomes.is_exact() {
        let counts = reduce_indexed(
            outcomes.len(),
            || Counts(vec![0; 5 * width]),
            |i, acc: &mut Counts| {
                level_events(&path_of(i), levels, |l, sup, s, t, identity| {
                    let c = &mut acc.0[5 * l..5 * l + 5];
                    c[0] += u64::from(sup);
                    c[1] += u64::from(s);
                    c[2] += u64::from(t);
                    if let Some(ok) = identity {
                        c[3] += 1;
                        c[4] += u64::from(!ok);
                    }
                })
            },
        );
        let total = outcomes.len() as f64;
        return Ok(levels
            .iter()
            .enumerate()
            .map(|(l, &level)| {
                let c = &counts.0[5 * l..5 * l + 5];
                let verdict = if c[0] <= c[1] + c[2] && c[4] == 0 { Verdict::Pass } else { Verdict::Fail };
                StoppingReport {
                    level,
                    p_sup: c[0] as f64 / total,
                    p_terminal: c[1] as f64 / total,
                    p_flipped: c[2] as f64 / total,
                    diff_se: None,
                    crossed: Some(c[3]),
                    identity_failures: Some(c[4]),
                    method: "exact",
                    verdict,
                }
            })
            .collect());
    }
    let ms = moments_indexed(outcomes.len(), 4 * width, |i, out| {
        level_events(&path_of(i), levels, |l, sup, s, t, _| {
            let (sup, s, t) = (f64::from(u8::from(sup)), f64::from(u8::from(s)), f64::from(u8::from(t)));
            out[4 * l..4 * l + 4].copy_from_slice(&[sup, s, t, sup - s - t]);
        })
    });
    Ok(levels
        .iter()
        .enumerate()
        .map(|(l, &level)| {
            let m = &ms[4 * l..4 * l + 4];
            let diff_se = m[3].std_error();
            let verdict = if m[3].mean() - SE_MARGIN * diff_se > 0.0 { Verdict::Fail } else { Verdict::Pass };
            StoppingReport {
                level,
                p_sup: m[0].mean(),
                p_terminal: m[1].mean(),
                p_flipped: m[2].mean(),
                diff_se: Some(diff_se),
                crossed: None,
                identity_failures: None,
                method: "monte-carlo",
                verdict,
            }
        })
        .collect())
}

/// Exact laws of `S_N` and `T_N` at level `r`, as sorted outcome lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalLaws {
    pub dim: usize,
    pub terminal: Vec<Vec<f64>>,
    pub flipped: Vec<Vec<f64>>,
}

impl TerminalLaws {
    /// Largest coordinate gap between the two sorted outcome lists; zero
    /// means the two (equally weighted) laws coincide.
    pub fn max_discrepancy(&self) -> f64 {
        self.terminal
            .iter()
            .zip(&self.flipped)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn sort_outcomes(v: &mut [Vec<f64>]) {
    v.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
}

/// Enumerates all sign outcomes and collects `S_N` and `T_N`.
pub fn exact_terminal_laws(
    model: &SeriesModel,
    spec: &InnovationSpec,
    horizon: usize,
    level: f64,
    cap: crate::innovations::EnumCap,
) -> Result<TerminalLaws> {
    model.check(spec.dim(), horizon)?;
    let outcomes = Outcomes::new(spec, horizon, Method::Exact(cap))?;
    let mut terminal = Vec::with_capacity(outcomes.len() as usize);
    let mut flipped = Vec::with_capacity(outcomes.len() as usize);
    let mut dim = 0;
    for i in 0..outcomes.len() {
        let path = build_path(model, &outcomes.get(i), horizon)?;
        let rec = first_crossing(&path, level)?;
        dim = path.dim();
        terminal.push(path.prefix_sum(horizon).to_vec());
        flipped.push(rec.terminal_flipped().to_vec());
    }
    sort_outcomes(&mut terminal);
    sort_outcomes(&mut flipped);
    Ok(TerminalLaws { dim, terminal, flipped })
}

/// Moments of the segment sum `Δ = S_{m+j} - S_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub m: usize,
    pub j: usize,
    pub fourth: f64,
    pub second: f64,
    pub fourth_se: Option<f64>,
    pub second_se: Option<f64>,
    /// `E|Δ|^4 / (E|Δ|^2)^2`; `None` when `E|Δ|^2 = 0`.
    pub ratio: Option<f64>,
    /// Delta-method standard error of `ratio` (Monte Carlo).
    pub ratio_se: Option<f64>,
}

fn segment_terms(path: &SeriesPath, m: usize, j: usize) -> Vec<f64> {
    let mut d = vec![0.0; path.dim()];
    for n in m + 1..=m + j {
        for (x, t) in d.iter_mut().zip(path.term(n)) {
            *x += t;
        }
    }
    d
}

/// `E|Δ|^4`, `E|Δ|^2` and their ratio for the segment `(m, m+j]`.
pub fn fourth_moment_ratio(model: &SeriesModel, spec: &InnovationSpec, m: usize, j: usize, method: Method) -> Result<MomentReport> {
    if j == 0 {
        return Err(invalid("segment length j must be positive"));
    }
    let horizon = m + j;
    model.check(spec.dim(), horizon)?;
    let outcomes = Outcomes::new(spec, horizon, method)?;
    let sample = |i: u64, out: &mut [f64]| {
        let path = build_path(model, &outcomes.get(i), horizon).expect("validated model");
        let q = norm(&segment_terms(&path, m, j)).powi(2);
        out[0] = q * q;
        out[1] = q;
        out[2] = q * q + q;
    };
    if outcomes.is_exact() {
        let v = means_indexed(outcomes.len(), 3, sample);
        let ratio = (v[1] > 0.0).then(|| v[0] / (v[1] * v[1]));
        return Ok(MomentReport { m, j, fourth: v[0], second: v[1], fourth_se: None, second_se: None, ratio, ratio_se: None });
    }
    let ms = moments_indexed(outcomes.len(), 3, sample);
    let (f, s) = (ms[0].mean(), ms[1].mean());
    let (vf, vs, vsum) = (ms[0].std_error().powi(2), ms[1].std_error().powi(2), ms[2].std_error().powi(2));
    let cov = 0.5 * (vsum - vf - vs);
    let (ratio, ratio_se) = if s > 0.0 {
        let (gf, gs) = (1.0 / (s * s), -2.0 * f / (s * s * s));
        let var = gf * gf * vf + gs * gs * vs + 2.0 * gf * gs * cov;
        (Some(f / (s * s)), Some(var.max(0.0).sqrt()))
    } else {
        (None, None)
    };
    Ok(MomentReport {
        m,
        j,
        fourth: f,
        second: s,
        fourth_se: Some(ms[0].std_error()),
        second_se: Some(ms[1].std_error()),
        ratio,
        ratio_se,
    })
}

/// Ratios over a list of segments and the empirical constant `K` (their
/// maximum; `None` when every segment is degenerate).
pub fn scan_fourth_moment(
    model: &SeriesModel,
    spec: &InnovationSpec,
    segments: &[(usize, usize)],
    method: Method,
) -> Result<(Vec<MomentReport>, Option<f64>)> {
    let reports = segments
        .iter()
        .map(|&(m, j)| fourth_moment_ratio(model, spec, m, j, method))
        .collect::<Result<Vec<_>>>()?;
    let k = reports.iter().filter_map(|r| r.ratio).reduce(f64::max);
    Ok((reports, k))
}

/// `sup_{j<=J} E|S_{m+j} - S_m|^2` for one `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyRow {
    pub m: usize,
    pub value: f64,
    pub std_error: Option<f64>,
    /// The `j` attaining the supremum.
    pub argmax: usize,
}

/// L2 Cauchy profile over `m_grid` with window `J`, all from one set of
/// outcomes of length `max(m) + J`.
pub fn l2_cauchy_profile(
    model: &SeriesModel,
    spec: &InnovationSpec,
    m_grid: &[usize],
    window: usize,
    method: Method,
) -> Result<Vec<CauchyRow>> {
    if window == 0 {
        return Err(invalid("window J must be positive"));
    }
    let Some(&max_m) = m_grid.iter().max() else {
        return Ok(Vec::new());
    };
    let horizon = max_m + window;
    model.check(spec.dim(), horizon)?;
    let outcomes = Outcomes::new(spec, horizon, method)?;
    let sample = |i: u64, out: &mut [f64]| {
        let path = build_path(model, &outcomes.get(i), horizon).expect("validated model");
        for (g, &m) in m_grid.iter().enumerate() {
            for j in 1..=window {
                out[g * window + j - 1] = norm(&segment_terms(&path, m, j)).powi(2);
            }
        }
    };
    let width = m_grid.len() * window;
    let (means, ses): (Vec<f64>, Vec<Option<f64>>) = if outcomes.is_exact() {
        let v = means_indexed(outcomes.len(), width, sample);
        let n = v.len();
        (v, vec![None; n])
    } else {
        moments_indexed(outcomes.len(), width, sample).iter().map(|m| (m.mean(), Some(m.std_error()))).unzip()
    };
    Ok(m_grid
        .iter()
        .enumerate()
        .map(|(g, &m)| {
            let row = &means[g * window..(g + 1) * window];
            let best = (0..window).fold(0, |b, i| if row[i] > row[b] { i } else { b });
            CauchyRow { m, value: row[best], std_error: ses[g * window + best], argmax: best + 1 }
        })
        .collect())
}

use anyhow::{bail, Context, Result};
use hsl_core::adaptive::{doob_check, doob_components, martingale_bound, DoobReport, PredictableRule};
use hsl_core::coeffs::{absolute_sum, column_sums, criterion_sum, tail_report, weighted_criterion_sum};
use hsl_core::covfactor::{
    cholesky_lower, fgn0_coefficients, max_entry_deviation, normalize_column_signs, verify_factorization,
    CovarianceSpec,
};
use hsl_core::innovations::sample_innovations;
use hsl_core::simulate::{build_path, exact_tail_sup, mc_expected_sup, tail_sup_estimate, verify_levy, verify_tail};
use hsl_core::stoptime::{l2_cauchy_profile, scan_fourth_moment, verify_stopping_inequality};
use hsl_core::{catalog, io, BoundReport, CoefficientMatrix, InnovationSpec, Method, SeriesModel, Verdict};

use crate::config::{Check, Cli, Command, Common, Sim};
use crate::report::{opt, real, Report, Section};

/// Factor reference check against the explicit index-0 model.
const FGN0_REFERENCE_TOL: f64 = 1e-10;

pub fn run(cli: &Cli) -> Result<Report> {
    let c = &cli.common;
    let mut report = Report::new(&command_name(&cli.command), c.echo(&cli.command)?);
    match &cli.command {
        Command::Analyze => analyze(c, &mut report)?,
        Command::Verify { check } => verify(c, *check, &mut report)?,
        Command::Factor { matrix_out, tol } => factor(c, matrix_out.as_deref(), *tol, &mut report)?,
        Command::Simulate { what } => simulate(c, *what, &mut report)?,
    }
    Ok(report)
}

fn command_name(cmd: &Command) -> String {
    match cmd {
        Command::Analyze => "analyze".into(),
        Command::Verify { check } => format!("verify {}", format!("{check:?}").to_lowercase()),
        Command::Factor { .. } => "factor".into(),
        Command::Simulate { what } => format!("simulate {}", format!("{what:?}").to_lowercase()),
    }
}

/// Rows a rule-backed matrix must provide for the command.
fn rows_needed(c: &Common, cmd: &Command) -> Result<usize> {
    let (n, k) = (c.n, c.k());
    Ok(match cmd {
        Command::Analyze => n + 2 * k - 1,
        Command::Verify { check: Check::Tail } | Command::Simulate { what: Sim::Tail } => n + 2 * k - 1,
        Command::Simulate { what: Sim::Cauchy } => c.m_values()?.into_iter().max().unwrap_or(0) + c.window(),
        Command::Simulate { what: Sim::Moment } => c.segment_list()?.iter().map(|(m, j)| m + j).max().unwrap_or(n),
        _ => n,
    }
    .max(1))
}

fn model(c: &Common, order: usize) -> Result<SeriesModel> {
    let matrix = catalog::parse_matrix(&c.matrix, order).with_context(|| format!("--matrix {}", c.matrix))?;
    let mut model = SeriesModel::new(matrix);
    if let Some(w) = &c.weights {
        model = model.with_weights(catalog::parse_weights(w, order).with_context(|| format!("--weights {w}"))?);
    }
    Ok(model)
}

fn rule(c: &Common, order: usize, spec: &InnovationSpec) -> Result<PredictableRule> {
    let matrix = if c.rule == "constant" { Some(catalog::parse_matrix(&c.matrix, order)?) } else { None };
    catalog::parse_predictable(&c.rule, order, matrix.as_ref(), spec.law()).with_context(|| format!("--rule {}", c.rule))
}

fn bound_cells(b: &BoundReport) -> Vec<String> {
    vec![
        b.method.to_string(),
        real(b.lhs),
        opt(b.lhs_se),
        real(b.rhs),
        opt(b.rhs_se),
        real(b.margin),
        b.verdict.label().to_string(),
    ]
}

const BOUND_COLUMNS: [&str; 7] = ["method", "lhs", "lhs_se", "rhs", "rhs_se", "margin", "verdict"];

fn columns(lead: &[&'static str], tail: &[&'static str]) -> Vec<&'static str> {
    lead.iter().chain(tail).copied().collect()
}

fn analyze(c: &Common, report: &mut Report) -> Result<()> {
    let (n, k) = (c.n, c.k());
    let model = model(c, rows_needed(c, &Command::Analyze)?)?;
    let m = model.matrix();
    let policy = c.policy()?;
    let profile = match model.weights() {
        Some(w) => weighted_criterion_sum(m, w, n, k, policy)?,
        None => criterion_sum(m, n, k, policy)?,
    };
    let tails = model.tail_report(n, k)?;
    let abs = absolute_sum(m, n + k - 1)?;

    let mut s = Section::new("criterion", &["quantity", "value"]);
    let mut kv = |q: &str, v: String| s.push(vec![q.to_string(), v]);
    kv("criterion", real(profile.value()));
    kv("flag", profile.flag.describe());
    kv("applied_policy", profile.applied_policy.name().into());
    kv("analytic_tail_bound", opt(profile.tail_bound));
    kv("levy_bound", real(model.levy_bound(n)?));
    kv("tail_a", real(tails.a));
    kv("tail_b", real(tails.b));
    kv("tail_bound_rhs", real(tails.bound_rhs));
    kv("absolute_sum", real(abs.value));
    kv("absolute_sum_converged", abs.converged.to_string());
    report.section(s);
    report.note("a converged flag means the criterion was not falsified at this truncation");

    let mut s = Section::new("diagonals", &["n", "norm", "partial_criterion"]);
    for (i, (norm, partial)) in profile.norms.iter().zip(&profile.partial_criterion).enumerate() {
        s.push(vec![(i + 1).to_string(), real(*norm), real(*partial)]);
    }
    report.section(s);

    let mut s = Section::new("tails", &["N", "K", "a", "b", "bound_rhs"]);
    let mut grid: Vec<usize> = (1..=10).map(|i| (n * i / 10).max(1)).collect();
    grid.dedup();
    for t in grid {
        let r = tail_report(m, model.weights(), t, k)?;
        s.push(vec![t.to_string(), k.to_string(), real(r.a), real(r.b), real(r.bound_rhs)]);
    }
    report.section(s);

    let mut s = Section::new("column_sums", &["k", "re", "im"]);
    for (i, z) in column_sums(m, n + k - 1)?.into_iter().take(n).enumerate() {
        s.push(vec![(i + 1).to_string(), real(z.re), real(z.im)]);
    }
    report.section(s);
    Ok(())
}

fn verify(c: &Common, check: Check, report: &mut Report) -> Result<()> {
    let spec = c.spec()?;
    let method = c.method()?;
    let order = rows_needed(c, &Command::Verify { check })?;
    match check {
        Check::Levy => {
            let b = verify_levy(&model(c, order)?, &spec, c.n, method)?;
            let mut s = Section::new("levy", &columns(&["N"], &BOUND_COLUMNS));
            s.push([vec![c.n.to_string()], bound_cells(&b)].concat());
            report.verdict(b.verdict);
            report.section(s);
        }
        Check::Tail => {
            let (b, t) = verify_tail(&model(c, order)?, &spec, c.n, c.k(), method)?;
            let mut s = Section::new("tail", &columns(&["N", "m", "a", "b"], &BOUND_COLUMNS));
            s.push([vec![c.n.to_string(), c.k().to_string(), real(t.a), real(t.b)], bound_cells(&b)].concat());
            report.verdict(b.verdict);
            report.section(s);
            report.note("finite tail length: evidence, not certificate");
        }
        Check::Martingale => {
            let r = martingale_bound(&rule(c, order, &spec)?, &spec, c.n, method)?;
            let mut s = Section::new("martingale", &columns(&["rule", "N"], &columns(&BOUND_COLUMNS, &["rhs_source", "envelope_rhs"])));
            s.push(
                [
                    vec![c.rule.clone(), c.n.to_string()],
                    bound_cells(&r.bound),
                    vec![r.rhs_source.label().to_string(), opt(r.envelope_rhs)],
                ]
                .concat(),
            );
            report.verdict(r.bound.verdict);
            report.section(s);
        }
        Check::Stopping => {
            let reports = verify_stopping_inequality(&model(c, order)?, &spec, c.n, &c.levels()?, method)?;
            let mut s = Section::new(
                "stopping",
                &["r", "method", "p_sup", "p_terminal", "p_flipped", "margin", "diff_se", "crossed", "identity_failures", "verdict"],
            );
            for r in reports {
                s.push(vec![
                    real(r.level),
                    r.method.to_string(),
                    real(r.p_sup),
                    real(r.p_terminal),
                    real(r.p_flipped),
                    real(r.margin()),
                    opt(r.diff_se),
                    r.crossed.map_or("NA".into(), |x| x.to_string()),
                    r.identity_failures.map_or("NA".into(), |x| x.to_string()),
                    r.verdict.label().to_string(),
                ]);
                report.verdict(r.verdict);
            }
            report.section(s);
        }
        Check::Doob => {
            let rule = rule(c, order, &spec)?;
            let reports: Vec<DoobReport> = match c.component {
                Some(j) => vec![doob_check(j, &rule, &spec, c.n, method)?],
                None => doob_components(&rule, &spec, c.n, method)?,
            };
            let mut s = Section::new("doob", &columns(&["component", "steps"], &BOUND_COLUMNS));
            for r in reports {
                s.push([vec![r.component.to_string(), r.steps.to_string()], bound_cells(&r.bound)].concat());
                report.verdict(r.bound.verdict);
            }
            report.section(s);
        }
    }
    Ok(())
}

fn factor(c: &Common, matrix_out: Option<&std::path::Path>, tol: f64, report: &mut Report) -> Result<()> {
    let Some(cov) = &c.cov else { bail!("factor needs --cov <path|fgn:H=<h>|identity>") };
    let spec = catalog::parse_covariance(cov, c.n).with_context(|| format!("--cov {cov}"))?;
    let size = spec.size();
    let l = cholesky_lower(&spec)?;
    let check = verify_factorization(&l, &spec, tol)?;
    let mut s = Section::new("factorization", &["size", "max_deviation", "at_n", "at_m", "tol", "verdict"]);
    let verdict = if check.passed { Verdict::Pass } else { Verdict::Fail };
    s.push(vec![
        size.to_string(),
        real(check.max_deviation),
        check.at.0.to_string(),
        check.at.1.to_string(),
        real(tol),
        verdict.label().into(),
    ]);
    report.verdict(verdict);
    report.section(s);

    if matches!(spec, CovarianceSpec::Fgn { hurst, .. } if hurst == 0.0) {
        let dev = max_entry_deviation(&normalize_column_signs(&l)?, &fgn0_coefficients(size), size)?;
        let verdict = if dev <= FGN0_REFERENCE_TOL { Verdict::Pass } else { Verdict::Fail };
        let mut s = Section::new("reference", &["reference", "max_deviation", "tol", "verdict"]);
        s.push(vec!["fgn0".into(), real(dev), real(FGN0_REFERENCE_TOL), verdict.label().into()]);
        report.verdict(verdict);
        report.section(s);
    }

    let text = io::write_trimat(&l, size)?;
    match matrix_out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
            report.note(format!("factor written to {}", path.display()));
        }
        None => report.section(entries(&l, size)?),
    }
    Ok(())
}

fn entries(m: &CoefficientMatrix, rows: usize) -> Result<Section> {
    let mut s = Section::new("factor", &["n", "k", "value"]);
    for n in 1..=rows {
        for (k, a) in m.row(n)?.into_iter().enumerate() {
            s.push(vec![n.to_string(), (k + 1).to_string(), real(a.re)]);
        }
    }
    Ok(s)
}

fn simulate(c: &Common, what: Sim, report: &mut Report) -> Result<()> {
    let spec = c.spec()?;
    let method = c.method()?;
    let model = model(c, rows_needed(c, &Command::Simulate { what })?)?;
    match what {
        Sim::Paths => {
            let (lo, hi) = c.stream_range()?;
            let dim = model.output_dim(spec.dim());
            let mut cols = vec!["stream".to_string(), "n".to_string()];
            cols.extend((1..=dim).map(|i| format!("s{i}")));
            cols.extend(["norm".to_string(), "running_sup".to_string()]);
            let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut s = Section::new("paths", &refs);
            for stream in lo..hi {
                let path = build_path(&model, &sample_innovations(&spec, c.n, c.seed, stream), c.n)?;
                for n in 1..=c.n {
                    let mut row = vec![stream.to_string(), n.to_string()];
                    row.extend(path.prefix_sum(n).iter().map(|x| real(*x)));
                    row.extend([real(path.prefix_norm(n)), real(path.running_sup(n))]);
                    s.push(row);
                }
            }
            report.section(s);
        }
        Sim::Sup | Sim::Tail => {
            let (offset, len) = if what == Sim::Sup { (0, c.n) } else { (c.n, c.k()) };
            let (mean, se, streams) = match method {
                Method::Exact(cap) => (exact_tail_sup(&model, &spec, offset, len, cap)?, None, "NA".to_string()),
                Method::MonteCarlo { replicas, seed } => {
                    let e = if what == Sim::Sup {
                        mc_expected_sup(&model, &spec, len, replicas, seed)?
                    } else {
                        tail_sup_estimate(&model, &spec, offset, len, replicas, seed)?
                    };
                    (e.mean, Some(e.std_error), format!("{}:{}", e.streams.0, e.streams.1))
                }
            };
            let bound = if what == Sim::Sup { model.levy_bound(len)? } else { model.tail_report(offset, len)?.bound_rhs };
            let mut s = Section::new(
                if what == Sim::Sup { "sup" } else { "tail_sup" },
                &["offset", "length", "method", "mean", "std_error", "streams", "bound"],
            );
            s.push(vec![offset.to_string(), len.to_string(), method.label().into(), real(mean), opt(se), streams, real(bound)]);
            report.section(s);
            if what == Sim::Tail {
                report.note("finite tail length: evidence, not certificate");
            }
        }
        Sim::Cauchy => {
            let rows = l2_cauchy_profile(&model, &spec, &c.m_values()?, c.window(), method)?;
            let mut s = Section::new("cauchy", &["m", "J", "value", "std_error", "argmax_j"]);
            for r in rows {
                s.push(vec![r.m.to_string(), c.window().to_string(), real(r.value), opt(r.std_error), r.argmax.to_string()]);
            }
            report.section(s);
        }
        Sim::Moment => {
            let (rows, k) = scan_fourth_moment(&model, &spec, &c.segment_list()?, method)?;
            let mut s = Section::new(
                "moments",
                &["m", "j", "fourth", "fourth_se", "second", "second_se", "ratio", "ratio_se"],
            );
            for r in rows {
                s.push(vec![
                    r.m.to_string(),
                    r.j.to_string(),
                    real(r.fourth),
                    opt(r.fourth_se),
                    real(r.second),
                    opt(r.second_se),
                    opt(r.ratio),
                    opt(r.ratio_se),
                ]);
            }
            report.section(s);
            let mut s = Section::new("moment_summary", &["empirical_k"]);
            s.push(vec![opt(k)]);
            report.section(s);
        }
    }
    Ok(())
}

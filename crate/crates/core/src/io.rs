//! Text formats: `trimat v1` (triangular coefficients), `covmat v1`
//! (covariance) and `vecs v1` (weight vectors).
//!
//! `#` starts a comment anywhere on a line; blank lines are ignored. Parse
//! errors report the 1-based physical line number.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::coeffs::{CoefficientMatrix, VectorWeights};
use crate::covfactor::CovarianceSpec;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Content lines as `(line number, tokens)`.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

/// Parses `<magic> v1 key=value...` and returns the values of `keys` in order.
fn parse_header(line: usize, tokens: &[&str], magic: &str, keys: &[&str]) -> Result<Vec<usize>> {
    if tokens.len() < 2 || tokens[0] != magic || tokens[1] != "v1" {
        return Err(parse_err(line, format!("expected header `{magic} v1 ...`, found `{}`", tokens.join(" "))));
    }
    keys.iter()
        .map(|key| {
            let prefix = format!("{key}=");
            let value = tokens[2..]
                .iter()
                .find_map(|t| t.strip_prefix(prefix.as_str()))
                .ok_or_else(|| parse_err(line, format!("header is missing `{key}=`")))?;
            match value.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(parse_err(line, format!("`{key}` must be a positive integer, found `{value}`"))),
            }
        })
        .collect()
}

fn parse_real(line: usize, token: &str) -> Result<f64> {
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, format!("`{token}` is not a finite number"))),
    }
}

fn parse_scalar(line: usize, token: &str) -> Result<Complex64> {
    match token.split_once(',') {
        Some((re, im)) => Ok(Complex64::new(parse_real(line, re)?, parse_real(line, im)?)),
        None => Ok(Complex64::new(parse_real(line, token)?, 0.0)),
    }
}

/// Reads `header` then exactly `rows` data lines, line `i` holding `width(i)` tokens.
fn parse_body<'a, T>(
    text: &'a str,
    magic: &str,
    keys: &[&str],
    width: impl Fn(&[usize], usize) -> usize,
    mut cell: impl FnMut(usize, &'a str) -> Result<T>,
) -> Result<(Vec<usize>, Vec<Vec<T>>)> {
    let mut lines = content_lines(text);
    let (hline, htokens) = lines.next().ok_or_else(|| parse_err(1, format!("empty input, expected `{magic} v1` header")))?;
    let header = parse_header(hline, &htokens, magic, keys)?;
    let count = header[0];
    let mut rows = Vec::with_capacity(count);
    let mut last = hline;
    for (line, tokens) in lines {
        last = line;
        if rows.len() == count {
            return Err(parse_err(line, format!("unexpected data after the {count} declared rows")));
        }
        let expected = width(&header, rows.len() + 1);
        if tokens.len() != expected {
            return Err(parse_err(line, format!("row {} needs {expected} values, found {}", rows.len() + 1, tokens.len())));
        }
        rows.push(tokens.into_iter().map(|t| cell(line, t)).collect::<Result<Vec<T>>>()?);
    }
    if rows.len() < count {
        return Err(parse_err(last, format!("header declares {count} rows, found {}", rows.len())));
    }
    Ok((header, rows))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_trimat(text: &str) -> Result<CoefficientMatrix> {
    let (_, rows) = parse_body(text, "trimat", &["N"], |_, i| i, parse_scalar)?;
    CoefficientMatrix::from_complex_rows(&rows)
}

pub fn read_trimat(path: impl AsRef<Path>) -> Result<CoefficientMatrix> {
    let path = path.as_ref();
    Ok(parse_trimat(&read(path)?)?.with_label(path.display().to_string()))
}

fn fmt_real(out: &mut String, x: f64) {
    let _ = write!(out, "{x:.16e}");
}

/// Rows `1..=rows` in `trimat v1`; complex entries as `re,im`.
pub fn write_trimat(m: &CoefficientMatrix, rows: usize) -> Result<String> {
    let mut out = format!("trimat v1 N={rows}\n");
    for n in 1..=rows {
        for (i, a) in m.row(n)?.into_iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            fmt_real(&mut out, a.re);
            if m.is_complex() {
                out.push(',');
                fmt_real(&mut out, a.im);
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_covmat(text: &str) -> Result<CovarianceSpec> {
    let (_, rows) = parse_body(text, "covmat", &["N"], |h, _| h[0], parse_real)?;
    CovarianceSpec::explicit(&rows)
}

pub fn read_covmat(path: impl AsRef<Path>) -> Result<CovarianceSpec> {
    parse_covmat(&read(path.as_ref())?)
}

pub fn write_covmat(spec: &CovarianceSpec) -> String {
    let size = spec.size();
    let mut out = format!("covmat v1 N={size}\n");
    for n in 1..=size {
        for m in 1..=size {
            if m > 1 {
                out.push(' ');
            }
            fmt_real(&mut out, spec.entry(n, m));
        }
        out.push('\n');
    }
    out
}

/// `vecs v1 N=<n> d=<d>` followed by `n` lines of `d` coordinates.
pub fn parse_vecs(text: &str) -> Result<VectorWeights> {
    let (_, rows) = parse_body(text, "vecs", &["N", "d"], |h, _| h[1], parse_real)?;
    VectorWeights::from_vectors(&rows)
}

pub fn read_vecs(path: impl AsRef<Path>) -> Result<VectorWeights> {
    let path = path.as_ref();
    Ok(parse_vecs(&read(path)?)?.with_label(path.display().to_string()))
}

pub fn write_vecs(w: &VectorWeights, len: usize) -> Result<String> {
    let mut out = format!("vecs v1 N={len} d={}\n", w.dim());
    for n in 1..=len {
        for (i, x) in w.vector(n)?.into_iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            fmt_real(&mut out, x);
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_complex_entries() {
        let m = parse_trimat("# fixture\ntrimat v1 N=2\n1   # first row\n\n0.5 -1,2\n").unwrap();
        assert_eq!(m.order(), 2);
        assert!(m.is_complex());
        assert_eq!(m.get(2, 2).unwrap(), Complex64::new(-1.0, 2.0));
    }

    #[test]
    fn row_length_error_names_the_line() {
        let err = parse_trimat("trimat v1 N=3\n1\n1 2 3\n1 2 3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn bad_number_and_header_errors() {
        assert!(matches!(parse_trimat("trimat v1 N=1\nx\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_trimat("trimat v2 N=1\n1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_trimat("trimat v1\n1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_trimat("trimat v1 N=2\n1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_trimat("trimat v1 N=1\n1\n2 3\n"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_trimat(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_trimat("trimat v1 N=1\ninf\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn trimat_round_trip_is_lossless() {
        let m = crate::covfactor::fgn0_coefficients(7);
        let text = write_trimat(&m, 7).unwrap();
        let back = parse_trimat(&text).unwrap();
        for n in 1..=7 {
            assert_eq!(m.row(n).unwrap(), back.row(n).unwrap());
        }
        let c = CoefficientMatrix::from_complex_rows(&[vec![Complex64::new(0.1, -1.0 / 3.0)]]).unwrap();
        assert_eq!(parse_trimat(&write_trimat(&c, 1).unwrap()).unwrap().get(1, 1).unwrap(), c.get(1, 1).unwrap());
    }

    #[test]
    fn covmat_round_trip_and_asymmetry() {
        let spec = CovarianceSpec::fgn(0.3, 4).unwrap();
        let back = parse_covmat(&write_covmat(&spec)).unwrap();
        for n in 1..=4 {
            for m in 1..=4 {
                assert_eq!(spec.entry(n, m), back.entry(n, m));
            }
        }
        assert!(parse_covmat("covmat v1 N=2\n1 0.5\n0.4 1\n").is_err());
    }

    #[test]
    fn vecs_round_trip() {
        let w = parse_vecs("vecs v1 N=2 d=3\n1 0 0\n0 0.5 0.5\n").unwrap();
        assert_eq!(w.dim(), 3);
        assert_eq!(w.norm_sq(2).unwrap(), 0.5);
        let back = parse_vecs(&write_vecs(&w, 2).unwrap()).unwrap();
        assert_eq!(back.vector(2).unwrap(), vec![0.0, 0.5, 0.5]);
        assert!(matches!(parse_vecs("vecs v1 N=1 d=2\n1\n"), Err(Error::Parse { line: 2, .. })));
    }
}

//! Named rules for matrices, weights, covariances and predictable
//! coefficients, as accepted on the command line. Anything that is not a
//! rule name is read as a file path.
//!
//! Rules take `name`, `name:<arg>` or `name:key=value,key=value`.

use std::collections::BTreeMap;

use crate::adaptive::PredictableRule;
use crate::coeffs::{CoefficientMatrix, EntryLaw, VectorWeights};
use crate::covfactor::{cholesky_lower, fgn0_coefficients, CovarianceSpec};
use crate::error::{invalid, Result};
use crate::innovations::InnovationLaw;
use crate::io;

struct Rule<'a> {
    name: &'a str,
    arg: Option<&'a str>,
    params: BTreeMap<&'a str, &'a str>,
}

impl<'a> Rule<'a> {
    fn parse(text: &'a str) -> Self {
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (text, None),
        };
        let mut params = BTreeMap::new();
        let mut arg = None;
        for part in rest.into_iter().flat_map(|r| r.split(',')) {
            match part.split_once('=') {
                Some((k, v)) => {
                    params.insert(k, v);
                }
                None if arg.is_none() => arg = Some(part),
                None => {}
            }
        }
        Self { name, arg, params }
    }

    fn real(&self, key: &str) -> Result<Option<f64>> {
        self.params
            .get(key)
            .map(|v| v.parse::<f64>().map_err(|_| invalid(format!("`{key}={v}` is not a number"))))
            .transpose()
    }

    fn required(&self, key: &str) -> Result<f64> {
        self.real(key)?.ok_or_else(|| invalid(format!("rule `{}` needs `{key}=`", self.name)))
    }

    fn dim(&self) -> Result<usize> {
        match self.params.get("d") {
            None => Ok(1),
            Some(v) => v.parse().map_err(|_| invalid(format!("`d={v}` is not a positive integer"))),
        }
    }

    fn law(&self, default: EntryLaw) -> Result<EntryLaw> {
        self.arg.map_or(Ok(default), str::parse)
    }
}

fn is_path(text: &str) -> bool {
    std::path::Path::new(text).is_file()
}

/// Matrix rules: `fgn0`, `fgn:H=<h>`, `power:alpha=<a>`, `diag:<law>`,
/// `diag-ones`, `collinear:<law>`, `zero`, `ones`, `identity`; else a
/// `trimat` file. `order` is the number of rows a rule must provide.
pub fn parse_matrix(text: &str, order: usize) -> Result<CoefficientMatrix> {
    if is_path(text) {
        return io::read_trimat(text);
    }
    let rule = Rule::parse(text);
    let m = match rule.name {
        "fgn0" => fgn0_coefficients(order),
        "fgn" => cholesky_lower(&CovarianceSpec::fgn(rule.required("H")?, order)?)?.with_label(text),
        "power" => CoefficientMatrix::power_decay(rule.required("alpha")?, order)?,
        "diag" => CoefficientMatrix::diagonal(rule.law(EntryLaw::Ones)?, order),
        "diag-ones" => CoefficientMatrix::diagonal(EntryLaw::Ones, order).with_label("diag-ones"),
        "collinear" => CoefficientMatrix::collinear(rule.law(EntryLaw::Geometric)?, order),
        "zero" => CoefficientMatrix::zero(order),
        "ones" => CoefficientMatrix::ones(order),
        "identity" => CoefficientMatrix::identity(order).with_label("identity"),
        _ => return Err(invalid(format!("`{text}` is neither a matrix rule nor a readable file"))),
    };
    Ok(m)
}

/// Weight rules (`|u_n|` given, axis-cycling in `d` dimensions, `d=1` by
/// default): `unit`, `zero`, `geometric` (`|u_n|^2 = 2^-n`), `harmonic`
/// (`1/n`), `inverse-square` (`1/n^2`), `power:beta=<b>` (`n^-b`),
/// `trig:alpha=<a>` (`A_n = B_n = n^-a / sqrt 2`); else a `vecs` file.
pub fn parse_weights(text: &str, order: usize) -> Result<VectorWeights> {
    if is_path(text) {
        return io::read_vecs(text);
    }
    let rule = Rule::parse(text);
    let d = rule.dim()?;
    let w = match rule.name {
        "unit" => VectorWeights::axis_cycling(d, text, |_| 1.0)?,
        "zero" => VectorWeights::axis_cycling(d, text, |_| 0.0)?,
        "geometric" => VectorWeights::axis_cycling(d, text, |n| 0.5f64.powf(n as f64 / 2.0))?,
        "harmonic" => VectorWeights::axis_cycling(d, text, |n| 1.0 / n as f64)?,
        "inverse-square" => VectorWeights::axis_cycling(d, text, |n| 1.0 / (n * n) as f64)?,
        "power" => {
            let beta = rule.required("beta")?;
            VectorWeights::axis_cycling(d, text, move |n| (n as f64).powf(-beta))?
        }
        "trig" => {
            let alpha = rule.required("alpha")?;
            let coef: Vec<f64> = (1..=order).map(|n| (n as f64).powf(-alpha) / 2f64.sqrt()).collect();
            VectorWeights::trigonometric(&coef, &coef)?.with_label(text)
        }
        _ => return Err(invalid(format!("`{text}` is neither a weight rule nor a readable file"))),
    };
    Ok(w)
}

/// `fgn:H=<h>` or a `covmat` file.
pub fn parse_covariance(text: &str, size: usize) -> Result<CovarianceSpec> {
    if is_path(text) {
        return io::read_covmat(text);
    }
    let rule = Rule::parse(text);
    match rule.name {
        "fgn" => CovarianceSpec::fgn(rule.required("H")?, size),
        "identity" => CovarianceSpec::fgn(0.5, size),
        _ => Err(invalid(format!("`{text}` is neither a covariance rule nor a readable file"))),
    }
}

/// Predictable rules: `constant` (uses `matrix`), `sign-prev[:<law>]`
/// (default `inverse-square`), `clamp-prev[:<law>]` (default `geometric`,
/// closed-form moments for scalar `innovation_law`), `table:<path>`.
pub fn parse_predictable(
    text: &str,
    order: usize,
    matrix: Option<&CoefficientMatrix>,
    innovation_law: InnovationLaw,
) -> Result<PredictableRule> {
    let rule = Rule::parse(text);
    match rule.name {
        "constant" => {
            let m = matrix.ok_or_else(|| invalid("rule `constant` needs a matrix"))?;
            PredictableRule::constant(m.clone())
        }
        "sign-prev" => Ok(PredictableRule::sign_of_previous(rule.law(EntryLaw::InverseSquare)?, order)),
        "clamp-prev" => Ok(PredictableRule::clamp_of_previous(rule.law(EntryLaw::Geometric)?, innovation_law, order)),
        "table" => {
            let path = text.strip_prefix("table:").unwrap_or_default();
            PredictableRule::constant(io::read_trimat(path)?)
        }
        _ => Err(invalid(format!("`{text}` is not a predictable rule"))),
    }
}

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hsl_core::{EnumCap, Embedding, InnovationLaw, InnovationSpec, Method, TailPolicy};

use crate::report::Format;

#[derive(Parser, Debug)]
#[command(name = "hsl", version, about = "Convergence criteria and maximal inequalities for triangular random series")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Diagonal profile, criterion, tail table and column diagnostics.
    Analyze,
    /// Check an inequality; exit 0 pass, 2 inconclusive, 1 violation.
    Verify {
        #[command(subcommand)]
        check: Check,
    },
    /// Factor a covariance (`--cov`) into a lower-triangular matrix.
    Factor {
        /// Write the factor here in `trimat v1` format instead of the report.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        /// Largest accepted entry of |α αᵀ - R|.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Paths and expectation estimates.
    Simulate {
        #[command(subcommand)]
        what: Sim,
    },
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// E sup_{n<=N} |S_n| against the finite maximal bound.
    Levy,
    /// Tail sup over S_{N+1}-S_N .. S_{N+K}-S_N against 2(A_N + B_N).
    Tail,
    /// Maximal bound for the predictable rule `--rule`.
    Martingale,
    /// First-crossing inequality over `--r-grid`.
    Stopping,
    /// Doob L2 inequality for decomposition components of `--rule`.
    Doob,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sim {
    /// Prefix sums of the paths on `--streams`.
    Paths,
    /// E sup_{n<=N} |S_n|.
    Sup,
    /// Tail sup starting after index N, length K.
    Tail,
    /// sup_{j<=J} E|S_{m+j} - S_m|^2 over `--m-grid`.
    Cauchy,
    /// Fourth-to-squared-second moment ratio over `--segments`.
    Moment,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Coefficients: `trimat` file or fgn0, fgn:H=<h>, power:alpha=<a>,
    /// diag:<law>, diag-ones, collinear:<law>, zero, ones, identity.
    #[arg(long, global = true, default_value = "fgn0")]
    pub matrix: String,
    /// Weights: `vecs` file or unit, zero, geometric, harmonic,
    /// inverse-square, power:beta=<b>, trig:alpha=<a> (`,d=<dim>` optional).
    #[arg(long, global = true)]
    pub weights: Option<String>,
    /// Covariance for `factor`: `covmat` file, fgn:H=<h> or identity.
    #[arg(long, global = true)]
    pub cov: Option<String>,
    /// Horizon, outer cutoff, or tail offset.
    #[arg(long = "N", global = true, default_value_t = 12)]
    pub n: usize,
    /// Inner cutoff, or tail length; defaults to N.
    #[arg(long = "K", global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 100_000)]
    pub replicas: u64,
    /// Enumerate all Rademacher outcomes (cap from HSL_ENUM_CAP).
    #[arg(long, global = true)]
    pub exact: bool,
    /// Crossing levels `lo:hi:count`, evenly spaced and inclusive.
    #[arg(long = "r-grid", global = true, default_value = "0.5:3:6")]
    pub r_grid: String,
    /// rademacher, gaussian or uniform.
    #[arg(long, global = true, default_value = "rademacher")]
    pub dist: String,
    #[arg(long, global = true, default_value_t = 1)]
    pub dim: usize,
    /// scalar, axis-cycling or isotropic; defaults from `--dim`.
    #[arg(long, global = true)]
    pub embedding: Option<String>,
    /// Tail policy for `analyze`: none, stagnation or analytic.
    #[arg(long, global = true, default_value = "stagnation")]
    pub policy: String,
    /// Predictable rule: constant (uses `--matrix`), sign-prev[:<law>],
    /// clamp-prev[:<law>], table:<path>.
    #[arg(long, global = true, default_value = "constant")]
    pub rule: String,
    /// Stream ids `lo:hi` (half-open) for `simulate paths`.
    #[arg(long, global = true, default_value = "0:1")]
    pub streams: String,
    /// Comma-separated m values for `simulate cauchy`; defaults to 0..N in ten steps.
    #[arg(long = "m-grid", global = true)]
    pub m_grid: Option<String>,
    /// Window for `simulate cauchy`; defaults to K.
    #[arg(long = "J", global = true)]
    pub j: Option<usize>,
    /// Comma-separated `m:j` segments for `simulate moment`; defaults to `0:N`.
    #[arg(long, global = true)]
    pub segments: Option<String>,
    /// Restrict `verify doob` to one component.
    #[arg(long, global = true)]
    pub component: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Worker threads; affects wall time only.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

impl Common {
    pub fn k(&self) -> usize {
        self.k.unwrap_or(self.n)
    }

    pub fn spec(&self) -> Result<InnovationSpec> {
        let law: InnovationLaw = self.dist.parse()?;
        let embedding: Embedding = match &self.embedding {
            Some(e) => e.parse()?,
            None if self.dim == 1 => Embedding::Scalar,
            None => Embedding::AxisCycling,
        };
        Ok(InnovationSpec::new(law, self.dim, embedding)?)
    }

    pub fn method(&self) -> Result<Method> {
        Ok(if self.exact { Method::Exact(EnumCap::from_env()?) } else { Method::monte_carlo(self.replicas, self.seed) })
    }

    pub fn policy(&self) -> Result<TailPolicy> {
        Ok(self.policy.parse()?)
    }

    pub fn levels(&self) -> Result<Vec<f64>> {
        let parts: Vec<&str> = self.r_grid.split(':').collect();
        let [lo, hi, count] = parts[..] else { bail!("--r-grid must be lo:hi:count, got `{}`", self.r_grid) };
        let lo: f64 = lo.parse().context("--r-grid lo")?;
        let hi: f64 = hi.parse().context("--r-grid hi")?;
        let count: usize = count.parse().context("--r-grid count")?;
        if count == 0 || !(lo <= hi) {
            bail!("--r-grid needs lo <= hi and count >= 1, got `{}`", self.r_grid);
        }
        if count == 1 {
            return Ok(vec![lo]);
        }
        Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
    }

    pub fn stream_range(&self) -> Result<(u64, u64)> {
        let (lo, hi) = self.streams.split_once(':').context("--streams must be lo:hi")?;
        let (lo, hi): (u64, u64) = (lo.parse().context("--streams lo")?, hi.parse().context("--streams hi")?);
        if lo >= hi {
            bail!("--streams needs lo < hi, got `{}`", self.streams);
        }
        Ok((lo, hi))
    }

    pub fn m_values(&self) -> Result<Vec<usize>> {
        match &self.m_grid {
            Some(s) => s.split(',').map(|t| t.trim().parse().with_context(|| format!("--m-grid entry `{t}`"))).collect(),
            None => {
                let step = (self.n / 10).max(1);
                Ok((0..=self.n).step_by(step).collect())
            }
        }
    }

    pub fn window(&self) -> usize {
        self.j.unwrap_or_else(|| self.k())
    }

    pub fn segment_list(&self) -> Result<Vec<(usize, usize)>> {
        let Some(s) = &self.segments else { return Ok(vec![(0, self.n)]) };
        s.split(',')
            .map(|t| {
                let (m, j) = t.trim().split_once(':').with_context(|| format!("segment `{t}` must be m:j"))?;
                Ok((m.parse().context("segment m")?, j.parse().context("segment j")?))
            })
            .collect()
    }

    /// The resolved configuration echoed into the report header. Output
    /// location and thread count are excluded: they never change the body.
    pub fn echo(&self, command: &Command) -> Result<Vec<(String, String)>> {
        let spec = self.spec()?;
        let mut v = vec![
            ("matrix", self.matrix.clone()),
            ("weights", self.weights.clone().unwrap_or_else(|| "none".into())),
            ("N", self.n.to_string()),
            ("K", self.k().to_string()),
            ("innovations", format!("{} dim={} embedding={}", spec.law().name(), spec.dim(), spec.embedding().name())),
        ];
        match self.method()? {
            Method::Exact(cap) => v.push(("method", format!("exact cap={}", cap.get()))),
            Method::MonteCarlo { replicas, seed } => {
                v.push(("method", format!("monte-carlo replicas={replicas} seed={seed} streams=0:{replicas}")))
            }
        }
        match command {
            Command::Analyze => v.push(("policy", self.policy()?.name().into())),
            Command::Factor { tol, .. } => {
                v.push(("cov", self.cov.clone().unwrap_or_else(|| "none".into())));
                v.push(("tol", format!("{tol:e}")));
            }
            Command::Verify { check } => match check {
                Check::Stopping => v.push(("r_grid", self.r_grid.clone())),
                Check::Martingale | Check::Doob => {
                    v.push(("rule", self.rule.clone()));
                    if let Some(c) = self.component {
                        v.push(("component", c.to_string()));
                    }
                }
                Check::Levy | Check::Tail => {}
            },
            Command::Simulate { what } => match what {
                Sim::Paths => v.push(("streams", self.streams.clone())),
                Sim::Cauchy => {
                    let grid: Vec<String> = self.m_values()?.iter().map(usize::to_string).collect();
                    v.push(("m_grid", grid.join(",")));
                    v.push(("J", self.window().to_string()));
                }
                Sim::Moment => {
                    let segs: Vec<String> = self.segment_list()?.iter().map(|(m, j)| format!("{m}:{j}")).collect();
                    v.push(("segments", segs.join(",")));
                }
                Sim::Sup | Sim::Tail => {}
            },
        }
        v.push(("format", format!("{:?}", self.format).to_lowercase()));
        Ok(v.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }
}

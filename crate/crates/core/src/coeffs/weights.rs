use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

type FillFn = dyn Fn(usize, &mut [f64]) + Send + Sync;
type NormFn = dyn Fn(usize) -> f64 + Send + Sync;

#[derive(Clone)]
enum WeightSource {
    Explicit(Arc<Vec<f64>>),
    Rule { fill: Arc<FillFn>, norm_sq: Arc<NormFn> },
}

/// Vectors `u_n` in `R^d` multiplying the scalar terms of a series.
#[derive(Clone)]
pub struct VectorWeights {
    dim: usize,
    len: Option<usize>,
    source: WeightSource,
    label: String,
}

impl fmt::Debug for VectorWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorWeights")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("len", &self.len)
            .finish()
    }
}

impl VectorWeights {
    /// Explicit vectors `u_1..u_N`, all of dimension `d`.
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or_else(|| invalid("no weight vectors given"))?;
        if dim == 0 {
            return Err(invalid("weight vectors must have positive dimension"));
        }
        let mut flat = Vec::with_capacity(dim * vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(Error::Dimension { expected: dim, found: v.len() });
            }
            flat.extend_from_slice(v);
        }
        Ok(Self {
            dim,
            len: Some(vectors.len()),
            source: WeightSource::Explicit(Arc::new(flat)),
            label: "vectors".into(),
        })
    }

    /// Scalar weights `u_n = w_n` in `R^1`.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        let vs: Vec<Vec<f64>> = values.iter().map(|&x| vec![x]).collect();
        Self::from_vectors(&vs)
    }

    /// `u_n = norm(n) · e_j`, `j = ((n-1) mod d) + 1`.
    pub fn axis_cycling<F>(dim: usize, label: impl Into<String>, norm: F) -> Result<Self>
    where
        F: Fn(usize) -> f64 + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(invalid("weight dimension must be positive"));
        }
        let norm = Arc::new(norm);
        let fill_norm = Arc::clone(&norm);
        Ok(Self {
            dim,
            len: None,
            source: WeightSource::Rule {
                fill: Arc::new(move |n, out: &mut [f64]| {
                    out.fill(0.0);
                    out[(n - 1) % out.len()] = fill_norm(n);
                }),
                norm_sq: Arc::new(move |n| norm(n).powi(2)),
            },
            label: label.into(),
        })
    }

    /// Trigonometric weights `f_n = A_n cos(n x) + B_n sin(n x)` written in the
    /// orthogonal system `(cos x, sin x, cos 2x, ...)`, so `|f_n|^2 = A_n^2 + B_n^2`.
    /// Coordinates live in `R^{2 len}`.
    pub fn trigonometric(cos: &[f64], sin: &[f64]) -> Result<Self> {
        if cos.len() != sin.len() || cos.is_empty() {
            return Err(Error::Dimension { expected: cos.len(), found: sin.len() });
        }
        let len = cos.len();
        let cos = Arc::new(cos.to_vec());
        let sin = Arc::new(sin.to_vec());
        let (c2, s2) = (Arc::clone(&cos), Arc::clone(&sin));
        Ok(Self {
            dim: 2 * len,
            len: Some(len),
            source: WeightSource::Rule {
                fill: Arc::new(move |n, out: &mut [f64]| {
                    out.fill(0.0);
                    out[2 * (n - 1)] = cos[n - 1];
                    out[2 * (n - 1) + 1] = sin[n - 1];
                }),
                norm_sq: Arc::new(move |n| c2[n - 1].powi(2) + s2[n - 1].powi(2)),
            },
            label: "trig".into(),
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of explicit vectors; `None` for unbounded rules.
    pub fn len(&self) -> Option<usize> {
        self.len
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub(crate) fn require(&self, n: usize) -> Result<()> {
        match self.len {
            Some(len) if n > len => Err(Error::Truncation { n, k: 1, order: len }),
            _ => Ok(()),
        }
    }

    /// `|u_n|^2`; unchecked, `n` must be within `len`.
    #[inline]
    pub(crate) fn norm_sq_unchecked(&self, n: usize) -> f64 {
        match &self.source {
            WeightSource::Explicit(v) => v[(n - 1) * self.dim..n * self.dim].iter().map(|x| x * x).sum(),
            WeightSource::Rule { norm_sq, .. } => norm_sq(n),
        }
    }

    /// `|u_n|^2`, 1-based.
    pub fn norm_sq(&self, n: usize) -> Result<f64> {
        self.require(n)?;
        Ok(self.norm_sq_unchecked(n))
    }

    /// Writes `u_n` into `out` (length `d`).
    #[inline]
    pub(crate) fn fill(&self, n: usize, out: &mut [f64]) {
        match &self.source {
            WeightSource::Explicit(v) => out.copy_from_slice(&v[(n - 1) * self.dim..n * self.dim]),
            WeightSource::Rule { fill, .. } => fill(n, out),
        }
    }

    /// `u_n` as an owned vector.
    pub fn vector(&self, n: usize) -> Result<Vec<f64>> {
        self.require(n)?;
        let mut out = vec![0.0; self.dim];
        self.fill(n, &mut out);
        Ok(out)
    }
}

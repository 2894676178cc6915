//! Independent symmetric unit-variance innovations `Z_n` in `R^d`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Scalar law of the innovation coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InnovationLaw {
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// Standard normal.
    Gaussian,
    /// Uniform on `[-√3, √3]`, which has unit variance.
    Uniform,
}

impl InnovationLaw {
    pub fn name(&self) -> &'static str {
        match self {
            InnovationLaw::Rademacher => "rademacher",
            InnovationLaw::Gaussian => "gaussian",
            InnovationLaw::Uniform => "uniform",
        }
    }

    #[inline]
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            InnovationLaw::Gaussian => rng.sample(StandardNormal),
            InnovationLaw::Uniform => rng.random_range(-SQRT_3..SQRT_3),
        }
    }
}

impl FromStr for InnovationLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(InnovationLaw::Rademacher),
            "gaussian" | "normal" => Ok(InnovationLaw::Gaussian),
            "uniform" => Ok(InnovationLaw::Uniform),
            other => Err(invalid(format!("unknown innovation law '{other}'"))),
        }
    }
}

impl fmt::Display for InnovationLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a scalar draw is placed in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Embedding {
    /// `d = 1`.
    Scalar,
    /// `Z_n = ξ_n e_j` with `j = ((n - 1) mod d) + 1`.
    AxisCycling,
    /// Independent coordinates, each with variance `1/d`.
    Isotropic,
}

impl Embedding {
    pub fn name(&self) -> &'static str {
        match self {
            Embedding::Scalar => "scalar",
            Embedding::AxisCycling => "axis-cycling",
            Embedding::Isotropic => "isotropic",
        }
    }
}

impl FromStr for Embedding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(Embedding::Scalar),
            "axis-cycling" | "axis" => Ok(Embedding::AxisCycling),
            "isotropic" => Ok(Embedding::Isotropic),
            other => Err(invalid(format!("unknown embedding '{other}'"))),
        }
    }
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Distribution and embedding of the innovation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InnovationSpec {
    law: InnovationLaw,
    dim: usize,
    embedding: Embedding,
}

impl InnovationSpec {
    pub fn new(law: InnovationLaw, dim: usize, embedding: Embedding) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("innovation dimension must be at least 1"));
        }
        if embedding == Embedding::Scalar && dim != 1 {
            return Err(Error::Dimension { expected: 1, found: dim });
        }
        Ok(Self { law, dim, embedding })
    }

    pub fn scalar(law: InnovationLaw) -> Self {
        Self { law, dim: 1, embedding: Embedding::Scalar }
    }

    pub fn law(&self) -> InnovationLaw {
        self.law
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn embedding(&self) -> Embedding {
        self.embedding
    }

    /// Whether every innovation is `±1` times a fixed vector, so that the
    /// whole sample space is enumerable by sign tuples.
    pub fn is_enumerable(&self) -> bool {
        self.law == InnovationLaw::Rademacher && self.embedding != Embedding::Isotropic
    }

    pub(crate) fn require_enumerable(&self) -> Result<()> {
        if self.is_enumerable() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "exact enumeration needs Rademacher innovations with scalar or axis-cycling embedding, got {} / {}",
                self.law, self.embedding
            )))
        }
    }

    /// Writes `Z_n = sign · e(n)` for an enumerable spec.
    #[inline]
    pub(crate) fn place_sign(&self, n: usize, sign: f64, out: &mut [f64]) {
        out.fill(0.0);
        match self.embedding {
            Embedding::Scalar => out[0] = sign,
            _ => out[(n - 1) % self.dim] = sign,
        }
    }

    pub(crate) fn from_sign_mask(&self, mask: u64, count: usize) -> Innovations {
        let mut values = vec![0.0; count * self.dim];
        for n in 1..=count {
            let sign = if mask >> (n - 1) & 1 == 1 { -1.0 } else { 1.0 };
            self.place_sign(n, sign, &mut values[(n - 1) * self.dim..n * self.dim]);
        }
        Innovations { dim: self.dim, values }
    }
}

impl Default for InnovationSpec {
    fn default() -> Self {
        Self::scalar(InnovationLaw::Rademacher)
    }
}

/// A realized finite innovation sequence `Z_1, ..., Z_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Innovations {
    dim: usize,
    values: Vec<f64>,
}

impl Innovations {
    /// Builds a sequence from row-major coordinates.
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension { expected: dim, found: values.len() });
        }
        Ok(Self { dim, values })
    }

    /// Scalar innovations.
    pub fn scalar(values: Vec<f64>) -> Self {
        Self { dim: 1, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Z_n`, 1-based.
    pub fn get(&self, n: usize) -> &[f64] {
        &self.values[(n - 1) * self.dim..n * self.dim]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.values
    }
}

/// A seeded generator bound to one `(seed, stream)` pair.
///
/// Generators are not meant to be shared across threads; parallel replicas
/// each build their own with a distinct stream id.
#[derive(Debug, Clone)]
pub struct InnovationStream {
    spec: InnovationSpec,
    rng: ChaCha8Rng,
}

impl InnovationStream {
    pub fn new(spec: InnovationSpec, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { spec, rng }
    }

    /// Draws the next innovation `Z_n` into `out` (length `d`).
    pub fn next_into(&mut self, n: usize, out: &mut [f64]) {
        let spec = self.spec;
        match spec.embedding {
            Embedding::Scalar => out[0] = spec.law.draw(&mut self.rng),
            Embedding::AxisCycling => {
                let xi = spec.law.draw(&mut self.rng);
                spec.place_sign(n, xi, out);
            }
            Embedding::Isotropic => {
                let scale = 1.0 / (spec.dim as f64).sqrt();
                for x in out.iter_mut() {
                    *x = spec.law.draw(&mut self.rng) * scale;
                }
            }
        }
    }

    /// Draws `Z_1..Z_count`.
    pub fn take(&mut self, count: usize) -> Innovations {
        let d = self.spec.dim;
        let mut values = vec![0.0; count * d];
        for n in 1..=count {
            self.next_into(n, &mut values[(n - 1) * d..n * d]);
        }
        Innovations { dim: d, values }
    }
}

/// Samples `Z_1..Z_count` for replica `stream`; bit-identical across calls.
pub fn sample_innovations(spec: &InnovationSpec, count: usize, seed: u64, stream: u64) -> Innovations {
    InnovationStream::new(*spec, seed, stream).take(count)
}

/// Ceiling on the length of exhaustively enumerated sign tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnumCap(usize);

impl EnumCap {
    pub const DEFAULT: usize = 20;
    pub const MAX: usize = 24;
    pub const ENV_VAR: &'static str = "HSL_ENUM_CAP";

    pub fn new(cap: usize) -> Result<Self> {
        if cap == 0 || cap > Self::MAX {
            return Err(invalid(format!("enumeration cap must be in 1..={}, got {cap}", Self::MAX)));
        }
        Ok(Self(cap))
    }

    /// Reads `HSL_ENUM_CAP`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(Self::ENV_VAR) {
            Ok(v) => {
                let cap = v
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("{} must be an integer, got '{v}'", Self::ENV_VAR)))?;
                Self::new(cap)
            }
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn get(&self) -> usize {
        self.0
    }

    pub(crate) fn check(&self, n: usize) -> Result<()> {
        if n > self.0 {
            Err(Error::EnumerationCap { requested: n, cap: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for EnumCap {
    fn default() -> Self {
        Self(Self::DEFAULT)
    }
}

/// One equiprobable Rademacher outcome; bit `k-1` set means `Z_k = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SignTuple {
    bits: u64,
    len: usize,
}

impl SignTuple {
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `Z_k`, 1-based.
    pub fn sign(&self, k: usize) -> f64 {
        if self.bits >> (k - 1) & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        (1..=self.len).map(|k| self.sign(k)).collect()
    }
}

/// Streaming iterator over all `2^N` sign tuples.
#[derive(Debug, Clone)]
pub struct RademacherOutcomes {
    len: usize,
    next: u64,
    end: u64,
}

impl Iterator for RademacherOutcomes {
    type Item = SignTuple;

    fn next(&mut self) -> Option<SignTuple> {
        if self.next == self.end {
            return None;
        }
        let t = SignTuple { bits: self.next, len: self.len };
        self.next += 1;
        Some(t)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.end - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for RademacherOutcomes {}

/// All `2^n` equiprobable sign tuples, streamed.
pub fn enumerate_rademacher(n: usize, cap: EnumCap) -> Result<RademacherOutcomes> {
    cap.check(n)?;
    Ok(RademacherOutcomes { len: n, next: 0, end: 1u64 << n })
}

/// Non-random change of sign `ε_n ∈ {-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignPattern {
    signs: Vec<i8>,
}

impl SignPattern {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if let Some(bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(invalid(format!("sign pattern entries must be ±1, found {bad}")));
        }
        Ok(Self { signs })
    }

    pub fn constant(sign: i8, len: usize) -> Result<Self> {
        Self::new(vec![sign; len])
    }

    pub fn alternating(len: usize) -> Self {
        Self { signs: (0..len).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect() }
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        Self { signs: (1..=len).map(|n| if f(n) { 1 } else { -1 }).collect() }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// `ε_n`, 1-based.
    pub fn get(&self, n: usize) -> f64 {
        self.signs[n - 1] as f64
    }
}

/// Indexed outcome source shared by the exact and Monte Carlo kernels:
/// sign masks `0..2^count` or replica streams `first..first+replicas`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcomes {
    spec: InnovationSpec,
    count: usize,
    mode: OutcomeMode,
}

#[derive(Debug, Clone, Copy)]
enum OutcomeMode {
    Enumerate,
    Sample { replicas: u64, seed: u64, first_stream: u64 },
}

impl Outcomes {
    pub(crate) fn new(spec: &InnovationSpec, count: usize, method: crate::stats::Method) -> Result<Self> {
        let mode = match method {
            crate::stats::Method::Exact(cap) => {
                spec.require_enumerable()?;
                cap.check(count)?;
                OutcomeMode::Enumerate
            }
            crate::stats::Method::MonteCarlo { replicas, seed } => {
                method.check_replicas()?;
                OutcomeMode::Sample { replicas, seed, first_stream: 0 }
            }
        };
        Ok(Self { spec: *spec, count, mode })
    }

    /// Same replicas shifted to streams `offset..offset+replicas`.
    pub(crate) fn shifted(mut self, offset: u64) -> Self {
        if let OutcomeMode::Sample { first_stream, .. } = &mut self.mode {
            *first_stream += offset;
        }
        self
    }

    pub(crate) fn is_exact(&self) -> bool {
        matches!(self.mode, OutcomeMode::Enumerate)
    }

    pub(crate) fn len(&self) -> u64 {
        match self.mode {
            OutcomeMode::Enumerate => 1u64 << self.count,
            OutcomeMode::Sample { replicas, .. } => replicas,
        }
    }

    pub(crate) fn get(&self, i: u64) -> Innovations {
        match self.mode {
            OutcomeMode::Enumerate => self.spec.from_sign_mask(i, self.count),
            OutcomeMode::Sample { seed, first_stream, .. } => {
                sample_innovations(&self.spec, self.count, seed, first_stream + i)
            }
        }
    }
}

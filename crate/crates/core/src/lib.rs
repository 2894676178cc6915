//! Convergence criteria and maximal-inequality checks for random series
//! `Σ_n X_n` with `X_n = Σ_{k<=n} a(n,k) Z_k` driven by independent
//! symmetric innovations.
//!
//! Deterministic quantities live in [`coeffs`], covariance factorization in
//! [`covfactor`]. [`simulate`], [`adaptive`] and [`stoptime`] check the
//! maximal inequalities either exactly, by enumerating all Rademacher sign
//! outcomes, or by seeded Monte Carlo whose result does not depend on the
//! number of worker threads.

pub mod adaptive;
pub mod catalog;
pub mod coeffs;
pub mod covfactor;
mod error;
pub mod innovations;
pub mod io;
pub mod simulate;
pub mod stats;
pub mod stoptime;
pub mod sum;

pub use coeffs::{CoefficientMatrix, ConvergenceFlag, EntryLaw, Support, TailPolicy, VectorWeights};
pub use error::{Error, Result};
pub use innovations::{EnumCap, Embedding, InnovationLaw, InnovationSpec, Innovations, SignPattern};
pub use simulate::{SeriesModel, SeriesPath};
pub use stats::{BoundReport, McEstimate, Method, Verdict};

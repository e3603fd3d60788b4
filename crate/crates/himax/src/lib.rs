//! Independence testing for high-dimensional data via maximum pairwise
//! sample correlations.
//!
//! The crate provides three layers:
//!
//! * [`statistics`] computes the test statistics from an `n x p` data
//!   matrix: the maximum absolute pairwise correlation, a split-half
//!   variant with a faster-converging null distribution, general
//!   `d`-block cross-product norm statistics, and the mutual coherence
//!   of a dictionary.
//! * [`approximations`] evaluates the null distributions of those
//!   statistics: two Gumbel-type limits and a pre-limit ("intermediate")
//!   chi-square tail form that is far more accurate at finite dimension,
//!   together with critical values, p-values, and the gap between the
//!   two approximations.
//! * [`montecarlo`] estimates actual significance levels under the null
//!   by simulation, with deterministic per-replication random streams so
//!   results are reproducible bit-for-bit at any thread count.
//!
//! [`coherence`] applies the intermediate approximation to random
//! dictionaries: it certifies, with probability `1 - alpha`, a sparsity
//! level below which l0 and l1 recovery coincide.
//!
//! All numeric kernels live in [`numerics`]. Logarithms follow the
//! clipped convention `log x = ln max(x, e)` throughout, so centering
//! constants stay finite and ordered even for very small dimensions.

pub mod approximations;
pub mod coherence;
pub mod montecarlo;
pub mod numerics;
pub mod statistics;

mod error;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

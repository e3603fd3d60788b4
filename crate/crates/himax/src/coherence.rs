//! Probabilistic sparsity certificates for random dictionaries.
//!
//! For an `n x p` dictionary with independent centered entries, the
//! intermediate approximation bounds the mutual coherence `M`: with
//! probability at least `1 - alpha`,
//! `M <= 1/m_alpha` where `m_alpha = sqrt(n / (y_alpha + 4 log p - log log p))`
//! and `y_alpha` solves the intermediate CDF at level `1 - alpha`.
//! Whenever that bound holds, every vector with fewer than
//! `(1 + m_alpha)/2` nonzeros is simultaneously the unique l0 and the
//! unique l1 solution of `Ax = b`, so the convex program certifiably
//! recovers the sparsest representation.
//!
//! Columns are used raw (normalized by their Euclidean norms, never
//! demeaned), matching how the coherence of a dictionary is defined.

use crate::approximations::{critical_value, ApproxKind, ApproxParams};
use crate::statistics::{mutual_coherence, DataMatrix};
use crate::{Error, Result};
use serde::Serialize;

/// A sparsity certificate for Gaussian-like random `n x p` dictionaries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceCertificate {
    pub n: usize,
    pub p: usize,
    /// Allowed failure probability.
    pub alpha: f64,
    /// Critical value of the intermediate approximation (d = 1).
    pub y_alpha: f64,
    /// Lower bound on `1/M` holding with probability `1 - alpha`.
    pub m_alpha: f64,
    /// Vectors with fewer than this many nonzeros are certified:
    /// `(1 + m_alpha)/2`.
    pub sparsity_threshold: f64,
    /// True when the threshold is below 1, i.e. only the zero vector is
    /// certified and the certificate carries no usable guarantee.
    pub trivial: bool,
}

/// Result of checking one concrete dictionary against a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherenceCheck {
    /// Mutual coherence of the dictionary.
    pub coherence: f64,
    /// Pair of columns attaining it.
    pub pair: (usize, usize),
    /// The certified bound `1/m_alpha`.
    pub bound: f64,
    /// Whether `coherence^2 <= (y_alpha + alpha_p)/n` held.
    pub bound_holds: bool,
}

/// Build the certificate for an `n x p` dictionary at level `alpha`.
pub fn certify(n: usize, p: usize, alpha: f64) -> Result<CoherenceCertificate> {
    if n < 4 || p < 2 {
        return Err(Error::TooSmall {
            n,
            p,
            min_n: 4,
            min_p: 2,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let params = ApproxParams::new(p, n, 1)?;
    let y_alpha = critical_value(&params, ApproxKind::ChiSquareIntermediate, alpha)?;
    let radicand = y_alpha + params.alpha_p;
    if radicand <= 0.0 {
        return Err(Error::InfeasibleCertificate { radicand });
    }
    let m_alpha = (n as f64 / radicand).sqrt();
    let sparsity_threshold = 0.5 * (1.0 + m_alpha);
    Ok(CoherenceCertificate {
        n,
        p,
        alpha,
        y_alpha,
        m_alpha,
        sparsity_threshold,
        trivial: sparsity_threshold < 1.0,
    })
}

/// Compute the coherence of a concrete dictionary and test it against
/// the certified bound.
pub fn verify_on_sample(
    dictionary: &DataMatrix,
    certificate: &CoherenceCertificate,
) -> Result<CoherenceCheck> {
    if dictionary.n_rows() != certificate.n || dictionary.n_cols() != certificate.p {
        return Err(Error::CertificateShapeMismatch {
            rows: dictionary.n_rows(),
            cols: dictionary.n_cols(),
            n: certificate.n,
            p: certificate.p,
        });
    }
    let (coherence, pair) = mutual_coherence(dictionary)?;
    let params = ApproxParams::new(certificate.p, certificate.n, 1)?;
    let limit_sq = (certificate.y_alpha + params.alpha_p) / certificate.n as f64;
    Ok(CoherenceCheck {
        coherence,
        pair,
        bound: limit_sq.sqrt(),
        bound_holds: coherence * coherence <= limit_sq,
    })
}

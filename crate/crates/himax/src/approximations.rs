//! Null-distribution approximations, critical values, and p-values.
//!
//! Two kinds of approximation are available for each statistic:
//!
//! * Gumbel-type limits, `exp(-c e^{-y/2})` with `c = 1/2` for the
//!   split-half statistic and `c = 1/sqrt(8 pi)` for the max-correlation
//!   statistic; and
//! * the "intermediate" pre-limit form
//!   `exp(-((p^2 - p)/2) P(chi2(d) >= alpha_p + y))`, which keeps the
//!   dimension `p` explicit and converges to the matching limit as
//!   `p` grows.
//!
//! The default pairing routes the split-half statistic to its Gumbel
//! limit and the max-correlation statistic to the intermediate form with
//! `d = 1`; general block statistics always use the intermediate form
//! with their own `d`.

use crate::numerics::{chi2_sf, clog, clog2, solve_monotone};
use crate::statistics::{StatKind, StatValue};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Shape parameters for the intermediate approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxParams {
    pub p: usize,
    pub n: usize,
    pub d: u32,
    /// Centering constant `4 log p - (2 - d) log log p` (clipped logs).
    pub alpha_p: f64,
}

impl ApproxParams {
    pub fn new(p: usize, n: usize, d: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidConfig(format!("dimension p must be >= 2, got {p}")));
        }
        if n < 1 {
            return Err(Error::InvalidConfig("sample size n must be >= 1".into()));
        }
        if d == 0 {
            return Err(Error::ZeroDof);
        }
        Ok(Self {
            p,
            n,
            d,
            alpha_p: crate::numerics::alpha_p(p, d),
        })
    }
}

/// Which approximation to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApproxKind {
    /// Gumbel limit `exp(-(1/2) e^{-y/2})` for the split-half statistic.
    SplitHalfLimit,
    /// Gumbel limit `exp(-e^{-y/2}/sqrt(8 pi))` for the max correlation.
    MaxCorrLimit,
    /// Chi-square tail form `exp(-((p^2-p)/2) P(chi2(d) >= alpha_p + y))`.
    ChiSquareIntermediate,
}

impl ApproxKind {
    pub fn name(self) -> &'static str {
        match self {
            ApproxKind::SplitHalfLimit => "split_half_limit",
            ApproxKind::MaxCorrLimit => "max_corr_limit",
            ApproxKind::ChiSquareIntermediate => "chi_square_intermediate",
        }
    }
}

impl fmt::Display for ApproxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The approximation a statistic is tested against unless the caller
/// asks otherwise: the intermediate form for every statistic, with the
/// Gumbel limits available on request. At finite `p` the intermediate
/// form is uniformly the more accurate calibration.
pub fn default_pairing(kind: StatKind) -> ApproxKind {
    match kind {
        StatKind::MaxCorr
        | StatKind::SplitHalf
        | StatKind::BlockNorm
        | StatKind::SelfNormalizedBlock => ApproxKind::ChiSquareIntermediate,
    }
}

#[inline]
fn sqrt_8pi() -> f64 {
    (8.0 * PI).sqrt()
}

fn pair_count(p: usize) -> f64 {
    // (p^2 - p)/2 ordered to stay exact for large p.
    0.5 * p as f64 * (p as f64 - 1.0)
}

/// Exponential rate `lambda` with `cdf = exp(-lambda)`.
fn tail_rate(params: &ApproxParams, kind: ApproxKind, y: f64) -> f64 {
    match kind {
        ApproxKind::SplitHalfLimit => 0.5 * (-0.5 * y).exp(),
        ApproxKind::MaxCorrLimit => (-0.5 * y).exp() / sqrt_8pi(),
        ApproxKind::ChiSquareIntermediate => {
            let x = params.alpha_p + y;
            if x.is_nan() {
                f64::NAN
            } else if x == f64::INFINITY {
                0.0
            } else if x == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                // d >= 1 and x finite, so the kernel cannot fail.
                pair_count(params.p) * chi2_sf(params.d, x).expect("validated params")
            }
        }
    }
}

/// CDF of the split-half Gumbel limit, `exp(-(1/2) e^{-y/2})`.
pub fn split_half_limit_cdf(y: f64) -> f64 {
    (-0.5 * (-0.5 * y).exp()).exp()
}

/// CDF of the max-correlation Gumbel limit, `exp(-e^{-y/2}/sqrt(8 pi))`.
pub fn max_corr_limit_cdf(y: f64) -> f64 {
    (-(-0.5 * y).exp() / sqrt_8pi()).exp()
}

/// CDF of the intermediate approximation at the given parameters.
pub fn intermediate_cdf(params: &ApproxParams, y: f64) -> f64 {
    (-tail_rate(params, ApproxKind::ChiSquareIntermediate, y)).exp()
}

/// CDF of any approximation kind.
pub fn cdf(params: &ApproxParams, kind: ApproxKind, y: f64) -> f64 {
    (-tail_rate(params, kind, y)).exp()
}

/// Critical value `y_alpha` with `cdf(y_alpha) = 1 - alpha`.
///
/// Closed-form inversion for the two limits; bracketed root solving for
/// the intermediate form, keeping the chi-square argument nonnegative.
pub fn critical_value(params: &ApproxParams, kind: ApproxKind, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let target = 1.0 - alpha;
    match kind {
        ApproxKind::SplitHalfLimit => Ok(-2.0 * (-2.0 * target.ln()).ln()),
        ApproxKind::MaxCorrLimit => Ok(-2.0 * (-sqrt_8pi() * target.ln()).ln()),
        ApproxKind::ChiSquareIntermediate => solve_monotone(
            |y| intermediate_cdf(params, y),
            target,
            -params.alpha_p + 1e-8,
            params.alpha_p + 100.0,
        ),
    }
}

fn check_pairing(stat: &StatValue, kind: ApproxKind, params: &ApproxParams) -> Result<()> {
    let ok = match (stat.kind, kind) {
        (StatKind::SplitHalf, ApproxKind::SplitHalfLimit) => true,
        (StatKind::MaxCorr, ApproxKind::MaxCorrLimit) => true,
        (
            StatKind::SplitHalf | StatKind::MaxCorr | StatKind::BlockNorm
            | StatKind::SelfNormalizedBlock,
            ApproxKind::ChiSquareIntermediate,
        ) => params.d == stat.d && params.p == stat.p,
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::IncompatibleApprox {
            statistic: stat.kind.name(),
            approx: kind.name(),
            detail: format!(
                " (statistic has d = {}, p = {}; params have d = {}, p = {})",
                stat.d, stat.p, params.d, params.p
            ),
        })
    }
}

/// Upper-tail p-value `1 - cdf(observed)` under the chosen approximation.
pub fn p_value(stat: &StatValue, kind: ApproxKind, params: &ApproxParams) -> Result<f64> {
    check_pairing(stat, kind, params)?;
    let lambda = tail_rate(params, kind, stat.value);
    // 1 - e^{-lambda} without cancellation for small lambda.
    Ok(-(-lambda).exp_m1())
}

/// The gap between the intermediate approximation (`d = 1`, `n` taken
/// equal to `p`) and the max-correlation Gumbel limit, plus the
/// first-order prediction `log log n / (8 log n) * (1/sqrt(8 pi))
/// * exp(-y/2 - e^{-y/2}/sqrt(8 pi))` for its size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateGap {
    /// `intermediate_cdf(d = 1, p, y) - max_corr_limit_cdf(y)`.
    pub exact: f64,
    /// First-order prediction evaluated at `n = p`.
    pub predicted: f64,
}

impl RateGap {
    pub fn ratio(&self) -> f64 {
        self.exact / self.predicted
    }
}

/// Evaluate the approximation gap and its predicted size at dimension
/// `p` (needs `p >= 3` so the clipped logs are nontrivial).
pub fn rate_gap(p: usize, y: f64) -> Result<RateGap> {
    if p < 3 {
        return Err(Error::InvalidConfig(format!("rate gap needs p >= 3, got {p}")));
    }
    if !y.is_finite() {
        return Err(Error::NonFinite {
            context: "rate_gap",
            value: y,
        });
    }
    let params = ApproxParams::new(p, p, 1)?;
    let lambda_limit = (-0.5 * y).exp() / sqrt_8pi();
    let lambda_intermediate = tail_rate(&params, ApproxKind::ChiSquareIntermediate, y);
    // exp(-li) - exp(-ll) = exp(-ll) * expm1(ll - li), which keeps the
    // gap accurate when the two rates nearly coincide at large p.
    let exact = (-lambda_limit).exp() * (lambda_limit - lambda_intermediate).exp_m1();
    let nf = p as f64;
    let predicted = clog2(nf) / (8.0 * clog(nf)) / sqrt_8pi() * (-0.5 * y - lambda_limit).exp();
    Ok(RateGap { exact, predicted })
}

//! Scalar numeric kernels shared by every other module: the clipped
//! logarithm convention, chi-square and standard-normal upper tails, and
//! a bracketed root solver for monotone functions.
//!
//! Everything here is a pure function of its arguments and safe to call
//! from any number of threads.

use crate::{Error, Result};
use std::f64::consts::{E, FRAC_1_SQRT_2};

const MAX_ITER: usize = 400;
const BISECT_STEPS: usize = 200;
const SOLVE_TOL: f64 = 1e-10;

/// Clipped natural logarithm, `ln(max(x, e))`.
///
/// Always at least 1, which keeps iterated logarithms and the centering
/// constants built from them finite and ordered for tiny arguments.
pub fn clipped_log(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "clipped_log",
            value: x,
        });
    }
    Ok(clog(x))
}

/// Iterated clipped logarithm, `clipped_log(clipped_log(x))`.
pub fn clipped_log_log(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "clipped_log_log",
            value: x,
        });
    }
    Ok(clog2(x))
}

/// Infallible clipped log for arguments already known to be finite.
#[inline]
pub(crate) fn clog(x: f64) -> f64 {
    // ln is within 1 ulp; pin the x <= e plateau to exactly 1.
    let v = x.max(E).ln();
    if v < 1.0 {
        1.0
    } else {
        v
    }
}

#[inline]
pub(crate) fn clog2(x: f64) -> f64 {
    clog(clog(x))
}

/// Centering constant `4 log p - (2 - d) log log p` under the clipped
/// log convention.
pub(crate) fn alpha_p(p: usize, d: u32) -> f64 {
    let pf = p as f64;
    4.0 * clog(pf) - (2.0 - f64::from(d)) * clog2(pf)
}

/// Upper tail of the chi-square distribution with `d` degrees of
/// freedom, `P(chi2(d) >= x)`.
///
/// Evaluated as the regularized upper incomplete gamma `Q(d/2, x/2)`:
/// series expansion of the lower tail when `x < d + 1`, Lentz continued
/// fraction of the upper tail otherwise. Returns 1 for `x <= 0`.
pub fn chi2_sf(d: u32, x: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::ZeroDof);
    }
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "chi2_sf",
            value: x,
        });
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    let a = 0.5 * f64::from(d);
    let s = 0.5 * x;
    // Split at x < d + 1, i.e. s < a + 0.5; both regions converge there.
    if x < f64::from(d) + 1.0 {
        Ok(1.0 - gamma_p_series(a, s))
    } else {
        Ok(gamma_q_cf(a, s))
    }
}

/// log of the prefactor e^{-s} s^a / Gamma(a).
#[inline]
fn gamma_log_prefactor(a: f64, s: f64) -> f64 {
    -s + a * s.ln() - libm::lgamma(a)
}

/// Lower regularized incomplete gamma P(a, s) by power series.
fn gamma_p_series(a: f64, s: f64) -> f64 {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= s / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            break;
        }
    }
    gamma_log_prefactor(a, s).exp() * sum
}

/// Upper regularized incomplete gamma Q(a, s) by modified Lentz
/// continued fraction (Thompson–Barnett).
fn gamma_q_cf(a: f64, s: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = s + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / if b.abs() < TINY { TINY } else { b };
    let mut h = d;
    for k in 1..=MAX_ITER {
        let kf = k as f64;
        let an = kf * (a - kf);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    gamma_log_prefactor(a, s).exp() * h
}

/// Standard normal upper tail `1 - Phi(x)`.
pub fn normal_sf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: "normal_sf",
            value: x,
        });
    }
    Ok(0.5 * libm::erfc(x * FRAC_1_SQRT_2))
}

/// Solve `f(y) = target` for a function monotone on `[lo, hi]`.
///
/// Bracketed bisection; stops once `|f(y) - target| <= 1e-10` or the
/// bracket is exhausted. Works for increasing or decreasing `f`.
pub fn solve_monotone<F>(f: F, target: f64, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    let increasing = f_hi >= f_lo;
    let below = |v: f64| if increasing { v <= target } else { v >= target };
    let above = |v: f64| if increasing { v >= target } else { v <= target };
    if !below(f_lo) || !above(f_hi) {
        return Err(Error::TargetOutsideBracket { target, f_lo, f_hi });
    }
    if (f_lo - target).abs() <= SOLVE_TOL {
        return Ok(lo);
    }
    if (f_hi - target).abs() <= SOLVE_TOL {
        return Ok(hi);
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..BISECT_STEPS {
        mid = 0.5 * (lo + hi);
        let v = f(mid);
        if (v - target).abs() <= SOLVE_TOL {
            return Ok(mid);
        }
        if below(v) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
    }
    Ok(mid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipped_log_plateau_is_exactly_one() {
        assert_eq!(clipped_log(0.5).unwrap(), 1.0);
        assert_eq!(clipped_log(-3.0).unwrap(), 1.0);
        assert_eq!(clipped_log(E).unwrap(), 1.0);
        assert_eq!(clipped_log(0.0).unwrap(), 1.0);
    }

    #[test]
    fn clipped_log_matches_ln_above_e() {
        assert!((clipped_log(E * E).unwrap() - 2.0).abs() < 1e-15);
        assert!((clipped_log(4.0).unwrap() - 1.3862943611198906).abs() < 1e-15);
    }

    #[test]
    fn clipped_log_rejects_non_finite() {
        assert!(clipped_log(f64::NAN).is_err());
        assert!(clipped_log(f64::INFINITY).is_err());
        assert!(clipped_log_log(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn clipped_log_is_non_decreasing() {
        let mut prev = f64::NEG_INFINITY;
        let mut x = -5.0;
        while x < 100.0 {
            let v = clipped_log(x).unwrap();
            assert!(v >= prev, "clipped_log not monotone at {x}");
            assert!(v >= 1.0);
            prev = v;
            x += 0.17;
        }
    }

    #[test]
    fn iterated_log_chains() {
        let x = 1234.5;
        let once = clipped_log(x).unwrap();
        assert_eq!(clipped_log_log(x).unwrap(), clipped_log(once).unwrap());
        // ln 4 < e, so the second log clips to 1.
        assert_eq!(clipped_log_log(4.0).unwrap(), 1.0);
    }

    #[test]
    fn chi2_sf_at_zero_and_below() {
        assert_eq!(chi2_sf(2, 0.0).unwrap(), 1.0);
        assert_eq!(chi2_sf(1, -4.0).unwrap(), 1.0);
        assert_eq!(chi2_sf(7, -0.0).unwrap(), 1.0);
    }

    #[test]
    fn chi2_sf_two_dof_is_exponential() {
        // Closed form e^{-x/2}; x = -2 ln 0.05 maps to exactly 0.05.
        let x = -2.0 * 0.05f64.ln();
        let got = chi2_sf(2, x).unwrap();
        assert!((got - 0.05).abs() / 0.05 < 1e-12, "got {got}");
        for k in 1..60 {
            let x = 0.7 * k as f64;
            let exact = (-0.5 * x).exp();
            let got = chi2_sf(2, x).unwrap();
            assert!(
                ((got - exact) / exact).abs() < 1e-12,
                "x={x}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn chi2_sf_one_dof_reference_value() {
        // 2(1 - Phi(1)) = 0.31731050786291410
        let got = chi2_sf(1, 1.0).unwrap();
        assert!(((got - 0.31731050786291410) / got).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn chi2_sf_rejects_bad_arguments() {
        assert!(matches!(chi2_sf(0, 1.0), Err(Error::ZeroDof)));
        assert!(chi2_sf(3, f64::NAN).is_err());
    }

    #[test]
    fn chi2_sf_strictly_decreasing() {
        for d in [1u32, 2, 3, 7, 20] {
            let mut prev = 1.0;
            for k in 1..=120 {
                let x = 0.5 * k as f64;
                let v = chi2_sf(d, x).unwrap();
                assert!(v < prev, "chi2_sf({d}, {x}) not decreasing");
                assert!(v > 0.0 && v <= 1.0);
                prev = v;
            }
        }
    }

    #[test]
    fn chi2_sf_one_dof_matches_normal_tail() {
        for k in 1..=80 {
            let x = 0.5 * k as f64;
            let via_normal = 2.0 * normal_sf(x.sqrt()).unwrap();
            let direct = chi2_sf(1, x).unwrap();
            assert!(
                ((direct - via_normal) / via_normal).abs() < 1e-12,
                "x={x}: {direct} vs {via_normal}"
            );
        }
    }

    #[test]
    fn chi2_sf_one_dof_mills_sandwich() {
        // For y = sqrt(x): (2/(sqrt(2 pi) y))(1 - 1/y^2) e^{-x/2}
        //   <= P(chi2(1) >= x) <= (2/(sqrt(2 pi) y)) e^{-x/2}
        let c = 2.0 / (2.0 * std::f64::consts::PI).sqrt();
        for x in [10.0f64, 20.0, 40.0] {
            let y = x.sqrt();
            let upper = c / y * (-0.5 * x).exp();
            let lower = upper * (1.0 - 1.0 / x);
            let v = chi2_sf(1, x).unwrap();
            assert!(v <= upper && v >= lower, "x={x}: {lower} <= {v} <= {upper}");
        }
    }

    #[test]
    fn chi2_sf_large_x_underflows_cleanly() {
        let v = chi2_sf(1, 3000.0).unwrap();
        assert!(v >= 0.0 && v < 1e-300 && !v.is_nan());
    }

    #[test]
    fn chi2_sf_matches_tail_asymptotics() {
        // P(chi2(d) >= x) ~ 2^{1-d/2} Gamma(d/2)^{-1} x^{d/2-1} e^{-x/2}
        // as x grows; the ratio must be near 1 and improving. Gamma at
        // half-integers is exact: sqrt(pi), 1, sqrt(pi)/2, 1, 15 sqrt(pi)/8.
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for (d, gamma_half) in [
            (1u32, sqrt_pi),
            (2, 1.0),
            (3, 0.5 * sqrt_pi),
            (4, 1.0),
            (7, 15.0 * sqrt_pi / 8.0),
        ] {
            let asymptotic = |x: f64| {
                2f64.powf(1.0 - 0.5 * f64::from(d)) / gamma_half
                    * x.powf(0.5 * f64::from(d) - 1.0)
                    * (-0.5 * x).exp()
            };
            let r100 = chi2_sf(d, 100.0).unwrap() / asymptotic(100.0);
            let r400 = chi2_sf(d, 400.0).unwrap() / asymptotic(400.0);
            assert!((r100 - 1.0).abs() < 0.1, "d={d}: ratio at 100 is {r100}");
            // At d = 2 the asymptotic form is exact, so there is nothing
            // left to improve beyond rounding noise.
            assert!(
                (r400 - 1.0).abs() < (r100 - 1.0).abs().max(1e-12),
                "d={d}: ratio not improving ({r100} -> {r400})"
            );
        }
    }

    #[test]
    fn normal_sf_reference_values() {
        assert_eq!(normal_sf(0.0).unwrap(), 0.5);
        // z_{0.975} rounded to 1e-6; tail derivative is ~0.058, so 1e-8 slack.
        assert!((normal_sf(1.959964).unwrap() - 0.025).abs() < 1e-8);
        let far = normal_sf(40.0).unwrap();
        assert!(far < 1e-300 && far >= 0.0 && !far.is_nan());
        assert!(normal_sf(f64::NAN).is_err());
    }

    #[test]
    fn normal_sf_symmetry() {
        for k in 0..40 {
            let x = 0.2 * k as f64;
            let a = normal_sf(x).unwrap();
            let b = normal_sf(-x).unwrap();
            assert!((a + b - 1.0).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn solve_monotone_identity() {
        let y = solve_monotone(|y| y, 3.0, 0.0, 10.0).unwrap();
        assert!((y - 3.0).abs() < 1e-9);
    }

    #[test]
    fn solve_monotone_decreasing_exponential() {
        // f(y) = e^{-y/2}, target 0.1025866 -> y = -2 ln target.
        let target = 0.1025866;
        let y = solve_monotone(|y| (-0.5 * y).exp(), target, 0.0, 20.0).unwrap();
        assert!((y - (-2.0 * target.ln())).abs() < 1e-8, "got {y}");
        assert!(((-0.5 * y).exp() - target).abs() <= 1e-10);
    }

    #[test]
    fn solve_monotone_inverts_chi2_tail() {
        let y = solve_monotone(|y| chi2_sf(2, y).unwrap(), 0.05, 0.0, 50.0).unwrap();
        assert!((y - 5.991464547107982).abs() < 1e-8, "got {y}");
    }

    #[test]
    fn solve_monotone_requires_bracketed_target() {
        let err = solve_monotone(|y| y, 30.0, 0.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::TargetOutsideBracket { .. }));
        let err = solve_monotone(|y| -y, 5.0, 0.0, 10.0).unwrap_err();
        assert!(matches!(err, Error::TargetOutsideBracket { .. }));
    }

    #[test]
    fn solve_monotone_round_trips() {
        for (target, lo, hi) in [(0.3, 0.0, 50.0), (0.9, 0.0, 50.0), (0.01, 0.0, 80.0)] {
            let f = |y: f64| chi2_sf(3, y).unwrap();
            let y = solve_monotone(f, target, lo, hi).unwrap();
            assert!((f(y) - target).abs() <= 1e-9);
        }
    }
}

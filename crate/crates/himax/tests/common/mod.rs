//! Independent oracles for the integration suites.
//!
//! Everything here deliberately avoids the implementation paths it
//! checks: tails come from compensated Simpson quadrature of the normal
//! density, statistics from exact rational arithmetic over integer
//! data or from direct textbook loops.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

/// Standard normal upper tail by compensated composite Simpson over
/// [x, x + 20]; the truncated mass is a factor ~e^{-20x-200} of the
/// tail, far below double precision for x >= 0.
pub fn normal_tail_quadrature(x: f64) -> f64 {
    assert!(x >= 0.0, "oracle covers the upper half line");
    let steps = 1 << 20;
    let width = 20.0;
    let h = width / steps as f64;
    let density = |t: f64| (-0.5 * t * t).exp();
    // Kahan summation keeps the million-term sum at full precision.
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    let mut add = |v: f64| {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    };
    add(density(x));
    add(density(x + width));
    for k in 1..steps {
        let t = x + h * k as f64;
        add(if k % 2 == 1 { 4.0 * density(t) } else { 2.0 * density(t) });
    }
    sum * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt()
}

/// Chi-square upper tail for one degree of freedom via the quadrature
/// oracle: P(chi2(1) >= x) = 2 P(Z >= sqrt(x)).
pub fn chi2_tail_1dof_quadrature(x: f64) -> f64 {
    assert!(x >= 0.0);
    2.0 * normal_tail_quadrature(x.sqrt())
}

fn big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

fn usize_big(v: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact rational pair scan over an integer matrix given as columns:
/// returns (max squared correlation, max split-half r^2), both exact.
pub fn exact_pair_maxima(columns: &[Vec<i64>]) -> (BigRational, BigRational) {
    let p = columns.len();
    let n = columns[0].len();
    let half = n / 2;
    let nf = usize_big(n);
    // Demeaned entries as exact rationals.
    let centered: Vec<Vec<BigRational>> = columns
        .iter()
        .map(|col| {
            let mean = col.iter().map(|&v| big(v)).sum::<BigRational>() / nf.clone();
            col.iter().map(|&v| big(v) - mean.clone()).collect()
        })
        .collect();
    let ssq: Vec<BigRational> = centered
        .iter()
        .map(|col| col.iter().map(|v| v * v).sum())
        .collect();
    let mut max_corr = BigRational::zero();
    let mut max_split = BigRational::zero();
    for i in 0..p {
        assert!(ssq[i].is_positive(), "degenerate oracle column");
        for j in (i + 1)..p {
            let a: BigRational = (0..half).map(|k| &centered[i][k] * &centered[j][k]).sum();
            let b: BigRational = (half..n).map(|k| &centered[i][k] * &centered[j][k]).sum();
            let denom = &ssq[i] * &ssq[j];
            let full = &a + &b;
            let corr = &full * &full / denom.clone();
            if corr > max_corr {
                max_corr = corr;
            }
            let split = (big(2) * (&a * &a + &b * &b)) / denom;
            if split > max_split {
                max_split = split;
            }
        }
    }
    (max_corr, max_split)
}

/// Exact rational maxima for the general block forms on integer blocks:
/// returns (max squared cross-product norm, max self-normalized ratio).
pub fn exact_block_maxima(blocks: &[Vec<Vec<i64>>]) -> (BigRational, BigRational) {
    let p = blocks[0].len();
    let n = blocks[0][0].len();
    let col_energy: Vec<BigRational> = (0..p)
        .map(|i| {
            blocks
                .iter()
                .map(|block| block[i].iter().map(|&v| big(v) * big(v)).sum::<BigRational>())
                .sum()
        })
        .collect();
    let mut max_norm = BigRational::zero();
    let mut max_ratio = BigRational::zero();
    for i in 0..p {
        for j in (i + 1)..p {
            let mut norm_sq = BigRational::zero();
            for block in blocks {
                let s: BigRational = (0..n).map(|k| big(block[i][k]) * big(block[j][k])).sum();
                norm_sq += &s * &s;
            }
            if norm_sq > max_norm {
                max_norm = norm_sq.clone();
            }
            let ratio = norm_sq / (&col_energy[i] * &col_energy[j]);
            if ratio > max_ratio {
                max_ratio = ratio;
            }
        }
    }
    (max_norm, max_ratio)
}

/// Exact rational mutual coherence squared (raw columns).
pub fn exact_coherence_sq(columns: &[Vec<i64>]) -> BigRational {
    let p = columns.len();
    let n = columns[0].len();
    let norm_sq: Vec<BigRational> = columns
        .iter()
        .map(|col| col.iter().map(|&v| big(v) * big(v)).sum())
        .collect();
    let mut max_sq = BigRational::zero();
    for i in 0..p {
        for j in (i + 1)..p {
            let g: BigRational = (0..n).map(|k| big(columns[i][k]) * big(columns[j][k])).sum();
            let ratio = &g * &g / (&norm_sq[i] * &norm_sq[j]);
            if ratio > max_sq {
                max_sq = ratio;
            }
        }
    }
    max_sq
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("rational fits in f64")
}

/// Textbook two-pass Pearson correlation.
pub fn naive_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        dx += (a - mx) * (a - mx);
        dy += (b - my) * (b - my);
    }
    num / (dx * dy).sqrt()
}

/// Naive float evaluation of the max absolute correlation, independent
/// of the library's shared scan.
pub fn naive_max_abs_correlation(columns: &[Vec<f64>]) -> f64 {
    let p = columns.len();
    let mut best = 0.0f64;
    for i in 0..p {
        for j in (i + 1)..p {
            best = best.max(naive_pearson(&columns[i], &columns[j]).abs());
        }
    }
    best
}

//! Test statistics computed from data.
//!
//! The core quantities for an `n x p` matrix (rows = observations,
//! columns = variates), all demeaned by full-sample column means:
//!
//! * maximum absolute pairwise correlation over all column pairs;
//! * its centered statistic `n * corr^2 - 4 log p + log log p`;
//! * the split-half statistic `n * max r^2 - 4 log p`, where `r^2`
//!   distributes the cross-products over the two halves of the sample,
//!   `r^2 = 2(A^2 + B^2) / D`, with `A` summing rows `1..=floor(n/2)`,
//!   `B` the remaining rows, and `D` the product of full-sample centered
//!   sums of squares;
//! * general `d`-block forms built from raw (undemeaned) cross-products
//!   across `d` equally shaped blocks;
//! * the mutual coherence of a dictionary (raw columns, no demeaning).
//!
//! Pair scans are direct `O(p^2 n)` loops over the defining formulas.
//! Ties in the arg-max break toward the smallest `(i, j)` in
//! lexicographic order, so results do not depend on evaluation order.

use crate::numerics::{alpha_p, clog, clog2};
use crate::{Error, Result};
use serde::Serialize;
use std::fmt;
use std::path::Path;

/// An `n x p` observation matrix stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    cols: Vec<f64>,
}

impl DataMatrix {
    /// Build from observation rows. Every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::BadShape("no rows".into()));
        }
        let p = rows[0].len();
        if p == 0 {
            return Err(Error::BadShape("rows are empty".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::BadShape(format!(
                    "row {} has {} fields, expected {}",
                    k + 1,
                    row.len(),
                    p
                )));
            }
        }
        let n = rows.len();
        let mut cols = vec![0.0; n * p];
        for (k, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                cols[i * n + k] = v;
            }
        }
        Ok(Self { n, p, cols })
    }

    /// Build from variate columns. Every column must have the same length.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::BadShape("no columns".into()));
        }
        let n = columns[0].len();
        if n == 0 {
            return Err(Error::BadShape("columns are empty".into()));
        }
        for (i, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::BadShape(format!(
                    "column {} has {} entries, expected {}",
                    i + 1,
                    col.len(),
                    n
                )));
            }
        }
        let p = columns.len();
        let mut cols = Vec::with_capacity(n * p);
        for col in columns {
            cols.extend_from_slice(col);
        }
        Ok(Self { n, p, cols })
    }

    /// Parse comma-separated text: one row per observation, one column
    /// per variate, `.` decimal separator, optional single header row
    /// (detected by a non-numeric first row).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut expected = None;
        let mut saw_header = false;
        for (line_idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if rows.is_empty() && !saw_header {
                // First content row: if any field fails to parse as a
                // finite number, treat the row as a header.
                if fields.iter().any(|f| !is_finite_number(f)) {
                    saw_header = true;
                    expected = Some(fields.len());
                    continue;
                }
            }
            if let Some(width) = expected {
                if fields.len() != width {
                    return Err(Error::CsvParse {
                        row: line_idx + 1,
                        column: fields.len().min(width) + 1,
                        message: format!("expected {} fields, found {}", width, fields.len()),
                    });
                }
            } else {
                expected = Some(fields.len());
            }
            let mut row = Vec::with_capacity(fields.len());
            for (col_idx, field) in fields.iter().enumerate() {
                match field.parse::<f64>() {
                    Ok(v) if v.is_finite() => row.push(v),
                    Ok(v) => {
                        return Err(Error::CsvParse {
                            row: line_idx + 1,
                            column: col_idx + 1,
                            message: format!("value {v} is not finite"),
                        })
                    }
                    Err(_) => {
                        return Err(Error::CsvParse {
                            row: line_idx + 1,
                            column: col_idx + 1,
                            message: format!("cannot parse {field:?} as a number"),
                        })
                    }
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::BadShape("no data rows".into()));
        }
        Self::from_rows(&rows)
    }

    /// Load a CSV file, as in [`DataMatrix::from_csv_str`].
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv_str(&text)
    }

    /// Adopt a column-major buffer of length `n * p` without copying.
    pub(crate) fn from_column_major(n: usize, p: usize, cols: Vec<f64>) -> Self {
        assert_eq!(cols.len(), n * p);
        Self { n, p, cols }
    }

    /// Number of observations (rows).
    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// Number of variates (columns).
    pub fn n_cols(&self) -> usize {
        self.p
    }

    /// One variate as a slice of its `n` observations.
    pub fn column(&self, i: usize) -> &[f64] {
        &self.cols[i * self.n..(i + 1) * self.n]
    }

    /// Entry at observation `row`, variate `col`.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.cols[col * self.n + row]
    }
}

fn is_finite_number(s: &str) -> bool {
    matches!(s.parse::<f64>(), Ok(v) if v.is_finite())
}

/// Which statistic a [`StatValue`] carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    /// `n * L^2 - 4 log p + log log p` with `L` the max absolute correlation.
    MaxCorr,
    /// `n * max r^2 - 4 log p` with `r^2` the split-half form.
    SplitHalf,
    /// `W^2 / n - alpha_p` with `W` the max block cross-product norm.
    BlockNorm,
    /// `d^2 n L^2 - alpha_p`, the self-normalized block form.
    SelfNormalizedBlock,
}

impl StatKind {
    pub fn name(self) -> &'static str {
        match self {
            StatKind::MaxCorr => "max_corr",
            StatKind::SplitHalf => "split_half",
            StatKind::BlockNorm => "block_norm",
            StatKind::SelfNormalizedBlock => "self_normalized_block",
        }
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A computed test statistic together with the shape it came from and
/// one pair attaining the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatValue {
    pub kind: StatKind,
    pub value: f64,
    pub n: usize,
    pub p: usize,
    /// Block count the statistic's null approximation uses: 1 for
    /// `MaxCorr`, 2 for `SplitHalf`, the block count for general forms.
    pub d: u32,
    /// Zero-based column pair attaining the maximum; smallest `(i, j)`
    /// in lexicographic order among exact ties.
    pub argmax_pair: (usize, usize),
}

/// Both pairwise maxima from one pass over the demeaned data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationScan {
    pub n: usize,
    pub p: usize,
    /// Max squared pairwise correlation and its pair.
    pub max_corr_sq: f64,
    pub max_corr_pair: (usize, usize),
    /// Max split-half `r^2 = 2(A^2 + B^2)/D` and its pair.
    pub max_split_sq: f64,
    pub max_split_pair: (usize, usize),
}

/// One pass over all column pairs, computing the squared-correlation
/// maximum and the split-half maximum together.
///
/// Needs `n >= 2`, `p >= 2`, and strictly positive column variances.
pub fn correlation_scan(data: &DataMatrix) -> Result<CorrelationScan> {
    let (n, p) = (data.n, data.p);
    if n < 2 || p < 2 {
        return Err(Error::TooSmall {
            n,
            p,
            min_n: 2,
            min_p: 2,
        });
    }
    // Demean by full-sample column means (two passes), then validate.
    let mut centered = vec![0.0; n * p];
    let mut ssq = vec![0.0; p];
    for i in 0..p {
        let col = data.column(i);
        let mean = col.iter().sum::<f64>() / n as f64;
        let out = &mut centered[i * n..(i + 1) * n];
        let mut s = 0.0;
        for (o, &v) in out.iter_mut().zip(col) {
            let c = v - mean;
            *o = c;
            s += c * c;
        }
        if s <= 0.0 {
            return Err(Error::DegenerateColumn {
                column: i,
                reason: "zero variance",
            });
        }
        ssq[i] = s;
    }
    let half = n / 2;
    let mut max_corr_sq = f64::NEG_INFINITY;
    let mut max_corr_pair = (0, 0);
    let mut max_split_sq = f64::NEG_INFINITY;
    let mut max_split_pair = (0, 0);
    for i in 0..p {
        let ci = &centered[i * n..(i + 1) * n];
        for j in (i + 1)..p {
            let cj = &centered[j * n..(j + 1) * n];
            let mut a = 0.0;
            for k in 0..half {
                a += ci[k] * cj[k];
            }
            let mut b = 0.0;
            for k in half..n {
                b += ci[k] * cj[k];
            }
            let denom = ssq[i] * ssq[j];
            let full = a + b;
            let corr_sq = full * full / denom;
            if corr_sq > max_corr_sq {
                max_corr_sq = corr_sq;
                max_corr_pair = (i, j);
            }
            let split_sq = 2.0 * (a * a + b * b) / denom;
            if split_sq > max_split_sq {
                max_split_sq = split_sq;
                max_split_pair = (i, j);
            }
        }
    }
    Ok(CorrelationScan {
        n,
        p,
        max_corr_sq,
        max_corr_pair,
        max_split_sq,
        max_split_pair,
    })
}

/// Maximum absolute pairwise correlation (full-sample demeaning) and one
/// pair attaining it.
pub fn max_abs_correlation(data: &DataMatrix) -> Result<(f64, (usize, usize))> {
    let scan = correlation_scan(data)?;
    Ok((scan.max_corr_sq.sqrt().min(1.0), scan.max_corr_pair))
}

/// Centered max-correlation statistic `n L^2 - 4 log p + log log p`.
pub fn max_corr_statistic(data: &DataMatrix) -> Result<StatValue> {
    let scan = correlation_scan(data)?;
    let pf = scan.p as f64;
    Ok(StatValue {
        kind: StatKind::MaxCorr,
        value: scan.n as f64 * scan.max_corr_sq - 4.0 * clog(pf) + clog2(pf),
        n: scan.n,
        p: scan.p,
        d: 1,
        argmax_pair: scan.max_corr_pair,
    })
}

/// Split-half statistic `n * max r^2 - 4 log p`. Needs `n >= 4` so both
/// halves are nonempty with computable variances.
pub fn split_half_statistic(data: &DataMatrix) -> Result<StatValue> {
    if data.n < 4 {
        return Err(Error::TooSmall {
            n: data.n,
            p: data.p,
            min_n: 4,
            min_p: 2,
        });
    }
    let scan = correlation_scan(data)?;
    let pf = scan.p as f64;
    Ok(StatValue {
        kind: StatKind::SplitHalf,
        value: scan.n as f64 * scan.max_split_sq - 4.0 * clog(pf),
        n: scan.n,
        p: scan.p,
        d: 2,
        argmax_pair: scan.max_split_pair,
    })
}

/// `d` equally shaped `n x p` blocks of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSample {
    blocks: Vec<DataMatrix>,
}

impl BlockSample {
    pub fn new(blocks: Vec<DataMatrix>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::BadShape("block sample needs at least one block".into()));
        }
        let (n, p) = (blocks[0].n, blocks[0].p);
        for (m, b) in blocks.iter().enumerate() {
            if b.n != n || b.p != p {
                return Err(Error::BadShape(format!(
                    "block {} is {}x{}, expected {}x{}",
                    m + 1,
                    b.n,
                    b.p,
                    n,
                    p
                )));
            }
        }
        Ok(Self { blocks })
    }

    pub fn d(&self) -> u32 {
        self.blocks.len() as u32
    }

    pub fn n_rows(&self) -> usize {
        self.blocks[0].n
    }

    pub fn n_cols(&self) -> usize {
        self.blocks[0].p
    }

    pub fn block(&self, m: usize) -> &DataMatrix {
        &self.blocks[m]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Block cross-product norm statistic `W^2 / n - alpha_p`.
///
/// For each pair `(i, j)` the inner vector has one component per block,
/// the raw cross-product sum of columns `i` and `j`; `W` is the maximum
/// Euclidean norm over pairs. No demeaning.
pub fn block_norm_statistic(sample: &BlockSample) -> Result<StatValue> {
    let (n, p, d) = (sample.n_rows(), sample.n_cols(), sample.d());
    if p < 2 {
        return Err(Error::TooSmall {
            n,
            p,
            min_n: 1,
            min_p: 2,
        });
    }
    let mut max_norm_sq = f64::NEG_INFINITY;
    let mut argmax = (0, 0);
    for i in 0..p {
        for j in (i + 1)..p {
            let mut norm_sq = 0.0;
            for block in &sample.blocks {
                let s = dot(block.column(i), block.column(j));
                norm_sq += s * s;
            }
            if norm_sq > max_norm_sq {
                max_norm_sq = norm_sq;
                argmax = (i, j);
            }
        }
    }
    Ok(StatValue {
        kind: StatKind::BlockNorm,
        value: max_norm_sq / n as f64 - alpha_p(p, d),
        n,
        p,
        d,
        argmax_pair: argmax,
    })
}

/// Self-normalized block statistic `d^2 n L^2 - alpha_p` where
/// `L^2 = max ||sum of cross-products||^2 / (A_i A_j)` and `A_i` sums the
/// squares of column `i` over all blocks.
pub fn self_normalized_block_statistic(sample: &BlockSample) -> Result<StatValue> {
    let (n, p, d) = (sample.n_rows(), sample.n_cols(), sample.d());
    if p < 2 {
        return Err(Error::TooSmall {
            n,
            p,
            min_n: 1,
            min_p: 2,
        });
    }
    let mut col_ssq = vec![0.0; p];
    for block in &sample.blocks {
        for (i, s) in col_ssq.iter_mut().enumerate() {
            *s += dot(block.column(i), block.column(i));
        }
    }
    for (i, &s) in col_ssq.iter().enumerate() {
        if s <= 0.0 {
            return Err(Error::DegenerateColumn {
                column: i,
                reason: "zero sum of squares across blocks",
            });
        }
    }
    let mut max_ratio = f64::NEG_INFINITY;
    let mut argmax = (0, 0);
    for i in 0..p {
        for j in (i + 1)..p {
            let mut norm_sq = 0.0;
            for block in &sample.blocks {
                let s = dot(block.column(i), block.column(j));
                norm_sq += s * s;
            }
            let ratio = norm_sq / (col_ssq[i] * col_ssq[j]);
            if ratio > max_ratio {
                max_ratio = ratio;
                argmax = (i, j);
            }
        }
    }
    let df = f64::from(d);
    Ok(StatValue {
        kind: StatKind::SelfNormalizedBlock,
        value: df * df * n as f64 * max_ratio - alpha_p(p, d),
        n,
        p,
        d,
        argmax_pair: argmax,
    })
}

/// Mutual coherence of a dictionary: the largest absolute normalized
/// inner product between distinct raw columns (no demeaning), plus one
/// pair attaining it.
pub fn mutual_coherence(data: &DataMatrix) -> Result<(f64, (usize, usize))> {
    let (n, p) = (data.n, data.p);
    if p < 2 || n < 1 {
        return Err(Error::TooSmall {
            n,
            p,
            min_n: 1,
            min_p: 2,
        });
    }
    let mut norm_sq = vec![0.0; p];
    for (i, s) in norm_sq.iter_mut().enumerate() {
        *s = dot(data.column(i), data.column(i));
        if *s <= 0.0 {
            return Err(Error::DegenerateColumn {
                column: i,
                reason: "zero Euclidean norm",
            });
        }
    }
    let mut max_sq = f64::NEG_INFINITY;
    let mut argmax = (0, 0);
    for i in 0..p {
        for j in (i + 1)..p {
            let g = dot(data.column(i), data.column(j));
            let ratio = g * g / (norm_sq[i] * norm_sq[j]);
            if ratio > max_sq {
                max_sq = ratio;
                argmax = (i, j);
            }
        }
    }
    Ok((max_sq.sqrt().min(1.0), argmax))
}

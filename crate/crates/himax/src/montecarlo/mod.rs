//! Monte Carlo estimation of actual significance levels under the null.
//!
//! For each `(n, p)` cell of a grid the harness draws `R` independent
//! `n x p` samples with i.i.d. entries, computes the requested test
//! statistics on each, and counts rejections against critical values at
//! the nominal level. Each replication owns a dedicated random stream
//! keyed by `(distribution, n, p, replication)`, and rejection counts
//! are aggregated as integers, so a `SimConfig` (seed included) fully
//! determines the result no matter how many worker threads run it.

mod rng;

pub use rng::{stream_rng, StreamKey};

use crate::approximations::{critical_value, ApproxKind, ApproxParams};
use crate::numerics::{clog, clog2};
use crate::statistics::{correlation_scan, DataMatrix};
use crate::{Error, Result};
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Null-hypothesis entry distribution (i.i.d. across the whole matrix).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullDistribution {
    StandardNormal,
    StudentT { df: u32 },
}

impl NullDistribution {
    /// Distribution tag used in stream keys.
    fn tag(self) -> u8 {
        match self {
            NullDistribution::StandardNormal => 0,
            NullDistribution::StudentT { df } => df as u8,
        }
    }
}

impl fmt::Display for NullDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullDistribution::StandardNormal => f.write_str("standard_normal"),
            NullDistribution::StudentT { df } => write!(f, "t{df}"),
        }
    }
}

impl FromStr for NullDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "standard_normal" | "gaussian" => Ok(NullDistribution::StandardNormal),
            _ => {
                if let Some(df) = s.strip_prefix('t').and_then(|d| d.parse::<u32>().ok()) {
                    Ok(NullDistribution::StudentT { df })
                } else {
                    Err(Error::InvalidConfig(format!(
                        "unknown distribution {s:?}; expected \"standard_normal\" or \"t<df>\""
                    )))
                }
            }
        }
    }
}

/// One test of the level study: a statistic together with the
/// approximation supplying its critical value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableTest {
    /// Split-half statistic against the intermediate chi-square form
    /// (d = 2).
    SplitHalf,
    /// Max-correlation statistic against the intermediate chi-square form
    /// (d = 1).
    MaxCorrChisq,
    /// Max-correlation statistic against its Gumbel limit.
    MaxCorrGumbel,
}

impl TableTest {
    pub fn all() -> [TableTest; 3] {
        [
            TableTest::SplitHalf,
            TableTest::MaxCorrChisq,
            TableTest::MaxCorrGumbel,
        ]
    }

    pub fn approx(self) -> ApproxKind {
        match self {
            TableTest::SplitHalf | TableTest::MaxCorrChisq => ApproxKind::ChiSquareIntermediate,
            TableTest::MaxCorrGumbel => ApproxKind::MaxCorrLimit,
        }
    }

    fn dof(self) -> u32 {
        match self {
            TableTest::SplitHalf => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TableTest::SplitHalf => "split_half",
            TableTest::MaxCorrChisq => "max_corr_chisq",
            TableTest::MaxCorrGumbel => "max_corr_gumbel",
        }
    }
}

impl fmt::Display for TableTest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableTest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split_half" => Ok(TableTest::SplitHalf),
            "max_corr_chisq" => Ok(TableTest::MaxCorrChisq),
            "max_corr_gumbel" => Ok(TableTest::MaxCorrGumbel),
            _ => Err(Error::InvalidConfig(format!("unknown statistic {s:?}"))),
        }
    }
}

fn default_statistics() -> Vec<TableTest> {
    TableTest::all().to_vec()
}

/// Everything a level study depends on. Equal configs (seed included)
/// produce equal results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub distribution: NullDistribution,
    /// `(n, p)` pairs to simulate.
    pub grid: Vec<(usize, usize)>,
    pub replications: u32,
    pub nominal_alpha: f64,
    pub seed: u64,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<TableTest>,
}

impl SimConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("grid is empty".into()));
        }
        for &(n, p) in &self.grid {
            if n < 4 || p < 2 {
                return Err(Error::InvalidConfig(format!(
                    "grid cell ({n}, {p}) needs n >= 4 and p >= 2"
                )));
            }
            if n > u16::MAX as usize || p > u16::MAX as usize {
                return Err(Error::InvalidConfig(format!(
                    "grid cell ({n}, {p}) exceeds the supported size {}",
                    u16::MAX
                )));
            }
        }
        if self.replications < 100 {
            return Err(Error::InvalidConfig(format!(
                "replications must be at least 100, got {}",
                self.replications
            )));
        }
        if self.replications > StreamKey::MAX_REPLICATION + 1 {
            return Err(Error::InvalidConfig(format!(
                "replications must be at most {}",
                StreamKey::MAX_REPLICATION + 1
            )));
        }
        if !(self.nominal_alpha > 0.0 && self.nominal_alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.nominal_alpha));
        }
        if self.statistics.is_empty() {
            return Err(Error::InvalidConfig("no statistics requested".into()));
        }
        if let NullDistribution::StudentT { df } = self.distribution {
            if df == 0 || df > 255 {
                return Err(Error::InvalidConfig(format!(
                    "student t degrees of freedom must lie in 1..=255, got {df}"
                )));
            }
        }
        Ok(())
    }
}

/// Estimated level for one `(n, p, statistic)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellLevel {
    pub n: usize,
    pub p: usize,
    pub statistic: TableTest,
    pub replications: u32,
    pub rejections: u32,
    /// `rejections / replications`.
    pub estimated_level: f64,
    /// Binomial standard error `sqrt(level (1 - level) / R)`.
    pub standard_error: f64,
    pub critical_value: f64,
    pub approx: ApproxKind,
}

/// The full outcome of a level study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub distribution: NullDistribution,
    pub nominal_alpha: f64,
    pub seed: u64,
    pub replications: u32,
    pub statistics: Vec<TableTest>,
    pub cells: Vec<CellLevel>,
}

impl SimResult {
    /// Level of one cell, if present.
    pub fn level(&self, n: usize, p: usize, statistic: TableTest) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.p == p && c.statistic == statistic)
            .map(|c| c.estimated_level)
    }
}

/// Draw an `n x p` matrix of i.i.d. entries from the distribution,
/// consuming the given stream. Student t draws are built as a standard
/// normal over `sqrt(chi2(df)/df)`.
pub fn sample_null(
    distribution: NullDistribution,
    n: usize,
    p: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> DataMatrix {
    let mut values = vec![0.0f64; n * p];
    match distribution {
        NullDistribution::StandardNormal => {
            for v in &mut values {
                *v = StandardNormal.sample(rng);
            }
        }
        NullDistribution::StudentT { df } => {
            let chi2 = ChiSquared::new(f64::from(df)).expect("validated df");
            let dff = f64::from(df);
            for v in &mut values {
                let z: f64 = StandardNormal.sample(rng);
                let w: f64 = chi2.sample(rng);
                *v = z / (w / dff).sqrt();
            }
        }
    }
    DataMatrix::from_column_major(n, p, values)
}

struct CellTest {
    test: TableTest,
    critical_value: f64,
}

/// Run the level study described by `config`.
///
/// Pure in the config: the result is identical for any worker-thread
/// count or schedule. Degenerate samples (zero-variance columns, a
/// probability-zero event under continuous nulls) abort with an error.
pub fn estimate_levels(config: &SimConfig) -> Result<SimResult> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.grid.len() * config.statistics.len());
    for &(n, p) in &config.grid {
        let tests: Vec<CellTest> = config
            .statistics
            .iter()
            .map(|&test| -> Result<CellTest> {
                let params = ApproxParams::new(p, n, test.dof())?;
                Ok(CellTest {
                    test,
                    critical_value: critical_value(&params, test.approx(), config.nominal_alpha)?,
                })
            })
            .collect::<Result<_>>()?;
        let counts = count_rejections(config, n, p, &tests)?;
        let r = f64::from(config.replications);
        for (t, &rejections) in tests.iter().zip(&counts) {
            let level = f64::from(rejections) / r;
            cells.push(CellLevel {
                n,
                p,
                statistic: t.test,
                replications: config.replications,
                rejections,
                estimated_level: level,
                standard_error: (level * (1.0 - level) / r).sqrt(),
                critical_value: t.critical_value,
                approx: t.test.approx(),
            });
        }
    }
    Ok(SimResult {
        distribution: config.distribution,
        nominal_alpha: config.nominal_alpha,
        seed: config.seed,
        replications: config.replications,
        statistics: config.statistics.clone(),
        cells,
    })
}

fn count_rejections(
    config: &SimConfig,
    n: usize,
    p: usize,
    tests: &[CellTest],
) -> Result<Vec<u32>> {
    let tag = config.distribution.tag();
    let (nf, pf) = (n as f64, p as f64);
    let centering = 4.0 * clog(pf);
    let iterated = clog2(pf);
    (0..config.replications)
        .into_par_iter()
        .try_fold(
            || vec![0u32; tests.len()],
            |mut acc, rep| -> Result<Vec<u32>> {
                let key = StreamKey {
                    context: tag,
                    n: n as u16,
                    p: p as u16,
                    replication: rep,
                };
                let mut rng = stream_rng(config.seed, key);
                let data = sample_null(config.distribution, n, p, &mut rng);
                let scan = correlation_scan(&data)?;
                // Free re-check of the algebraic domination of the
                // split-half form over the squared correlation.
                if scan.max_split_sq < scan.max_corr_sq - 1e-12 {
                    return Err(Error::InvariantViolation(format!(
                        "split-half max {} fell below squared-correlation max {} \
                         (n = {n}, p = {p}, replication = {rep})",
                        scan.max_split_sq, scan.max_corr_sq
                    )));
                }
                let max_corr_stat = nf * scan.max_corr_sq - centering + iterated;
                let split_stat = nf * scan.max_split_sq - centering;
                for (slot, t) in acc.iter_mut().zip(tests) {
                    let observed = match t.test {
                        TableTest::SplitHalf => split_stat,
                        TableTest::MaxCorrChisq | TableTest::MaxCorrGumbel => max_corr_stat,
                    };
                    if observed > t.critical_value {
                        *slot += 1;
                    }
                }
                Ok(acc)
            },
        )
        .try_reduce(
            || vec![0u32; tests.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )
}

/// Dimension values of the reference level-study grid.
pub const TABLE_P_VALUES: [usize; 6] = [4, 8, 16, 32, 64, 128];
/// Sample sizes of the reference level-study grid.
pub const TABLE_N_VALUES: [usize; 5] = [16, 32, 64, 128, 256];

/// Run the full reference grid: table 1 draws standard normal data,
/// table 2 draws t with 7 degrees of freedom, both at nominal level
/// 0.05 with all three tests.
pub fn reproduce_table(which: u8, replications: u32, seed: u64) -> Result<SimResult> {
    let distribution = match which {
        1 => NullDistribution::StandardNormal,
        2 => NullDistribution::StudentT { df: 7 },
        _ => {
            return Err(Error::InvalidConfig(format!(
                "table must be 1 or 2, got {which}"
            )))
        }
    };
    let mut grid = Vec::new();
    for &p in &TABLE_P_VALUES {
        for &n in &TABLE_N_VALUES {
            grid.push((n, p));
        }
    }
    estimate_levels(&SimConfig {
        distribution,
        grid,
        replications,
        nominal_alpha: 0.05,
        seed,
        statistics: default_statistics(),
    })
}

/// Render a level study as CSV, one line per `(n, p, statistic)` cell.
/// Floats use the shortest round-trip representation.
pub fn levels_csv(result: &SimResult) -> String {
    let mut out = String::from(
        "distribution,n,p,statistic,replications,rejections,level,se,critical_value,approx\n",
    );
    for c in &result.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            result.distribution,
            c.n,
            c.p,
            c.statistic,
            c.replications,
            c.rejections,
            c.estimated_level,
            c.standard_error,
            c.critical_value,
            c.approx
        ));
    }
    out
}

/// Render a level study as an aligned text table: one block of rows per
/// dimension `p` (one row per statistic), one column per sample size.
pub fn levels_table(result: &SimResult) -> String {
    let mut ns: Vec<usize> = result.cells.iter().map(|c| c.n).collect();
    ns.sort_unstable();
    ns.dedup();
    let mut ps: Vec<usize> = result.cells.iter().map(|c| c.p).collect();
    ps.sort_unstable();
    ps.dedup();
    let mut out = format!(
        "Estimated significance levels (alpha = {}, R = {}, distribution = {}, seed = {})\n\n",
        result.nominal_alpha, result.replications, result.distribution, result.seed
    );
    out.push_str(&format!("{:>5}  {:<16}", "p", "statistic"));
    for &n in &ns {
        out.push_str(&format!("  {:>8}", format!("n={n}")));
    }
    out.push('\n');
    for &p in &ps {
        for (row, &stat) in result.statistics.iter().enumerate() {
            if row == 0 {
                out.push_str(&format!("{:>5}  {:<16}", p, stat.name()));
            } else {
                out.push_str(&format!("{:>5}  {:<16}", "", stat.name()));
            }
            for &n in &ns {
                match result.level(n, p, stat) {
                    Some(level) => out.push_str(&format!("  {:>8.4}", level)),
                    None => out.push_str(&format!("  {:>8}", "-")),
                }
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimConfig {
        SimConfig {
            distribution: NullDistribution::StandardNormal,
            grid: vec![(16, 4), (16, 8)],
            replications: 200,
            nominal_alpha: 0.05,
            seed: 7,
            statistics: default_statistics(),
        }
    }

    #[test]
    fn sample_has_requested_shape_and_is_reproducible() {
        let key = StreamKey {
            context: 0,
            n: 16,
            p: 4,
            replication: 3,
        };
        let a = sample_null(
            NullDistribution::StandardNormal,
            16,
            4,
            &mut stream_rng(9, key),
        );
        let b = sample_null(
            NullDistribution::StandardNormal,
            16,
            4,
            &mut stream_rng(9, key),
        );
        assert_eq!((a.n_rows(), a.n_cols()), (16, 4));
        assert_eq!(a, b);
    }

    #[test]
    fn normal_sample_moments() {
        let key = StreamKey {
            context: 0,
            n: 1000,
            p: 1000,
            replication: 0,
        };
        let m = sample_null(
            NullDistribution::StandardNormal,
            1000,
            1000,
            &mut stream_rng(12345, key),
        );
        let total = 1_000_000f64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..1000 {
            for &v in m.column(i) {
                sum += v;
                sumsq += v * v;
            }
        }
        let mean = sum / total;
        let var = sumsq / total - mean * mean;
        assert!(mean.abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 0.006, "variance {var}");
    }

    #[test]
    fn student_t_sample_variance() {
        // t7 has variance 7/5; a 3-sigma band at one million draws is
        // about +-0.009.
        let key = StreamKey {
            context: 7,
            n: 1000,
            p: 1000,
            replication: 0,
        };
        let m = sample_null(
            NullDistribution::StudentT { df: 7 },
            1000,
            1000,
            &mut stream_rng(99, key),
        );
        let total = 1_000_000f64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..1000 {
            for &v in m.column(i) {
                sum += v;
                sumsq += v * v;
            }
        }
        let mean = sum / total;
        let var = sumsq / total - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.4).abs() < 0.012, "variance {var}");
    }

    #[test]
    fn estimate_levels_is_deterministic() {
        let config = small_config();
        let a = estimate_levels(&config).unwrap();
        let b = estimate_levels(&config).unwrap();
        assert_eq!(a, b);
        // Binomial identities hold exactly.
        for c in &a.cells {
            assert_eq!(
                c.estimated_level,
                f64::from(c.rejections) / f64::from(c.replications)
            );
            assert_eq!(
                c.standard_error,
                (c.estimated_level * (1.0 - c.estimated_level) / f64::from(c.replications))
                    .sqrt()
            );
            assert!(c.rejections <= c.replications);
        }
    }

    #[test]
    fn estimate_levels_independent_of_thread_count() {
        let config = small_config();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| estimate_levels(&config))
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| estimate_levels(&config))
            .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn conservative_at_high_dimension_low_sample() {
        // Normal data with p = 8n: all three tests reject almost never.
        let config = SimConfig {
            distribution: NullDistribution::StandardNormal,
            grid: vec![(16, 128)],
            replications: 5000,
            nominal_alpha: 0.05,
            seed: 11,
            statistics: default_statistics(),
        };
        let result = estimate_levels(&config).unwrap();
        for c in &result.cells {
            assert!(
                c.estimated_level < 0.01,
                "{} level {} at (16, 128)",
                c.statistic,
                c.estimated_level
            );
        }
    }

    #[test]
    fn smoke_table_runs_and_stays_in_range() {
        let result = reproduce_table(1, 100, 5).unwrap();
        assert_eq!(result.cells.len(), 90);
        for c in &result.cells {
            assert!((0.0..=1.0).contains(&c.estimated_level));
        }
        let csv = levels_csv(&result);
        assert_eq!(csv.lines().count(), 91);
        assert!(csv.starts_with("distribution,n,p,statistic"));
        let table = levels_table(&result);
        assert!(table.contains("n=256"));
        assert!(table.contains("split_half"));
        assert!(reproduce_table(3, 100, 5).is_err());
    }

    #[test]
    fn distribution_parsing() {
        assert_eq!(
            "standard_normal".parse::<NullDistribution>().unwrap(),
            NullDistribution::StandardNormal
        );
        assert_eq!(
            "t7".parse::<NullDistribution>().unwrap(),
            NullDistribution::StudentT { df: 7 }
        );
        assert!("weibull".parse::<NullDistribution>().is_err());
        assert_eq!(
            "max_corr_chisq".parse::<TableTest>().unwrap(),
            TableTest::MaxCorrChisq
        );
    }

    #[test]
    fn config_validation() {
        let mut config = small_config();
        config.replications = 50;
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.grid = vec![(2, 4)];
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.distribution = NullDistribution::StudentT { df: 300 };
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.nominal_alpha = 0.0;
        assert!(config.validate().is_err());
        let mut config = small_config();
        config.statistics.clear();
        assert!(config.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let text = r#"{
            "distribution": {"student_t": {"df": 7}},
            "grid": [[16, 4], [32, 8]],
            "replications": 500,
            "nominal_alpha": 0.05,
            "seed": 42
        }"#;
        let config = SimConfig::from_json_str(text).unwrap();
        assert_eq!(config.distribution, NullDistribution::StudentT { df: 7 });
        assert_eq!(config.statistics, default_statistics());
        assert!(SimConfig::from_json_str("{}").is_err());
    }
}

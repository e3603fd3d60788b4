//! Command-line front end: run independence tests on CSV data, compute
//! critical values, certify dictionary coherence, estimate significance
//! levels by simulation, and evaluate the limit-vs-intermediate gap.
//!
//! Output is byte-identical across runs for identical flags, including
//! `--threads`, because all simulation randomness is keyed per
//! replication rather than per worker.

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use himax::approximations::{self, ApproxKind, ApproxParams};
use himax::coherence;
use himax::montecarlo::{self, NullDistribution, SimConfig, TableTest};
use himax::statistics::{self, DataMatrix, StatKind, StatValue};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "himax",
    version,
    about = "Independence tests from maximum pairwise sample correlations"
)]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    /// Worker threads for simulation commands (0 = auto). Falls back to
    /// the HIMAX_THREADS environment variable when not given.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Random seed for simulation commands (default 0; an explicit flag
    /// overrides a config file's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatChoice {
    /// Split-half statistic.
    SplitHalf,
    /// Maximum absolute correlation statistic.
    MaxCorr,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ApproxChoice {
    /// Default pairing for the chosen statistic.
    Auto,
    /// Gumbel-type limit distribution.
    Limit,
    /// Chi-square tail (intermediate) approximation.
    Intermediate,
}

#[derive(Subcommand)]
enum Command {
    /// Test a CSV dataset for complete independence of its columns.
    Test {
        /// CSV file: one row per observation, one column per variate.
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = StatChoice::SplitHalf)]
        statistic: StatChoice,
        #[arg(long, value_enum, default_value_t = ApproxChoice::Auto)]
        approx: ApproxChoice,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Critical value of an approximation at a significance level.
    Critval {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        d: u32,
        #[arg(long, value_enum, default_value_t = ApproxChoice::Intermediate)]
        approx: ApproxChoice,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Sparsity certificate for a random dictionary, optionally checked
    /// against a concrete CSV dictionary.
    Coherence {
        /// Rows of the dictionary (with --p; exclusive with --file).
        #[arg(long, conflicts_with = "file", requires = "p")]
        n: Option<usize>,
        /// Columns of the dictionary.
        #[arg(long, conflicts_with = "file", requires = "n")]
        p: Option<usize>,
        /// Certify and verify this CSV dictionary.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Estimate actual significance levels on an (n, p) grid.
    Simulate {
        /// JSON config file (exclusive with the inline flags).
        #[arg(long, conflicts_with_all = ["distribution", "grid", "replications", "alpha", "statistics"])]
        config: Option<PathBuf>,
        /// "standard_normal" or "t<df>".
        #[arg(long)]
        distribution: Option<String>,
        /// Comma-separated NxP cells, e.g. "32x8,64x16".
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        replications: Option<u32>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Comma-separated subset of split_half, max_corr_chisq,
        /// max_corr_gumbel (default all).
        #[arg(long)]
        statistics: Option<String>,
    },
    /// Run the full reference level-study grid (1 = normal, 2 = t7).
    Table {
        #[arg(long)]
        which: u8,
        #[arg(long, default_value_t = 5000)]
        replications: u32,
    },
    /// Gap between the intermediate approximation and the
    /// max-correlation limit, with its predicted size.
    Rategap {
        /// Comma-separated dimensions, e.g. "1000,100000".
        #[arg(long = "p-list", allow_hyphen_values = true)]
        p_list: String,
        /// Comma-separated evaluation points, e.g. "-1,0,2".
        #[arg(long = "y-list", allow_hyphen_values = true)]
        y_list: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads.or_else(|| {
        std::env::var("HIMAX_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let run = || match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(if err.is_usage() { 1 } else { 2 })
        }
    };
    match threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .expect("thread pool")
            .install(run),
        _ => run(),
    }
}

fn execute(cli: &Cli) -> himax::Result<()> {
    match &cli.command {
        Command::Test {
            file,
            statistic,
            approx,
            alpha,
        } => cmd_test(cli, file, *statistic, *approx, *alpha),
        Command::Critval {
            p,
            n,
            d,
            approx,
            alpha,
        } => cmd_critval(cli, *p, *n, *d, *approx, *alpha),
        Command::Coherence { n, p, file, alpha } => cmd_coherence(cli, *n, *p, file.as_deref(), *alpha),
        Command::Simulate {
            config,
            distribution,
            grid,
            replications,
            alpha,
            statistics,
        } => {
            let config = match config {
                Some(path) => {
                    let mut parsed = SimConfig::from_json_str(&std::fs::read_to_string(path)?)?;
                    if let Some(seed) = cli.seed {
                        parsed.seed = seed;
                    }
                    parsed
                }
                None => inline_sim_config(cli, distribution.as_deref(), grid.as_deref(), *replications, *alpha, statistics.as_deref())?,
            };
            let result = montecarlo::estimate_levels(&config)?;
            emit_levels(cli, "simulate", &result)
        }
        Command::Table {
            which,
            replications,
        } => {
            let result = montecarlo::reproduce_table(*which, *replications, cli.seed.unwrap_or(0))?;
            emit_levels(cli, "table", &result)
        }
        Command::Rategap { p_list, y_list } => cmd_rategap(cli, p_list, y_list),
    }
}

/// Ten significant digits, fixed or scientific as magnitude demands.
fn sig10(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..10).contains(&mag) {
        format!("{:.*}", (9 - mag).max(0) as usize, x)
    } else {
        format!("{:.9e}", x)
    }
}

fn emit(cli: &Cli, text: String, csv: String, json_value: Value) {
    match cli.format {
        Format::Text => print!("{text}"),
        Format::Csv => print!("{csv}"),
        Format::Json => println!("{json_value}"),
    }
}

fn wrap_json(command: &str, inputs: Value, results: Value) -> Value {
    json!({
        "command": command,
        "inputs": inputs,
        "results": results,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn cmd_test(
    cli: &Cli,
    file: &std::path::Path,
    statistic: StatChoice,
    approx: ApproxChoice,
    alpha: f64,
) -> himax::Result<()> {
    let data = DataMatrix::from_csv_path(file)?;
    let stat: StatValue = match statistic {
        StatChoice::SplitHalf => statistics::split_half_statistic(&data)?,
        StatChoice::MaxCorr => statistics::max_corr_statistic(&data)?,
    };
    let kind = resolve_approx(stat.kind, approx);
    let params = ApproxParams::new(stat.p, stat.n, stat.d)?;
    let critical = approximations::critical_value(&params, kind, alpha)?;
    let p_value = approximations::p_value(&stat, kind, &params)?;
    let reject = stat.value > critical;
    let decision = if reject { "reject" } else { "accept" };
    let text = format!(
        "file            {}\nn x p           {} x {}\nstatistic       {}\nvalue           {}\napprox          {}\nalpha           {}\ncritical value  {}\np value         {}\ndecision        {}\n",
        file.display(),
        stat.n,
        stat.p,
        stat.kind,
        sig10(stat.value),
        kind,
        alpha,
        sig10(critical),
        sig10(p_value),
        decision,
    );
    let csv = format!(
        "statistic,n,p,value,approx,alpha,critical_value,p_value,decision\n{},{},{},{},{},{},{},{},{}\n",
        stat.kind, stat.n, stat.p, stat.value, kind, alpha, critical, p_value, decision,
    );
    let json_value = wrap_json(
        "test",
        json!({
            "file": file.display().to_string(),
            "statistic": stat.kind.name(),
            "approx": kind.name(),
            "alpha": alpha,
        }),
        json!({
            "n": stat.n,
            "p": stat.p,
            "value": stat.value,
            "argmax_pair": [stat.argmax_pair.0, stat.argmax_pair.1],
            "critical_value": critical,
            "p_value": p_value,
            "reject": reject,
        }),
    );
    emit(cli, text, csv, json_value);
    Ok(())
}

fn resolve_approx(kind: StatKind, choice: ApproxChoice) -> ApproxKind {
    match choice {
        ApproxChoice::Auto => approximations::default_pairing(kind),
        ApproxChoice::Intermediate => ApproxKind::ChiSquareIntermediate,
        ApproxChoice::Limit => match kind {
            StatKind::SplitHalf => ApproxKind::SplitHalfLimit,
            _ => ApproxKind::MaxCorrLimit,
        },
    }
}

fn cmd_critval(
    cli: &Cli,
    p: usize,
    n: usize,
    d: u32,
    approx: ApproxChoice,
    alpha: f64,
) -> himax::Result<()> {
    let params = ApproxParams::new(p, n, d)?;
    let kind = match approx {
        ApproxChoice::Auto | ApproxChoice::Intermediate => ApproxKind::ChiSquareIntermediate,
        ApproxChoice::Limit => {
            if d == 2 {
                ApproxKind::SplitHalfLimit
            } else {
                ApproxKind::MaxCorrLimit
            }
        }
    };
    let value = approximations::critical_value(&params, kind, alpha)?;
    let text = format!(
        "approx          {}\np               {}\nn               {}\nd               {}\nalpha           {}\ncritical value  {}\n",
        kind, p, n, d, alpha, sig10(value),
    );
    let csv = format!(
        "approx,p,n,d,alpha,critical_value\n{kind},{p},{n},{d},{alpha},{value}\n"
    );
    let json_value = wrap_json(
        "critval",
        json!({"p": p, "n": n, "d": d, "approx": kind.name(), "alpha": alpha}),
        json!({"critical_value": value}),
    );
    emit(cli, text, csv, json_value);
    Ok(())
}

fn cmd_coherence(
    cli: &Cli,
    n: Option<usize>,
    p: Option<usize>,
    file: Option<&std::path::Path>,
    alpha: f64,
) -> himax::Result<()> {
    let (cert, check, data_file) = match (file, n, p) {
        (Some(path), _, _) => {
            let dict = DataMatrix::from_csv_path(path)?;
            let cert = coherence::certify(dict.n_rows(), dict.n_cols(), alpha)?;
            let check = coherence::verify_on_sample(&dict, &cert)?;
            (cert, Some(check), Some(path.display().to_string()))
        }
        (None, Some(n), Some(p)) => (coherence::certify(n, p, alpha)?, None, None),
        _ => {
            return Err(himax::Error::InvalidConfig(
                "give either --file or both --n and --p".into(),
            ))
        }
    };
    let mut text = format!(
        "n                   {}\np                   {}\nalpha               {}\ny_alpha             {}\nm_alpha             {}\nsparsity threshold  {}\ntrivial             {}\n",
        cert.n,
        cert.p,
        cert.alpha,
        sig10(cert.y_alpha),
        sig10(cert.m_alpha),
        sig10(cert.sparsity_threshold),
        cert.trivial,
    );
    if let Some(check) = &check {
        text.push_str(&format!(
            "coherence           {}\ncoherence bound     {}\nbound holds         {}\n",
            sig10(check.coherence),
            sig10(check.bound),
            check.bound_holds,
        ));
    }
    let mut csv = String::from("n,p,alpha,y_alpha,m_alpha,sparsity_threshold,trivial");
    let mut row = format!(
        "{},{},{},{},{},{},{}",
        cert.n, cert.p, cert.alpha, cert.y_alpha, cert.m_alpha, cert.sparsity_threshold, cert.trivial
    );
    if let Some(check) = &check {
        csv.push_str(",coherence,bound,bound_holds");
        row.push_str(&format!(
            ",{},{},{}",
            check.coherence, check.bound, check.bound_holds
        ));
    }
    csv.push('\n');
    csv.push_str(&row);
    csv.push('\n');
    let mut results = serde_json::to_value(cert).expect("serializable");
    if let Some(check) = &check {
        results["check"] = serde_json::to_value(check).expect("serializable");
    }
    let json_value = wrap_json(
        "coherence",
        json!({"file": data_file, "alpha": alpha}),
        results,
    );
    emit(cli, text, csv, json_value);
    Ok(())
}

fn inline_sim_config(
    cli: &Cli,
    distribution: Option<&str>,
    grid: Option<&str>,
    replications: Option<u32>,
    alpha: f64,
    statistics: Option<&str>,
) -> himax::Result<SimConfig> {
    let distribution: NullDistribution = distribution
        .ok_or_else(|| himax::Error::InvalidConfig("--distribution is required without --config".into()))?
        .parse()?;
    let grid = parse_grid(grid.ok_or_else(|| {
        himax::Error::InvalidConfig("--grid is required without --config".into())
    })?)?;
    let statistics = match statistics {
        None => TableTest::all().to_vec(),
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<himax::Result<Vec<TableTest>>>()?,
    };
    Ok(SimConfig {
        distribution,
        grid,
        replications: replications.ok_or_else(|| {
            himax::Error::InvalidConfig("--replications is required without --config".into())
        })?,
        nominal_alpha: alpha,
        seed: cli.seed.unwrap_or(0),
        statistics,
    })
}

fn parse_grid(text: &str) -> himax::Result<Vec<(usize, usize)>> {
    text.split(',')
        .map(|cell| {
            let bad = || himax::Error::InvalidConfig(format!("bad grid cell {cell:?}; expected NxP like 32x8"));
            let (n, p) = cell.trim().split_once(['x', 'X']).ok_or_else(bad)?;
            Ok((
                n.trim().parse().map_err(|_| bad())?,
                p.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn emit_levels(cli: &Cli, command: &str, result: &montecarlo::SimResult) -> himax::Result<()> {
    let text = montecarlo::levels_table(result);
    let csv = montecarlo::levels_csv(result);
    let json_value = wrap_json(
        command,
        json!({
            "distribution": result.distribution.to_string(),
            "replications": result.replications,
            "nominal_alpha": result.nominal_alpha,
            "seed": result.seed,
        }),
        serde_json::to_value(result).expect("serializable"),
    );
    emit(cli, text, csv, json_value);
    Ok(())
}

fn cmd_rategap(cli: &Cli, p_list: &str, y_list: &str) -> himax::Result<()> {
    let ps: Vec<usize> = p_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| himax::Error::InvalidConfig(format!("bad dimension {s:?}")))
        })
        .collect::<himax::Result<_>>()?;
    let ys: Vec<f64> = y_list
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| himax::Error::InvalidConfig(format!("bad evaluation point {s:?}")))
        })
        .collect::<himax::Result<_>>()?;
    let mut text = format!(
        "{:>12}  {:>8}  {:>16}  {:>16}  {:>10}\n",
        "p", "y", "exact_gap", "predicted", "ratio"
    );
    let mut csv = String::from("p,y,exact_gap,predicted,ratio\n");
    let mut rows = Vec::new();
    for &p in &ps {
        for &y in &ys {
            let gap = approximations::rate_gap(p, y)?;
            text.push_str(&format!(
                "{:>12}  {:>8}  {:>16}  {:>16}  {:>10.6}\n",
                p,
                y,
                sig10(gap.exact),
                sig10(gap.predicted),
                gap.ratio()
            ));
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                p,
                y,
                gap.exact,
                gap.predicted,
                gap.ratio()
            ));
            rows.push(json!({
                "p": p,
                "y": y,
                "exact_gap": gap.exact,
                "predicted": gap.predicted,
                "ratio": gap.ratio(),
            }));
        }
    }
    let json_value = wrap_json(
        "rategap",
        json!({"p_list": ps, "y_list": ys}),
        Value::Array(rows),
    );
    emit(cli, text, csv, json_value);
    Ok(())
}

use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric kernel received a NaN or infinite argument.
    #[error("{context}: argument {value} is not finite")]
    NonFinite {
        context: &'static str,
        value: f64,
    },

    /// Chi-square tails need at least one degree of freedom.
    #[error("degrees of freedom must be at least 1")]
    ZeroDof,

    /// The root-solver target does not lie between the bracket endpoints.
    #[error("target {target} outside bracket image [{f_lo}, {f_hi}]")]
    TargetOutsideBracket { target: f64, f_lo: f64, f_hi: f64 },

    /// A column is constant (zero variance) or identically zero.
    #[error("column {column} is degenerate ({reason})")]
    DegenerateColumn {
        column: usize,
        reason: &'static str,
    },

    /// The input matrix is too small for the requested statistic.
    #[error("matrix is {n}x{p} but the statistic needs n >= {min_n} and p >= {min_p}")]
    TooSmall {
        n: usize,
        p: usize,
        min_n: usize,
        min_p: usize,
    },

    /// Rows of unequal length, empty input, and similar shape problems.
    #[error("bad shape: {0}")]
    BadShape(String),

    /// A cell of a CSV input failed to parse. Positions are 1-based and
    /// count the header row if one is present.
    #[error("csv parse error at row {row}, column {column}: {message}")]
    CsvParse {
        row: usize,
        column: usize,
        message: String,
    },

    /// The statistic kind cannot be evaluated under the given approximation.
    #[error("{statistic} statistic is incompatible with the {approx} approximation{detail}")]
    IncompatibleApprox {
        statistic: &'static str,
        approx: &'static str,
        detail: String,
    },

    /// Significance levels must lie strictly inside (0, 1).
    #[error("alpha must lie strictly between 0 and 1 (got {0})")]
    AlphaOutOfRange(f64),

    /// The coherence certificate has no solution at the requested level.
    #[error("certificate infeasible (radicand {radicand}); increase n or alpha")]
    InfeasibleCertificate { radicand: f64 },

    /// Dictionary shape differs from the certificate's (n, p).
    #[error("dictionary is {rows}x{cols} but the certificate covers {n}x{p}")]
    CertificateShapeMismatch {
        rows: usize,
        cols: usize,
        n: usize,
        p: usize,
    },

    /// A simulation configuration failed validation.
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    /// An internal cross-check failed; indicates a bug, not bad input.
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error reflects how the caller asked (usage) rather
    /// than what the data contained. The CLI maps usage errors to exit
    /// code 1 and data/domain errors to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::IncompatibleApprox { .. }
                | Error::AlphaOutOfRange(_)
                | Error::InvalidConfig(_)
        )
    }
}

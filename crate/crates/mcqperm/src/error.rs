//! Error type shared across the crate.

use std::fmt;

/// A `(question, permutation)` pair that a log was expected to cover but did not.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct MissingRecord {
    pub question_id: String,
    pub arrangement: Vec<usize>,
}

impl fmt::Display for MissingRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {:?})", self.question_id, self.arrangement)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A benchmark violates a structural invariant (label count, duplicate ids, ...).
    #[error("invalid benchmark: {0}")]
    InvalidBenchmark(String),

    /// A record does not structurally match the data it is paired with.
    #[error("schema mismatch: {0}")]
    Schema(String),

    /// An operation was called with arguments it cannot work on.
    #[error("usage: {0}")]
    Usage(String),

    /// An option or parameter is outside its accepted range.
    #[error("configuration: {0}")]
    Config(String),

    /// A line of an input file could not be parsed.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// Parsed data violates a domain invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// Enumerating the full permutation set would exceed the configured cap.
    #[error("full permutation set for {n} options has {size} members, above the cap of {cap}")]
    PermutationCap { n: usize, size: u64, cap: u64 },

    /// More distinct permutations were requested than exist.
    #[error("cannot sample {requested} distinct permutations of {n} options; only {available} exist")]
    InfeasibleSample {
        n: usize,
        requested: usize,
        available: u64,
    },

    /// Sampling cannot vary: the sample size consumes every available permutation.
    #[error(
        "degenerate benchmark: sample size {size} is not below the {available} \
         available permutations of {n} options"
    )]
    DegenerateBenchmark {
        n: usize,
        size: usize,
        available: u64,
    },

    /// A log does not cover every required `(question, permutation)` pair.
    #[error("coverage: {} missing (question, permutation) record(s): {}", .missing.len(), format_missing(.missing))]
    Coverage { missing: Vec<MissingRecord> },

    /// A metric table lacks cells the protocol needs.
    #[error("coverage: {} missing table cell(s): {}", .cells.len(), format_cells(.cells))]
    TableCoverage { cells: Vec<String> },

    /// Too few data points for a statistic to be meaningful.
    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// A least-squares fit has no defined answer on this data.
    #[error("undefined fit: {0}")]
    UndefinedFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_missing(missing: &[MissingRecord]) -> String {
    truncate_list(missing.iter().map(|m| m.to_string()))
}

fn format_cells(cells: &[String]) -> String {
    truncate_list(cells.iter().cloned())
}

fn truncate_list(items: impl Iterator<Item = String>) -> String {
    const SHOWN: usize = 5;
    let all: Vec<String> = items.collect();
    let head = all[..all.len().min(SHOWN)].join(", ");
    if all.len() > SHOWN {
        format!("{head} ...")
    } else {
        head
    }
}

impl Error {
    /// Stable machine-readable kind token, used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidBenchmark(_) => "invalid_benchmark",
            Error::Schema(_) => "schema",
            Error::Usage(_) => "usage",
            Error::Config(_) => "config",
            Error::Parse { .. } => "parse",
            Error::Validation(_) => "validation",
            Error::PermutationCap { .. } => "permutation_cap",
            Error::InfeasibleSample { .. } => "infeasible_sample",
            Error::DegenerateBenchmark { .. } => "degenerate_benchmark",
            Error::Coverage { .. } => "coverage",
            Error::TableCoverage { .. } => "table_coverage",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::UndefinedFit(_) => "undefined_fit",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code for the CLI. Documented in the README.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Io(_) => 3,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Schema(_)
            | Error::InvalidBenchmark(_) => 4,
            Error::Coverage { .. } | Error::TableCoverage { .. } => 5,
            Error::Config(_)
            | Error::PermutationCap { .. }
            | Error::InfeasibleSample { .. }
            | Error::DegenerateBenchmark { .. }
            | Error::InsufficientData { .. }
            | Error::UndefinedFit(_) => 6,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

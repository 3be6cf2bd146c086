use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported invariant factor: {0}")]
    UnsupportedFactor(String),

    #[error("observable is singular at the evaluation point{}", step_suffix(.step))]
    SingularPoint { step: Option<u64> },

    #[error("improper integral diverges (exponent {exponent})")]
    Divergent { exponent: f64 },

    #[error("observable is not in L^{p}: exponent {exponent} times p is at least 1")]
    NotInLp { exponent: f64, p: f64 },

    #[error("materialized symbol prefix is too short to decide level {level}")]
    InsufficientPrefix { level: usize },

    #[error("ball or cell has zero measure")]
    ZeroMeasure,

    #[error("ratio undefined: the L^1 norm of the observable is zero")]
    UndefinedRatio,

    #[error("Weyl sum did not fall below {tol} (partial sum modulus {})", .partial.norm())]
    NonConverged { partial: Complex64, tol: f64 },

    #[error("unsupported decomposition: {0}")]
    UnsupportedDecomposition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("schedule incomplete: target unreachable for (j, k) = {failing:?}")]
    ScheduleIncomplete { failing: Vec<(usize, usize)> },

    #[error("config: {0}")]
    Config(String),

    #[error("at x#{x_index}, r_or_n = {r_or_n}, k = {k}: {source}")]
    Cell {
        x_index: usize,
        r_or_n: String,
        k: usize,
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(String),
}

fn step_suffix(step: &Option<u64>) -> String {
    match step {
        Some(j) => format!(" (orbit step {j})"),
        None => String::new(),
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

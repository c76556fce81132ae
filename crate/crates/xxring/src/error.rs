use thiserror::Error;

/// Unified error type for the library.
///
/// Configuration problems and numerical-property failures are kept in
/// separate variants so callers (in particular the CLI) can map them to
/// distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("matrix is not symmetric (max asymmetry {max_asym:.3e})")]
    NotSymmetric { max_asym: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("no self-consistent parity sector{}", seed_suffix(.seed))]
    NoConsistentSector { seed: Option<u64> },

    #[error("pair indices out of range or degenerate: i={i}, j={j}, L={l}")]
    BadPair { i: usize, j: usize, l: usize },

    #[error("pair list incomplete: expected {expected} pairs, got {got}")]
    IncompletePairs { expected: usize, got: usize },

    #[error("numerical property violated: {0}")]
    PropertyViolation(String),

    #[error("oracle supports L <= {max}, got L = {l}")]
    OracleTooLarge { l: usize, max: usize },

    #[error("realization with seed {seed} failed: {source}")]
    Realization {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("accumulator merge rejected: {0}")]
    Merge(String),
}

fn seed_suffix(seed: &Option<u64>) -> String {
    match seed {
        Some(s) => format!(" (seed {s})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Bernoulli polynomial of degree {0} is not supported (even degrees 2..=12 only)")]
    UnsupportedBernoulliDegree(u32),

    #[error("Korobov order {0} is out of the supported range 1..=6")]
    UnsupportedOrder(u32),

    #[error("power series with alpha={alpha}, theta={theta} is not summable (need 2*alpha*theta > 1 and 0 < theta <= 1)")]
    NotSummable { alpha: u32, theta: f64 },

    #[error("Matérn smoothness nu = r - d/2 = {r} - {dim}/2 is unsupported; supported values are 1/2, 3/2, 5/2")]
    UnsupportedMatern { r: u32, dim: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid with {m}^{dim} points overflows")]
    GridOverflow { m: usize, dim: usize },

    #[error("at least {required} points are required, got {found}")]
    TooFewPoints { required: usize, found: usize },

    #[error("SPD factorization of a {n}x{n} system failed up to jitter {max_jitter:e}")]
    Conditioning { n: usize, max_jitter: f64 },

    #[error("bisection on the ridge parameter did not converge after {0} iterations")]
    BisectionStalled(usize),

    #[error("squared worst-case error {0:e} is materially negative")]
    NegativeRadicand(f64),

    #[error("numeric kernel mean not converged: doubling resolution {resolution} changed the value by {change:e}")]
    EmbeddingNotConverged { resolution: usize, change: f64 },

    #[error("cell failed (n={n}, replicate={replicate}): {source}")]
    Cell {
        n: usize,
        replicate: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("config: {0}")]
    Config(String),

    #[error("too many failed replicates at n={n}: {failed} of {attempted}")]
    TooManyFailures {
        n: usize,
        failed: usize,
        attempted: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the failure comes from the numerics (conditioning, convergence,
    /// failed replicates) rather than from bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Conditioning { .. }
                | Error::BisectionStalled(_)
                | Error::NegativeRadicand(_)
                | Error::EmbeddingNotConverged { .. }
                | Error::Cell { .. }
                | Error::TooManyFailures { .. }
        )
    }
}

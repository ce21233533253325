use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("year {year} is outside the forecast window [{lo}, {hi}]")]
    Extrapolation { year: i32, lo: i32, hi: i32 },

    #[error("zero marginal: {0}")]
    DegenerateMargin(String),

    #[error("SVD did not converge after {iterations} iterations")]
    Convergence { iterations: usize },

    #[error("point is not on the probability simplex: {0}")]
    Simplex(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("parse error: {0}")]
    Parse(String),
}

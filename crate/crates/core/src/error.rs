use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite input")]
    NonFinite,

    #[error("empty grid")]
    EmptyGrid,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The discrete system is singular or numerically so.
    #[error("singular system (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    /// `d_ME(n)` is undefined because consecutive dual elements coincide.
    #[error("monotone error index undefined: v_(n+1) = v_n")]
    UndefinedIndex,

    #[error("solver failed at n = {n}: {source}")]
    AtLevel {
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

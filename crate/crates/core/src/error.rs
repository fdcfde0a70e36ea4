use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sector index {k} out of range 0..={n_free}")]
    Range { k: usize, n_free: usize },

    #[error("{what}: size {size} exceeds limit {limit}")]
    Size {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    /// The requested quantity is not single-valued: the free energy has two
    /// global minimizers.
    #[error(
        "ambiguous: free energy has two global minimizers at z = ±{z:.12}; use directional limits"
    )]
    Ambiguous { z: f64 },

    #[error(
        "no convergence after {iterations} iterations (last z = {last}, residual = {residual:e})"
    )]
    NonConvergence {
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the error is caused by caller input rather than by the program.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::Domain(_)
                | Error::Range { .. }
                | Error::Size { .. }
                | Error::Ambiguous { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

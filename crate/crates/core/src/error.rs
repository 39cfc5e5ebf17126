use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("spectrum has no resonant sideband k = {0}")]
    MissingSideband(i32),

    #[error("no sign change in bracket [{lo:.6e}, {hi:.6e}]: f(lo) = {f_lo:.6e}, f(hi) = {f_hi:.6e}")]
    NoCrossing {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("singular linear system ({context}); pivot ratio {pivot_ratio:.3e}")]
    Singular {
        context: &'static str,
        pivot_ratio: f64,
    },

    #[error("time grid: {0}")]
    TimeGrid(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub fn with_context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

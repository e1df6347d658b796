use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    /// A curve does not belong to the curvature class an operation requires.
    #[error("classification error: {0}")]
    Classification(String),

    #[error("rate {rate} is outside the attainable range ({lo}, {hi})")]
    Range { rate: f64, lo: f64, hi: f64 },

    /// The average rate is infinite because the change happens in one step.
    #[error("average rate is infinite for a single-step rollout")]
    InfiniteRate,

    #[error("step count reached the cap z_max = {z_max}")]
    Capped { z_max: u32 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

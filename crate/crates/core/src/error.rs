use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("derivative order {order} exceeds the supported maximum of {max}")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("unknown problem `{name}`; valid names are: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate eigenvalue direction: carrier norm {0:e} is effectively zero")]
    DegenerateDirection(f64),

    #[error("oracle error: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

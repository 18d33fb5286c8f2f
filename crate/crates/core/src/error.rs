use thiserror::Error;

/// Failure classes shared by every module. Each maps to one CLI exit code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// Malformed or out-of-range input supplied by the caller.
    #[error("input error: {0}")]
    Input(String),
    /// A functional, tree, or construction broke one of its stated conventions.
    #[error("contract error: {0}")]
    Contract(String),
    /// A fuel, width, or node budget ran out before an answer was certified.
    #[error("resource error: {0}")]
    Resource(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn message(&self) -> &str {
        match self {
            Error::Input(m) | Error::Contract(m) | Error::Resource(m) => m,
        }
    }

    /// 1 violation, 2 resource, 3 input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Contract(_) => 1,
            Error::Resource(_) => 2,
            Error::Input(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (bad action index,
    /// stepping a finished episode, empty input, negative alpha, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The tabular trainer produced a non-finite Q value.
    #[error("training failure: {0}")]
    Training(String),

    /// A file did not match its expected format.
    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

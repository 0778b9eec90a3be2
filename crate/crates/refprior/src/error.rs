use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside the model's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// An argument is structurally invalid (empty batch, size mismatch, bad range).
    #[error("invalid argument: {0}")]
    Argument(String),
    /// A computation produced a non-finite value where a finite one is required.
    #[error("numeric failure: {0}")]
    NonFinite(String),
    /// A configuration file failed to parse or validate.
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for numeric failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) | Error::Argument(_) | Error::Domain(_) => 2,
            Error::NonFinite(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

use deficiency_core::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const TEST_FAILURE: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const INVARIANT: u8 = 3;
    pub const UNSUPPORTED: u8 = 4;
    pub const BAD_SIGMA: u8 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("sigma is not a maximal resource state: {0}")]
    BadSigma(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e {
                Error::Parse(_) | Error::InvalidArgument(_) => exit::PARSE,
                Error::DimensionMismatch(_)
                | Error::InvalidState(_)
                | Error::InvalidChannel(_)
                | Error::InvalidStrategy(_) => exit::INVARIANT,
                Error::Unsupported(_) => exit::UNSUPPORTED,
            },
            CliError::BadSigma(_) => exit::BAD_SIGMA,
            CliError::Io(_) => exit::PARSE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

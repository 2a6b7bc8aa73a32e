//! Error-to-exit-code policy: a wrong invocation exits 1, unreadable or
//! unverifiable data exits 2.

use cvstego::attack::AttackError;
use cvstego::deletion::DeletionError;
use cvstego::eval::EvalError;
use cvstego::frame::FrameError;
use cvstego::index::IndexError;
use cvstego::payload::PayloadError;
use cvstego::stego::StegoError;
use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// The invocation itself is wrong: bad flag values or combinations.
    Usage(String),
    /// Inputs could not be read, parsed, or authenticated.
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

/// Annotates an I/O failure with the file it concerns.
pub fn file_error(path: &Path, err: std::io::Error) -> CliError {
    CliError::Data(format!("{}: {err}", path.display()))
}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PayloadError> for CliError {
    fn from(e: PayloadError) -> Self {
        match e {
            PayloadError::AuthFailure => CliError::Data("payload authentication failed".into()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<StegoError> for CliError {
    fn from(e: StegoError) -> Self {
        match e {
            StegoError::Payload(p) => p.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DeletionError> for CliError {
    fn from(e: DeletionError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// Attack strings come from flags, so a parse failure is a usage error;
/// failures while applying a parsed attack are data errors.
pub fn spec_parse_error(e: AttackError) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<AttackError> for CliError {
    fn from(e: AttackError) -> Self {
        CliError::Data(e.to_string())
    }
}

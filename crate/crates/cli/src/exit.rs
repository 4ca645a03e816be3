//! Exit codes and the mapping from library errors.

use seqweak_core::Error;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const EXIT_BRACKETING: u8 = 4;
pub const EXIT_DATA: u8 = 5;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    /// `data_code` is used for count-table problems: [`EXIT_DATA`] when the
    /// counts came from a file, [`EXIT_NUMERIC`] when they were simulated.
    pub fn from_core(e: Error, data_code: u8) -> Self {
        let code = match &e {
            Error::OutOfRange { .. } | Error::InvalidNoise { .. } | Error::InvalidArgument(_) => {
                EXIT_USAGE
            }
            Error::Bracketing { .. } => EXIT_BRACKETING,
            Error::CountFile { .. } | Error::Io(_) => EXIT_DATA,
            Error::CountTable(_)
            | Error::InsufficientData { .. }
            | Error::UnreachableHistory { .. } => data_code,
            Error::NonHermitian { .. }
            | Error::InvalidState(_)
            | Error::NotNormalized { .. }
            | Error::DegenerateBranch { .. }
            | Error::Uncertifiable { .. }
            | Error::ModelViolation { .. } => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

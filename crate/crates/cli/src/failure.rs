// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::process::ExitCode;

use varnn_core::Error;

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Internal = 1,
    Config = 2,
    Data = 3,
    Divergence = 4,
    GradCheck = 5,
}

#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure {
            status: Status::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            status: Status::Data,
            message: message.into(),
        }
    }

    pub fn gradcheck(message: impl Into<String>) -> Self {
        Failure {
            status: Status::GradCheck,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.status as u8)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidConfig(_) | Error::InvalidSpec(_) | Error::VariantMismatch(_) => Status::Config,
            Error::Data(_) | Error::Parse { .. } | Error::Csv(_) | Error::Format(_) | Error::Json(_) | Error::Io(_) => Status::Data,
            Error::Divergence { .. } | Error::NonFinite(_) => Status::Divergence,
            Error::Shape { .. } | Error::Consistency(_) => Status::Internal,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

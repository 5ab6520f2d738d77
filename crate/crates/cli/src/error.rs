use std::fmt;

use tfd_core::TfdError;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Integration(String),
    Truncation(String),
    Verification(usize),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Integration(_) => 3,
            CliError::Truncation(_) => 4,
            CliError::Verification(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Integration(m) => write!(f, "integration failure: {m}"),
            CliError::Truncation(m) => write!(f, "truncation refusal: {m}"),
            CliError::Verification(n) => write!(f, "verification failed: {n} check(s) did not pass"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<TfdError> for CliError {
    fn from(e: TfdError) -> Self {
        match e {
            TfdError::Truncation { .. } => CliError::Truncation(e.to_string()),
            TfdError::Integration { .. } | TfdError::NonFinite(_) => CliError::Integration(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

use vsi_core::{BackendError, Error};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

/// A one-line diagnostic and the exit code that goes with it.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn backend(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_BACKEND,
            message: message.into(),
        }
    }

    pub fn missing(flag: &str) -> Self {
        Self::usage(format!("missing required flag --{flag}"))
    }
}

/// Bad specs and unreadable fixtures are input problems; everything else a
/// backend reports is a runtime failure.
pub fn is_input_problem(e: &BackendError) -> bool {
    matches!(e, BackendError::Spec(_) | BackendError::Fixture(_))
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        if is_input_problem(&e) {
            Failure::usage(e.to_string())
        } else {
            Failure::backend(e.to_string())
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Backend(b) => b.into(),
            Error::Search { .. } => Failure::backend(e.to_string()),
            other => Failure::usage(other.to_string()),
        }
    }
}

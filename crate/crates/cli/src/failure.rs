//! Errors carrying the process exit code they map to.

use std::fmt::Display;
use std::path::Path;

use attribkit::Error;

pub const VALIDATION: u8 = 1;
pub const RUNTIME: u8 = 2;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn invalid(message: impl Display) -> Self {
        Self {
            code: VALIDATION,
            error: anyhow::anyhow!("{message}"),
        }
    }

    pub fn runtime(message: impl Display) -> Self {
        Self {
            code: RUNTIME,
            error: anyhow::anyhow!("{message}"),
        }
    }
}

/// Library errors about inputs are validation failures; numerical trouble
/// during a run is a runtime failure.
impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match error {
            Error::NonFinite(_) | Error::UndefinedCorrelation(_) => RUNTIME,
            _ => VALIDATION,
        };
        Self {
            code,
            error: error.into(),
        }
    }
}

pub trait Context<T> {
    /// Prefixes the error with what was being done, keeping its exit code.
    fn context(self, what: impl Display) -> Result<T, Failure>;
}

impl<T, E: Into<Failure>> Context<T> for Result<T, E> {
    fn context(self, what: impl Display) -> Result<T, Failure> {
        self.map_err(|e| {
            let f: Failure = e.into();
            Failure {
                code: f.code,
                error: f.error.context(what.to_string()),
            }
        })
    }
}

/// Loading an input that does not exist is a validation error.
pub fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::invalid(format!(
            "{} does not exist",
            path.display()
        )))
    }
}

/// Writes an output artifact; failures here are runtime failures.
pub fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))
}

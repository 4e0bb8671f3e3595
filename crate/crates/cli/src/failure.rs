use std::fmt;
use std::path::Path;

/// Exit status contract: 1 for failed computations, 2 for usage problems
/// (bad flags, missing inputs, unusable configuration).
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: format!("error[usage]: {}", message.into()),
        }
    }

    pub fn compute(tag: &str, message: impl fmt::Display) -> Self {
        Failure {
            code: 1,
            message: format!("error[{tag}]: {message}"),
        }
    }
}

impl From<gss3d::Error> for Failure {
    fn from(e: gss3d::Error) -> Self {
        Failure::compute(e.module(), e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::compute("cli", format!("{e:#}"))
    }
}

/// Rejects a missing input file up front with the usage exit code.
pub fn require(path: &Path) -> CliResult<&Path> {
    if path.exists() && !path.is_dir() {
        Ok(path)
    } else {
        Err(Failure::usage(format!("input file {} does not exist", path.display())))
    }
}

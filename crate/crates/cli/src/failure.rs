//! Exit-status classification: usage and I/O problems exit with 2, a stage
//! that fails on valid input exits with 1.

use std::fmt;

use faceparse::Error;

#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Stage { stage: &'static str, error: anyhow::Error },
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Stage { .. } => 1,
        }
    }
}

/// The error chain, skipping causes whose text the previous message already
/// ends with (library I/O errors embed their source).
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if out.is_empty() {
            out = text;
        } else if !out.ends_with(&text) {
            out = format!("{out}: {text}");
        }
    }
    out
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(e) => f.write_str(&chain(e)),
            Failure::Stage { stage, error } => write!(f, "stage `{stage}` failed: {}", chain(error)),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

pub type CliResult<T> = std::result::Result<T, Failure>;

pub trait StageExt<T> {
    /// Tags a library error with the stage it came from. Unreadable or
    /// malformed input counts as an I/O problem, not a stage failure.
    fn stage(self, stage: &'static str) -> CliResult<T>;
}

impl<T> StageExt<T> for faceparse::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|e| match e {
            Error::Io { .. } | Error::Parse { .. } | Error::Format(_) => Failure::Usage(e.into()),
            other => Failure::Stage {
                stage,
                error: other.into(),
            },
        })
    }
}

impl<T> StageExt<T> for anyhow::Result<T> {
    fn stage(self, stage: &'static str) -> CliResult<T> {
        self.map_err(|error| Failure::Stage { stage, error })
    }
}

//! Exit-code discipline: 1 usage, 2 data, 3 internal.

use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailKind {
    /// Bad invocation: missing or invalid flags, broken config.
    Usage,
    /// Bad or missing input data: unreadable files, malformed rows,
    /// rejected databases, series that cannot be processed.
    Data,
    /// Should-not-happen conditions inside the tool itself.
    Internal,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: FailKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Failure {
        Failure {
            kind: FailKind::Usage,
            error: error.into(),
        }
    }

    pub fn data(error: impl Into<anyhow::Error>) -> Failure {
        Failure {
            kind: FailKind::Data,
            error: error.into(),
        }
    }

    pub fn internal(error: impl Into<anyhow::Error>) -> Failure {
        Failure {
            kind: FailKind::Internal,
            error: error.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            FailKind::Usage => 1u8,
            FailKind::Data => 2,
            FailKind::Internal => 3,
        })
    }
}

pub trait ResultExt<T> {
    fn or_usage(self, ctx: &str) -> Result<T, Failure>;
    fn or_data(self, ctx: &str) -> Result<T, Failure>;
    fn or_internal(self, ctx: &str) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ResultExt<T> for Result<T, E> {
    fn or_usage(self, ctx: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::usage(e.into().context(ctx.to_owned())))
    }

    fn or_data(self, ctx: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::data(e.into().context(ctx.to_owned())))
    }

    fn or_internal(self, ctx: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure::internal(e.into().context(ctx.to_owned())))
    }
}

/// A value that must come from either a flag or the config file.
pub fn need<T>(flag: &str, value: Option<T>) -> Result<T, Failure> {
    value.ok_or_else(|| {
        Failure::usage(anyhow::anyhow!(
            "missing --{flag}; pass the flag or set it in --config"
        ))
    })
}

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage an error was raised in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Theory,
    Spectrum,
    Smallball,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Theory => "theory",
            Stage::Spectrum => "spectrum",
            Stage::Smallball => "smallball",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("config: {0}")]
    Domain(smalldev::Error),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: smalldev::Error,
    },
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn stage(stage: Stage) -> impl FnOnce(smalldev::Error) -> CliError {
        move |source| CliError::Stage { stage, source }
    }

    /// Process exit status. Status 1 is reserved for failed verification flags.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Domain(_) => 2,
            CliError::Stage { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

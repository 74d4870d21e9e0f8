use std::path::Path;

use thiserror::Error;

/// A failure mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or missing input, including bad configuration.
    #[error("{0}")]
    Input(String),
    /// Inputs were fine but a result broke an invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Invariant(_) => 3,
        }
    }

    pub fn input(msg: impl std::fmt::Display) -> Self {
        CliError::Input(msg.to_string())
    }

    /// Wraps an error with the path it concerns.
    pub fn at(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

macro_rules! input_errors {
    ($($t:ty),* $(,)?) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        })*
    };
}

input_errors!(
    std::io::Error,
    serde_json::Error,
    csv::Error,
    placeweave::ingest::IngestError,
    placeweave::netbuild::NetError,
    placeweave::metrics::MetricsError,
    placeweave::refnets::RefNetError,
    placeweave::motifs::MotifError,
    placeweave::attributes::AttrError,
    placeweave::stats::StatsError,
    placeweave::synth::SynthError,
);

pub type CliResult<T> = Result<T, CliError>;

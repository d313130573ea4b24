//! Campaign runner: configuration, orchestration and reporting.

pub mod config;
pub mod report;
pub mod run;

pub use config::CampaignConfig;
pub use run::{run, run_module, Manifest, RunOutcome, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration at `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },
    #[error("manifest not found: {0}")]
    ManifestMissing(String),
    #[error("io: {0}")]
    Io(String),
    #[error("{module}: {message}")]
    Module {
        module: &'static str,
        message: String,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration and IO problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid { .. } | CliError::ManifestMissing(_) | CliError::Io(_) => 2,
            CliError::Module { .. } => 1,
        }
    }
}

//! Experiment harness: configuration presets, dataset lifecycle, training
//! and benchmark orchestration, CSV/SVG reporting, and the verification
//! suites behind the `cwss` CLI.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod seeds;
pub mod svg;
pub mod trace;
pub mod trainer;
pub mod verify;

/// Harness errors, bucketed by CLI exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Exit code 1: bad configuration or unusable inputs.
    #[error("validation: {0}")]
    Validation(String),
    /// Exit code 2: a property suite found counterexamples.
    #[error("property failure: {0}")]
    Property(String),
    /// Exit code 3: IO or runtime failure.
    #[error("runtime: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) => 1,
            HarnessError::Property(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

impl From<cwss_core::Error> for HarnessError {
    fn from(e: cwss_core::Error) -> Self {
        match e {
            cwss_core::Error::Config(m) => HarnessError::Validation(m),
            other => HarnessError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Validation(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

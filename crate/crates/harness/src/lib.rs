//! Monte Carlo experiments and verification suites for empirical Wiener
//! chaos: configuration, seeded replicate streams, statistics, the checks
//! themselves and the artifact-writing runner behind the `empchaos` CLI.

pub mod checks;
pub mod config;
pub mod experiment;
pub mod seeds;
pub mod stats;

pub use checks::{CheckOutcome, RunContext};
pub use config::{load_config, parse_config, resolve, CheckFamily, ExperimentConfig, Resolved};
pub use experiment::{run_experiment, RunOptions, RunSummary};
pub use seeds::Stream;
pub use stats::{ks_two_sample, shape_statistics, KsResult, MomentEstimate, ShapeEstimate};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("check error: {0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] empirical_chaos::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

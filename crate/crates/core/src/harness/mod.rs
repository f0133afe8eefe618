//! Declarative experiment runner: config, seeded parallel runs, aggregation, CSV output.

pub mod config;
pub mod output;
pub mod runner;

use std::path::PathBuf;

use thiserror::Error;

use crate::env::EnvError;
use crate::learners::LearnerError;

pub use config::{AttackerSpec, ConfigError, ConfigFile, ExperimentConfig, PuKind, SuPolicy};
pub use output::{write_csv, CSV_HEADER};
pub use runner::{
    aggregate, pairwise_sum, run_experiment, run_one, run_traces, AggregateResult, Metadata, Move,
    RunTrace,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("environment: {0}")]
    Env(#[from] EnvError),
    #[error("attacker update failed: {0}")]
    Attacker(LearnerError),
    #[error("secondary-user update failed: {0}")]
    Su(LearnerError),
    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<HarnessError>,
    },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl HarnessError {
    fn attacker(e: LearnerError) -> Self {
        HarnessError::Attacker(e)
    }

    fn su(e: LearnerError) -> Self {
        HarnessError::Su(e)
    }

    fn in_run(self, run: usize) -> Self {
        HarnessError::Run {
            run,
            source: Box::new(self),
        }
    }
}

//! Configuration, stability sweeps, instability demos, verification suites
//! and report emission on top of `lichnerowicz-core`.

pub mod config;
pub mod demo;
pub mod recipe;
pub mod report;
pub mod sweep;
pub mod verify;

use thiserror::Error;

pub use config::SweepConfig;
pub use demo::{run_instability_demo, DemoOptions, DemoReport};
pub use sweep::{run_sweep, SweepReport, Verdict};
pub use verify::{run_verification_suite, run_verification_suite_with, SuiteOptions, SuiteReport};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "EL_WORKERS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("recipe: {0}")]
    Recipe(String),
    #[error("first solve failed: {0}")]
    FirstSolve(String),
    #[error("{0}")]
    Io(String),
    #[error("check failed to run: {0}")]
    Check(String),
    #[error(transparent)]
    Geometry(#[from] lichnerowicz_core::geometry::GeometryError),
    #[error(transparent)]
    Conformal(#[from] lichnerowicz_core::conformal::ConformalError),
    #[error(transparent)]
    Solver(#[from] lichnerowicz_core::solver::SolverError),
    #[error(transparent)]
    Instability(#[from] lichnerowicz_core::instability::InstabilityError),
}

impl HarnessError {
    pub(crate) fn check(e: impl std::fmt::Display) -> Self {
        HarnessError::Check(e.to_string())
    }
}

/// Worker count from `EL_WORKERS`, 1 when unset.
pub fn workers_from_env() -> Result<usize, HarnessError> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub(crate) fn worker_pool() -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers_from_env()?)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))
}

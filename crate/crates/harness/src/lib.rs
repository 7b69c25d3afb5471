//! Experiment harness: instance generators, the seeded simulation runner,
//! validation suites and the `dusa` command-line tool.

pub mod config;
pub mod generators;
pub mod runner;
pub mod validate;

pub use config::{ExperimentConfig, Family, InstanceSource, PolicyConfig, StructureConfig};
pub use generators::{gen_dispersion_instance, gen_linear_instance, gen_lipschitz_instance, Instance};
pub use runner::{normalized_regret, run_experiment, run_jobs, simulate, RunOutcome, RunRecord, SimulationParams};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] dusa_core::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unknown validation suite `{0}`")]
    UnknownSuite(String),
}

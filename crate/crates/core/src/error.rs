use dusa_conic::{ProgramError, SolveStatus};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid reward support: {0}")]
    Support(String),
    #[error("invalid reward matrix: {0}")]
    Matrix(String),
    #[error("arm {arm} out of range for {arms} arms")]
    Arm { arm: usize, arms: usize },
    #[error("reward {0} is not on the support grid")]
    OffGrid(f64),
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("model is infeasible: {0}")]
    Infeasible(String),
    #[error("solver stopped with status {status:?}: {context}")]
    Solver { status: SolveStatus, context: String },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

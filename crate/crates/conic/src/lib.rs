//! Conic programs over linear constraints and exponential-cone triples.
//!
//! [`solve`] runs a sparse primal-dual interior-point method (Clarabel);
//! [`simplex`] is an independent dense simplex kept as an LP reference.

mod program;
pub mod simplex;
mod solve;

pub use program::{exp_cone_violation, ConicProgram, Row};
pub use solve::{lp_solve, solve, Solution, SolveStatus, MAX_ITER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProgramError {
    #[error("variable index {index} out of range for {var_count} variables")]
    IndexOutOfRange { index: usize, var_count: usize },
    #[error("exponential-cone triple {0:?} repeats a variable")]
    RepeatedTripleIndex([usize; 3]),
    #[error("non-finite data in {0}")]
    NonFinite(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("tolerance {0} outside (0, 1e-2]")]
    Tolerance(f64),
    #[error("program has conic or quadratic terms; lp_solve needs a linear program")]
    NotLinear,
    #[error("backend rejected the program: {0}")]
    Backend(String),
}

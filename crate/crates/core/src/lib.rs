//! Structured multi-armed bandits with convex side information.
//!
//! The crate covers the reward model ([`bandit`]), polyhedral structure
//! descriptions and their dual cones ([`structures`]), information distances
//! and the dual function ([`info`]), regret lower bounds ([`lowerbound`]) and
//! the DUSA policy with baselines ([`policies`]).

pub mod bandit;
mod error;
pub mod info;
pub mod lowerbound;
pub mod policies;
pub mod sampling;
pub mod structures;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;

//! Arm-selection policies: DUSA and the baselines it is compared against.

mod baselines;
mod dusa;
mod updates;

use serde::Serialize;

use crate::bandit::ObservationLog;
use crate::info::RateVector;
use crate::Result;

pub use baselines::{klucb_index, KlUcb, OracleArm, OssbConfig, OssbLipschitz, Ucb1};
pub use dusa::{Dusa, DusaConfig, DusaState};
pub use updates::{deep_update, shallow_update, shallow_update_strict, DeepUpdate, ShallowOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Init,
    Exploit,
    ExploreLeast,
    ExploreRate,
    ExploreOptimal,
    /// Index policies that do not distinguish phases.
    Index,
}

impl Phase {
    pub fn label(self) -> &'static str {
        match self {
            Phase::Init => "init",
            Phase::Exploit => "exploit",
            Phase::ExploreLeast => "explore-least",
            Phase::ExploreRate => "explore-rate",
            Phase::ExploreOptimal => "explore-optimal",
            Phase::Index => "index",
        }
    }

    pub fn is_exploration(self) -> bool {
        matches!(self, Phase::ExploreLeast | Phase::ExploreRate | Phase::ExploreOptimal)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `(arm, dual-test value)` for each empirically deceitful arm.
    pub dual_tests: Vec<(usize, f64)>,
    pub threshold: Option<f64>,
    pub rates: Option<RateVector>,
    /// Set when a solver failure forced the fallback pull.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyDecision {
    pub arm: usize,
    pub phase: Phase,
    pub diagnostics: Diagnostics,
}

impl PolicyDecision {
    fn plain(arm: usize, phase: Phase) -> Self {
        Self { arm, phase, diagnostics: Diagnostics::default() }
    }
}

/// A policy chooses an arm for the upcoming round and then learns its reward level.
pub trait Policy: Send {
    fn name(&self) -> &str;
    fn select(&mut self) -> Result<PolicyDecision>;
    fn observe(&mut self, arm: usize, level: usize) -> Result<()>;
    fn log(&self) -> &ObservationLog;
    /// Exploration rounds so far (`s_t`); zero for index policies.
    fn explorations(&self) -> u64 {
        self.log().explorations()
    }
}

/// Lowest-index arm among those with the fewest pulls.
pub fn least_pulled(log: &ObservationLog) -> usize {
    least_pulled_among(log, 0..log.arms()).expect("at least one arm")
}

pub(crate) fn least_pulled_among(log: &ObservationLog, arms: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for x in arms {
        if best.map_or(true, |b| log.count(x) < log.count(b)) {
            best = Some(x);
        }
    }
    best
}

/// First never-pulled arm, if any.
pub(crate) fn init_arm(log: &ObservationLog) -> Option<usize> {
    (0..log.arms()).find(|&x| log.count(x) == 0)
}

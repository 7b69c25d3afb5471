//! Index policies, an OSSB-style Lipschitz tracker and an oracle.

use crate::bandit::{best_arm_and_value, optimal_arms, suboptimal_arms, ObservationLog, RewardMatrix};
use crate::info::bernoulli_kl;
use crate::lowerbound::lower_bound_lipschitz_rates;
use crate::structures::{StructureParams, StructureSpec};
use crate::{Error, Result};

use super::{init_arm, least_pulled, least_pulled_among, Diagnostics, Phase, Policy, PolicyDecision};

/// `max { q ∈ [m, 1] : n·I_B(m, q) ≤ budget }`, by bisection to `1e-9`.
pub fn klucb_index(mean: f64, n: f64, budget: f64) -> f64 {
    let m = mean.clamp(0.0, 1.0);
    if n <= 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (m, 1.0);
    if n * bernoulli_kl(m, hi) <= budget {
        return hi;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if n * bernoulli_kl(m, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn argmax_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// KL-UCB with exploration function `log t`; rewards enter through their means.
#[derive(Debug, Clone)]
pub struct KlUcb {
    log: ObservationLog,
}

impl KlUcb {
    pub fn new(spec: &StructureSpec) -> Result<Self> {
        Ok(Self { log: ObservationLog::new(spec.support().clone(), spec.arms())? })
    }

    pub fn indices(&self) -> Vec<f64> {
        let budget = (self.log.round() as f64).ln();
        let p = self.log.empirical();
        (0..p.arms()).map(|x| klucb_index(p.mean(x), self.log.count(x) as f64, budget)).collect()
    }
}

impl Policy for KlUcb {
    fn name(&self) -> &str {
        "kl-ucb"
    }

    fn select(&mut self) -> Result<PolicyDecision> {
        if let Some(x) = init_arm(&self.log) {
            return Ok(PolicyDecision::plain(x, Phase::Init));
        }
        Ok(PolicyDecision::plain(argmax_lowest(self.indices().into_iter()), Phase::Index))
    }

    fn observe(&mut self, arm: usize, level: usize) -> Result<()> {
        self.log.record_observation(arm, level)
    }

    fn log(&self) -> &ObservationLog {
        &self.log
    }
}

/// UCB1: `mean + sqrt(2 log t / N)`.
#[derive(Debug, Clone)]
pub struct Ucb1 {
    log: ObservationLog,
}

impl Ucb1 {
    pub fn new(spec: &StructureSpec) -> Result<Self> {
        Ok(Self { log: ObservationLog::new(spec.support().clone(), spec.arms())? })
    }

    pub fn indices(&self) -> Vec<f64> {
        let lt = (self.log.round() as f64).ln();
        let p = self.log.empirical();
        (0..p.arms()).map(|x| p.mean(x) + (2.0 * lt / self.log.count(x) as f64).sqrt()).collect()
    }
}

impl Policy for Ucb1 {
    fn name(&self) -> &str {
        "ucb1"
    }

    fn select(&mut self) -> Result<PolicyDecision> {
        if let Some(x) = init_arm(&self.log) {
            return Ok(PolicyDecision::plain(x, Phase::Init));
        }
        Ok(PolicyDecision::plain(argmax_lowest(self.indices().into_iter()), Phase::Index))
    }

    fn observe(&mut self, arm: usize, level: usize) -> Result<()> {
        self.log.record_observation(arm, level)
    }

    fn log(&self) -> &ObservationLog {
        &self.log
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OssbConfig {
    /// Exploitation slack: exploit when `N ≥ (1 + γ) η log t` on all suboptimal arms.
    pub gamma: f64,
    /// Forced exploration: pull the least-pulled arm when `min N ≤ ε s`.
    pub epsilon: f64,
}

impl Default for OssbConfig {
    fn default() -> Self {
        Self { gamma: 0.0, epsilon: 0.01 }
    }
}

/// Tracks the rates of the Lipschitz Bernoulli lower-bound LP at the current estimate.
#[derive(Debug, Clone)]
pub struct OssbLipschitz {
    log: ObservationLog,
    lipschitz: f64,
    distances: Vec<Vec<f64>>,
    config: OssbConfig,
}

impl OssbLipschitz {
    pub fn new(spec: &StructureSpec, config: OssbConfig) -> Result<Self> {
        let StructureParams::Lipschitz { lipschitz, distances } = spec.params() else {
            return Err(Error::Structure("the OSSB-style tracker needs a Lipschitz structure".into()));
        };
        if !spec.support().is_bernoulli() {
            return Err(Error::Support("the OSSB-style tracker needs rewards {0, 1}".into()));
        }
        if !(config.gamma >= 0.0 && config.epsilon > 0.0) {
            return Err(Error::Parameter("OSSB parameters must be nonnegative with positive epsilon".into()));
        }
        Ok(Self {
            log: ObservationLog::new(spec.support().clone(), spec.arms())?,
            lipschitz: *lipschitz,
            distances: distances.clone(),
            config,
        })
    }

    fn decide(&mut self) -> Result<PolicyDecision> {
        if let Some(x) = init_arm(&self.log) {
            return Ok(PolicyDecision::plain(x, Phase::Init));
        }
        let p = self.log.empirical();
        let leader = least_pulled_among(&self.log, optimal_arms(p)).expect("an optimal arm exists");
        let log_t = (self.log.round() as f64).ln();
        let sub = suboptimal_arms(p);
        let eta = match lower_bound_lipschitz_rates(p, self.lipschitz, &self.distances) {
            Ok((_, eta)) => eta,
            Err(Error::Solver { .. } | Error::Infeasible(_)) => {
                let mut d = PolicyDecision::plain(leader, Phase::Exploit);
                d.diagnostics.flagged = true;
                return Ok(d);
            }
            Err(e) => return Err(e),
        };
        let diagnostics = Diagnostics { rates: Some(eta.clone()), ..Diagnostics::default() };
        let satisfied = sub.iter().all(|&x| self.log.count(x) as f64 >= (1.0 + self.config.gamma) * eta[x] * log_t);
        if satisfied {
            return Ok(PolicyDecision { arm: leader, phase: Phase::Exploit, diagnostics });
        }
        self.log.note_exploration();
        let s = self.log.explorations() as f64;
        let min_n = self.log.counts().iter().copied().min().unwrap_or(0) as f64;
        if min_n <= self.config.epsilon * s {
            return Ok(PolicyDecision { arm: least_pulled(&self.log), phase: Phase::ExploreLeast, diagnostics });
        }
        let mut best: Option<(usize, f64)> = None;
        for &x in &sub {
            if eta[x] > 0.0 {
                let ratio = self.log.count(x) as f64 / eta[x];
                if best.map_or(true, |(_, b)| ratio < b) {
                    best = Some((x, ratio));
                }
            }
        }
        Ok(match best {
            Some((x, _)) => PolicyDecision { arm: x, phase: Phase::ExploreRate, diagnostics },
            None => PolicyDecision { arm: leader, phase: Phase::Exploit, diagnostics },
        })
    }
}

impl Policy for OssbLipschitz {
    fn name(&self) -> &str {
        "ossb-style"
    }

    fn select(&mut self) -> Result<PolicyDecision> {
        self.decide()
    }

    fn observe(&mut self, arm: usize, level: usize) -> Result<()> {
        self.log.record_observation(arm, level)
    }

    fn log(&self) -> &ObservationLog {
        &self.log
    }
}

/// Always pulls the true optimal arm; a zero-regret reference.
#[derive(Debug, Clone)]
pub struct OracleArm {
    log: ObservationLog,
    arm: usize,
}

impl OracleArm {
    pub fn new(p: &RewardMatrix) -> Result<Self> {
        Ok(Self { log: ObservationLog::new(p.support().clone(), p.arms())?, arm: best_arm_and_value(p).0 })
    }
}

impl Policy for OracleArm {
    fn name(&self) -> &str {
        "oracle"
    }

    fn select(&mut self) -> Result<PolicyDecision> {
        Ok(PolicyDecision::plain(self.arm, Phase::Exploit))
    }

    fn observe(&mut self, arm: usize, level: usize) -> Result<()> {
        self.log.record_observation(arm, level)
    }

    fn log(&self) -> &ObservationLog {
        &self.log
    }
}

//! The DUSA policy.

use crate::bandit::{optimal_arms, suboptimal_arms, ObservationLog};
use crate::info::{dual_test, DualVars, RateVector};
use crate::structures::{classify_arms, dual_cone, ArmClassification, StructureSpec};
use crate::{Error, Result};

use super::updates::{deep_update, shallow_update, shallow_update_strict, ShallowOutcome};
use super::{init_arm, least_pulled, least_pulled_among, Diagnostics, Phase, Policy, PolicyDecision};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DusaConfig {
    /// Accuracy parameter, in `(0, 1/|X|)`.
    pub epsilon: f64,
    /// Time constant of the test threshold `(1 − e^{−t/T0})(1 + ε)`.
    pub t0: f64,
    /// Use the minimum-norm selections for both updates.
    pub strict: bool,
    pub solver_tol: f64,
}

impl Default for DusaConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3, t0: 2000.0, strict: false, solver_tol: 1e-6 }
    }
}

/// Per-run state: observations, stored duals `μ_t`, reference rates `η'_t` and the last phase.
#[derive(Debug, Clone)]
pub struct DusaState {
    spec: StructureSpec,
    log: ObservationLog,
    duals: Vec<DualVars>,
    reference: RateVector,
    config: DusaConfig,
    last_phase: Option<Phase>,
    flagged_rounds: u64,
}

impl DusaState {
    pub fn new(spec: StructureSpec, config: DusaConfig) -> Result<Self> {
        let arms = spec.arms();
        if !(config.epsilon > 0.0 && config.epsilon < 1.0 / arms as f64) {
            return Err(Error::Parameter(format!("epsilon must lie in (0, 1/{arms})")));
        }
        if !(config.t0 > 0.0 && config.t0.is_finite()) {
            return Err(Error::Parameter("T0 must be positive".into()));
        }
        if !(config.solver_tol > 0.0 && config.solver_tol <= 1e-2) {
            return Err(Error::Parameter("solver tolerance must lie in (0, 1e-2]".into()));
        }
        let aux = dual_cone(&spec).aux_count();
        let log = ObservationLog::new(spec.support().clone(), arms)?;
        Ok(Self {
            duals: vec![DualVars::zero(spec.levels(), arms, aux); arms],
            reference: vec![1.0; arms],
            log,
            spec,
            config,
            last_phase: None,
            flagged_rounds: 0,
        })
    }

    pub fn log(&self) -> &ObservationLog {
        &self.log
    }

    pub fn duals(&self) -> &[DualVars] {
        &self.duals
    }

    pub fn reference_rates(&self) -> &[f64] {
        &self.reference
    }

    pub fn config(&self) -> &DusaConfig {
        &self.config
    }

    pub fn last_phase(&self) -> Option<Phase> {
        self.last_phase
    }

    /// Exploration rounds in which a solver failure forced the fallback pull.
    pub fn flagged_rounds(&self) -> u64 {
        self.flagged_rounds
    }

    pub fn threshold(&self, t: u64) -> f64 {
        (1.0 - (-(t as f64) / self.config.t0).exp()) * (1.0 + self.config.epsilon)
    }

    /// Arm classification at the current estimate.
    ///
    /// An estimate whose optimal column violates its own constraints has
    /// no feasible deceitful model, so every arm is reported non-deceitful.
    fn classification(&self) -> Result<ArmClassification> {
        let p = self.log.empirical();
        match classify_arms(&self.spec, p) {
            Err(Error::Infeasible(_)) => {
                let optimal = optimal_arms(p);
                Ok(ArmClassification {
                    rew_max: p.means(),
                    non_deceitful: suboptimal_arms(p),
                    deceitful: vec![],
                    optimal,
                })
            }
            other => other,
        }
    }

    /// Sufficient-information test at round `t`; returns the verdict and the dual-test values.
    pub fn sufficient_info_test(&self, t: u64) -> Result<(bool, Vec<(usize, f64)>)> {
        let class = self.classification()?;
        Ok(self.test_with(&class, t))
    }

    fn test_with(&self, class: &ArmClassification, t: u64) -> (bool, Vec<(usize, f64)>) {
        let p = self.log.empirical();
        let log_t = (t as f64).ln();
        let eta: Vec<f64> = self.log.counts().iter().map(|&n| n as f64 / log_t).collect();
        let threshold = self.threshold(t);
        let values: Vec<(usize, f64)> =
            class.deceitful.iter().map(|&x| (x, dual_test(&eta, x, p, &self.duals[x]))).collect();
        (values.iter().all(|&(_, v)| v >= threshold), values)
    }

    /// Chooses the arm for the upcoming round.
    pub fn step(&mut self) -> Result<PolicyDecision> {
        let decision = self.decide()?;
        self.last_phase = Some(decision.phase);
        Ok(decision)
    }

    fn decide(&mut self) -> Result<PolicyDecision> {
        if let Some(x) = init_arm(&self.log) {
            return Ok(PolicyDecision::plain(x, Phase::Init));
        }
        let t = self.log.round();
        let class = self.classification()?;
        let (pass, dual_tests) = self.test_with(&class, t);
        let mut diagnostics = Diagnostics { dual_tests, threshold: Some(self.threshold(t)), ..Diagnostics::default() };
        let leader = least_pulled_among(&self.log, class.optimal.iter().copied()).expect("an optimal arm exists");
        if pass {
            return Ok(PolicyDecision { arm: leader, phase: Phase::Exploit, diagnostics });
        }

        let s = self.log.explorations() as f64;
        self.log.note_exploration();
        let min_n = self.log.counts().iter().copied().min().unwrap_or(0) as f64;
        let eps = self.config.epsilon;
        let (mut arm, mut phase) = if min_n <= eps * s / (1.0 + (1.0 + s).ln()) {
            (least_pulled(&self.log), Phase::ExploreLeast)
        } else {
            let p = self.log.empirical();
            let tol = self.config.solver_tol;
            let outcome = if self.config.strict {
                shallow_update_strict(p, &class, &self.duals, &self.reference, eps, tol)
            } else {
                shallow_update(p, &class, &self.duals, tol)
            };
            let rates = match outcome {
                Ok(o) => o.rates(p.arms()),
                Err(Error::Solver { .. } | Error::Program(_)) => ShallowOutcome::Infeasible.rates(p.arms()),
                Err(e) => return Err(e),
            };
            let target = self.rate_target(&class, &rates);
            diagnostics.rates = Some(rates);
            match target {
                Some(xb) if self.log.count(leader) > self.log.count(xb) => (xb, Phase::ExploreRate),
                _ => (leader, Phase::ExploreOptimal),
            }
        };

        let p = self.log.empirical();
        match deep_update(&self.spec, p, &class, eps, self.config.strict, self.config.solver_tol) {
            Ok(u) => {
                self.reference = u.rates;
                self.duals = u.duals;
            }
            Err(e @ (Error::Solver { .. } | Error::Program(_))) => {
                log::debug!("round {t}: deep update failed, keeping previous duals: {e}");
                self.flagged_rounds += 1;
                diagnostics.flagged = true;
                arm = least_pulled(&self.log);
                phase = Phase::ExploreLeast;
            }
            Err(e) => return Err(e),
        }
        Ok(PolicyDecision { arm, phase, diagnostics })
    }

    /// `argmin N(x)/η(x)` over empirically suboptimal arms with positive rate.
    fn rate_target(&self, class: &ArmClassification, rates: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for x in class.suboptimal() {
            if !(rates[x] > 0.0) {
                continue;
            }
            let ratio = self.log.count(x) as f64 / rates[x];
            if best.map_or(true, |(_, b)| ratio < b) {
                best = Some((x, ratio));
            }
        }
        best.map(|(x, _)| x)
    }

    pub fn observe(&mut self, arm: usize, level: usize) -> Result<()> {
        self.log.record_observation(arm, level)
    }
}

/// [`DusaState`] behind the [`Policy`] interface.
#[derive(Debug, Clone)]
pub struct Dusa {
    name: String,
    state: DusaState,
}

impl Dusa {
    pub fn new(spec: StructureSpec, config: DusaConfig) -> Result<Self> {
        Ok(Self { name: "dusa".into(), state: DusaState::new(spec, config)? })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn state(&self) -> &DusaState {
        &self.state
    }
}

impl Policy for Dusa {
    fn name(&self) -> &str {
        &self.name
    }

    fn select(&mut self) -> Result<PolicyDecision> {
        self.state.step()
    }

    fn observe(&mut self, arm: usize, level: usize) -> Result<()> {
        self.state.observe(arm, level)
    }

    fn log(&self) -> &ObservationLog {
        self.state.log()
    }
}

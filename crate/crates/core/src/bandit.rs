//! Reward supports, reward matrices, empirical estimation and regret.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Means within this distance of the best are treated as optimal.
pub const TIE_TOL: f64 = 1e-12;

/// Updates between full renormalizations of the empirical matrix.
pub const RENORMALIZE_EVERY: u64 = 10_000;

/// Strictly increasing reward levels in `[0, 1]`, shared by all arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct RewardSupport {
    values: Vec<f64>,
}

impl RewardSupport {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Support("need at least two levels".into()));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Support("levels must lie in [0, 1]".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Support("levels must be strictly increasing".into()));
        }
        Ok(Self { values })
    }

    pub fn bernoulli() -> Self {
        Self { values: vec![0.0, 1.0] }
    }

    /// `levels` evenly spaced points `0, 1/(levels-1), …, 1`.
    pub fn grid(levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::Support("need at least two levels".into()));
        }
        let step = (levels - 1) as f64;
        Self::new((0..levels).map(|i| i as f64 / step).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn is_bernoulli(&self) -> bool {
        self.values == [0.0, 1.0]
    }

    pub fn level_of(&self, reward: f64) -> Option<usize> {
        self.values.iter().position(|v| (v - reward).abs() <= 1e-12)
    }
}

impl TryFrom<Vec<f64>> for RewardSupport {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<RewardSupport> for Vec<f64> {
    fn from(s: RewardSupport) -> Self {
        s.values
    }
}

/// Column-stochastic `|R| × |X|` matrix of reward probabilities.
///
/// Stored column by column: entry `(r, x)` lives at `x * levels + r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMatrix {
    support: RewardSupport,
    arms: usize,
    probs: Vec<f64>,
}

impl RewardMatrix {
    /// Builds a matrix from one probability column per arm.
    ///
    /// Columns whose sum is within `1e-9` of one are rescaled to sum to one.
    pub fn new(support: RewardSupport, columns: Vec<Vec<f64>>) -> Result<Self> {
        let levels = support.len();
        if columns.is_empty() {
            return Err(Error::Matrix("need at least one arm".into()));
        }
        let mut probs = Vec::with_capacity(levels * columns.len());
        for (x, col) in columns.iter().enumerate() {
            if col.len() != levels {
                return Err(Error::Matrix(format!("arm {x}: expected {levels} entries, got {}", col.len())));
            }
            if col.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::Matrix(format!("arm {x}: entries must be finite and nonnegative")));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Matrix(format!("arm {x}: column sums to {sum}")));
            }
            probs.extend(col.iter().map(|p| p / sum));
        }
        Ok(Self { support, arms: columns.len(), probs })
    }

    /// Bernoulli arms with the given success probabilities.
    pub fn bernoulli(means: &[f64]) -> Result<Self> {
        if means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::Matrix("Bernoulli means must lie in [0, 1]".into()));
        }
        Self::new(RewardSupport::bernoulli(), means.iter().map(|&m| vec![1.0 - m, m]).collect())
    }

    fn uniform(support: RewardSupport, arms: usize) -> Self {
        let levels = support.len();
        Self { probs: vec![1.0 / levels as f64; levels * arms], support, arms }
    }

    pub fn support(&self) -> &RewardSupport {
        &self.support
    }

    pub fn levels(&self) -> usize {
        self.support.len()
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn get(&self, r: usize, x: usize) -> f64 {
        self.probs[x * self.levels() + r]
    }

    pub fn column(&self, x: usize) -> &[f64] {
        let k = self.levels();
        &self.probs[x * k..(x + 1) * k]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.levels())
    }

    /// Flattened column-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self, x: usize) -> f64 {
        self.column(x).iter().zip(self.support.values()).map(|(p, r)| p * r).sum()
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.arms).map(|x| self.mean(x)).collect()
    }

    pub fn check_arm(&self, x: usize) -> Result<()> {
        if x < self.arms {
            Ok(())
        } else {
            Err(Error::Arm { arm: x, arms: self.arms })
        }
    }
}

pub fn mean_reward(p: &RewardMatrix, x: usize) -> f64 {
    p.mean(x)
}

/// Lowest-index maximizing arm and the best mean `Rew⋆(P)`.
pub fn best_arm_and_value(p: &RewardMatrix) -> (usize, f64) {
    let mut best = (0, p.mean(0));
    for x in 1..p.arms() {
        let m = p.mean(x);
        if m > best.1 {
            best = (x, m);
        }
    }
    best
}

/// `Rew⋆(P) − mean(x)`.
pub fn gap(p: &RewardMatrix, x: usize) -> f64 {
    let (_, best) = best_arm_and_value(p);
    (best - p.mean(x)).max(0.0)
}

/// Arms whose mean is within [`TIE_TOL`] of the best.
pub fn optimal_arms(p: &RewardMatrix) -> Vec<usize> {
    let (_, best) = best_arm_and_value(p);
    (0..p.arms()).filter(|&x| p.mean(x) >= best - TIE_TOL).collect()
}

/// Complement of [`optimal_arms`].
pub fn suboptimal_arms(p: &RewardMatrix) -> Vec<usize> {
    let (_, best) = best_arm_and_value(p);
    (0..p.arms()).filter(|&x| p.mean(x) < best - TIE_TOL).collect()
}

/// Sum of gaps of the pulled arms.
pub fn pseudo_regret(p: &RewardMatrix, pulls: &[usize]) -> Result<f64> {
    let (_, best) = best_arm_and_value(p);
    pulls.iter().try_fold(0.0, |acc, &x| {
        p.check_arm(x)?;
        Ok(acc + (best - p.mean(x)).max(0.0))
    })
}

/// Pull counts, running empirical distribution and round bookkeeping.
///
/// Columns of arms that were never pulled hold the uniform distribution
/// until their first observation overwrites them.
#[derive(Debug, Clone)]
pub struct ObservationLog {
    counts: Vec<u64>,
    empirical: RewardMatrix,
    explorations: u64,
    since_renormalize: u64,
}

impl ObservationLog {
    pub fn new(support: RewardSupport, arms: usize) -> Result<Self> {
        if arms == 0 {
            return Err(Error::Parameter("need at least one arm".into()));
        }
        Ok(Self {
            counts: vec![0; arms],
            empirical: RewardMatrix::uniform(support, arms),
            explorations: 0,
            since_renormalize: 0,
        })
    }

    pub fn arms(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, x: usize) -> u64 {
        self.counts[x]
    }

    pub fn empirical(&self) -> &RewardMatrix {
        &self.empirical
    }

    pub fn total_pulls(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index of the upcoming round, starting at 1.
    pub fn round(&self) -> u64 {
        self.total_pulls() + 1
    }

    pub fn explorations(&self) -> u64 {
        self.explorations
    }

    pub fn note_exploration(&mut self) {
        self.explorations += 1;
    }

    pub fn all_pulled(&self) -> bool {
        self.counts.iter().all(|&n| n > 0)
    }

    /// Applies the running-average update for reward level `level` on arm `x`.
    pub fn record_observation(&mut self, x: usize, level: usize) -> Result<()> {
        self.empirical.check_arm(x)?;
        let k = self.empirical.levels();
        if level >= k {
            return Err(Error::OffGrid(level as f64));
        }
        let n = self.counts[x] as f64;
        let col = &mut self.empirical.probs[x * k..(x + 1) * k];
        for (r, p) in col.iter_mut().enumerate() {
            let hit = if r == level { 1.0 } else { 0.0 };
            *p = (hit + n * *p) / (n + 1.0);
        }
        self.counts[x] += 1;
        self.since_renormalize += 1;
        if self.since_renormalize >= RENORMALIZE_EVERY {
            self.renormalize();
        }
        Ok(())
    }

    /// Like [`record_observation`](Self::record_observation) but takes the reward value.
    pub fn record_reward(&mut self, x: usize, reward: f64) -> Result<()> {
        let level = self.empirical.support.level_of(reward).ok_or(Error::OffGrid(reward))?;
        self.record_observation(x, level)
    }

    fn renormalize(&mut self) {
        let k = self.empirical.levels();
        for col in self.empirical.probs.chunks_mut(k) {
            let s: f64 = col.iter().sum();
            col.iter_mut().for_each(|p| *p /= s);
        }
        self.since_renormalize = 0;
    }
}

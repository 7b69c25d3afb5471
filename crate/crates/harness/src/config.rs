//! Experiment configuration, read from TOML.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dusa_core::bandit::{RewardMatrix, RewardSupport};
use dusa_core::policies::{DusaConfig, OssbConfig};
use dusa_core::structures::{ColumnConstraint, StructureSpec};

use crate::generators::{gen_dispersion_instance, gen_linear_instance, gen_lipschitz_instance, Instance};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    /// Horizon `T`; defaults per generated family when omitted.
    #[serde(default)]
    pub horizon: Option<u64>,
    /// Replication seeds. When omitted, `0..replications` is used.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub replications: Option<u64>,
    /// A record is written every `stride` rounds and at `T`.
    #[serde(default = "default_stride")]
    pub stride: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub instances: InstanceSource,
    pub policies: Vec<PolicyConfig>,
}

fn default_stride() -> u64 {
    100
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Lipschitz,
    Dispersion,
}

impl Family {
    pub fn default_horizon(self) -> u64 {
        match self {
            Family::Linear => 20_000,
            Family::Lipschitz | Family::Dispersion => 10_000,
        }
    }

    pub fn generate(self, seed: u64) -> dusa_core::Result<Instance> {
        match self {
            Family::Linear => gen_linear_instance(seed),
            Family::Lipschitz => gen_lipschitz_instance(seed),
            Family::Dispersion => gen_dispersion_instance(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceSource {
    /// Instances drawn by a generator, one per seed.
    Generated { family: Family, seeds: Vec<u64> },
    /// One instance given entry by entry.
    Explicit {
        #[serde(default)]
        id: Option<String>,
        /// Reward values; `{0, 1}` when omitted.
        #[serde(default)]
        support: Option<Vec<f64>>,
        /// One probability column per arm; exclusive with `means`.
        #[serde(default)]
        columns: Option<Vec<Vec<f64>>>,
        /// Bernoulli success probabilities.
        #[serde(default)]
        means: Option<Vec<f64>>,
        structure: StructureConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StructureConfig {
    Separable {
        #[serde(default)]
        constraints: Vec<ColumnConstraint>,
    },
    /// Distances from `positions` on a line, or given as a full matrix.
    Lipschitz {
        lipschitz: f64,
        #[serde(default)]
        positions: Option<Vec<f64>>,
        #[serde(default)]
        distances: Option<Vec<Vec<f64>>>,
    },
    Linear {
        features: Vec<Vec<f64>>,
    },
    Dispersion {
        gamma: Vec<f64>,
    },
}

impl StructureConfig {
    pub fn build(&self, support: RewardSupport, arms: usize) -> Result<StructureSpec, HarnessError> {
        let spec = match self {
            StructureConfig::Separable { constraints } => StructureSpec::separable(support, arms, constraints.clone())?,
            StructureConfig::Lipschitz { lipschitz, positions, distances } => match (positions, distances) {
                (Some(pos), None) => StructureSpec::lipschitz_on_line(support, *lipschitz, pos)?,
                (None, Some(d)) => StructureSpec::lipschitz(support, *lipschitz, d.clone())?,
                _ => return Err(HarnessError::Config("lipschitz needs exactly one of positions, distances".into())),
            },
            StructureConfig::Linear { features } => StructureSpec::linear(support, features.clone())?,
            StructureConfig::Dispersion { gamma } => StructureSpec::dispersion(support, gamma.clone())?,
        };
        if spec.arms() != arms {
            return Err(HarnessError::Config(format!("structure describes {} arms, the model has {arms}", spec.arms())));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicyConfig {
    Dusa {
        #[serde(default)]
        name: Option<String>,
        #[serde(default = "default_dusa_epsilon")]
        epsilon: f64,
        #[serde(default = "default_t0")]
        t0: f64,
        #[serde(default)]
        strict: bool,
        #[serde(default = "default_solver_tol")]
        solver_tol: f64,
    },
    KlUcb,
    Ucb1,
    Ossb {
        #[serde(default)]
        gamma: f64,
        #[serde(default = "default_ossb_epsilon")]
        epsilon: f64,
    },
    Oracle,
}

fn default_dusa_epsilon() -> f64 {
    DusaConfig::default().epsilon
}

fn default_t0() -> f64 {
    DusaConfig::default().t0
}

fn default_solver_tol() -> f64 {
    DusaConfig::default().solver_tol
}

fn default_ossb_epsilon() -> f64 {
    OssbConfig::default().epsilon
}

impl PolicyConfig {
    pub fn dusa(config: DusaConfig) -> Self {
        PolicyConfig::Dusa {
            name: None,
            epsilon: config.epsilon,
            t0: config.t0,
            strict: config.strict,
            solver_tol: config.solver_tol,
        }
    }

    pub fn ossb(config: OssbConfig) -> Self {
        PolicyConfig::Ossb { gamma: config.gamma, epsilon: config.epsilon }
    }

    /// Label used in the output.
    pub fn label(&self) -> String {
        match self {
            PolicyConfig::Dusa { name: Some(n), .. } => n.clone(),
            PolicyConfig::Dusa { strict, .. } => if *strict { "dusa-strict" } else { "dusa" }.into(),
            PolicyConfig::KlUcb => "kl-ucb".into(),
            PolicyConfig::Ucb1 => "ucb1".into(),
            PolicyConfig::Ossb { .. } => "ossb-style".into(),
            PolicyConfig::Oracle => "oracle".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn seeds(&self) -> Vec<u64> {
        match (&self.seeds, self.replications) {
            (Some(s), _) => s.clone(),
            (None, Some(n)) => (0..n).collect(),
            (None, None) => vec![0],
        }
    }

    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(match &self.instances {
            InstanceSource::Generated { family, .. } => family.default_horizon(),
            InstanceSource::Explicit { .. } => 10_000,
        })
    }

    /// Structural checks that do not need the instances.
    pub fn check(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        let seeds = self.seeds();
        if seeds.is_empty() {
            return bad("need at least one seed");
        }
        if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
            return bad("seeds must be distinct");
        }
        if let (Some(s), Some(n)) = (&self.seeds, self.replications) {
            if s.len() as u64 != n {
                return bad("replications disagrees with the number of seeds");
            }
        }
        if self.horizon == Some(0) {
            return bad("horizon must be positive");
        }
        if self.stride == 0 {
            return bad("stride must be positive");
        }
        if self.policies.is_empty() {
            return bad("need at least one policy");
        }
        let labels: HashSet<String> = self.policies.iter().map(PolicyConfig::label).collect();
        if labels.len() != self.policies.len() {
            return bad("policy labels must be distinct");
        }
        if let InstanceSource::Generated { seeds, .. } = &self.instances {
            if seeds.is_empty() {
                return bad("need at least one instance seed");
            }
            if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
                return bad("instance seeds must be distinct");
            }
        }
        Ok(())
    }

    /// Builds every instance and checks `T ≥ |X| + 1` against it.
    pub fn instances(&self) -> Result<Vec<Instance>, HarnessError> {
        let list = match &self.instances {
            InstanceSource::Generated { family, seeds } => {
                seeds.iter().map(|&s| family.generate(s)).collect::<dusa_core::Result<Vec<_>>>()?
            }
            InstanceSource::Explicit { id, support, columns, means, structure } => {
                let support = match support {
                    Some(v) => RewardSupport::new(v.clone())?,
                    None => RewardSupport::bernoulli(),
                };
                let p = match (columns, means) {
                    (Some(c), None) => RewardMatrix::new(support.clone(), c.clone())?,
                    (None, Some(m)) if support.is_bernoulli() => RewardMatrix::bernoulli(m)?,
                    (None, Some(_)) => return Err(HarnessError::Config("means need the {0, 1} support".into())),
                    _ => return Err(HarnessError::Config("give exactly one of columns, means".into())),
                };
                let spec = structure.build(support, p.arms())?;
                spec.check_matrix(&p)?;
                if !spec.contains(&p, 1e-9)? {
                    return Err(HarnessError::Config("the reward matrix violates its structure".into()));
                }
                vec![Instance { id: id.clone().unwrap_or_else(|| "explicit".into()), spec, p }]
            }
        };
        let horizon = self.horizon();
        for inst in &list {
            if horizon < inst.p.arms() as u64 + 1 {
                return Err(HarnessError::Config(format!("horizon must be at least {}", inst.p.arms() + 1)));
            }
        }
        Ok(list)
    }
}

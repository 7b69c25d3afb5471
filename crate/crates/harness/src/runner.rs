//! Seeded simulation of policies on instances, with CSV and JSON output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use dusa_conic::SolveStatus;
use dusa_core::bandit::{gap, RewardMatrix};
use dusa_core::lowerbound::lower_bound_dual;
use dusa_core::policies::{Dusa, DusaConfig, KlUcb, OracleArm, OssbConfig, OssbLipschitz, Policy, Ucb1};

use crate::config::{ExperimentConfig, PolicyConfig};
use crate::generators::Instance;
use crate::HarnessError;

/// Lower bounds at or below this are treated as zero when normalizing.
pub const ZERO_BOUND: f64 = 1e-9;

pub const CSV_HEADER: &str = "instance_id,seed,policy,t,cum_regret,normalized_regret,s_t,phase,round_time_us";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance_id: String,
    pub seed: u64,
    pub policy: String,
    pub t: u64,
    pub cum_regret: f64,
    pub normalized_regret: f64,
    pub s_t: u64,
    pub phase: String,
    pub round_time_us: f64,
}

/// `regret / (C log T)`, or the raw regret with `false` when `C ≤ 1e-9`.
///
/// `T` below 2 is treated as 2 so early rows stay finite.
pub fn normalized_regret(regret: f64, c: f64, t: u64) -> (f64, bool) {
    if c > ZERO_BOUND {
        (regret / (c * (t.max(2) as f64).ln()), true)
    } else {
        (regret, false)
    }
}

/// One `(instance, seed, policy)` simulation.
#[derive(Debug, Clone, Serialize)]
pub struct RunOutcome {
    pub instance_id: String,
    pub seed: u64,
    pub policy: String,
    pub rounds: u64,
    pub final_regret: f64,
    pub explorations: u64,
    pub normalized: bool,
    /// Rounds whose decision carried the solver-failure flag.
    pub flagged_rounds: u64,
    pub error: Option<String>,
    #[serde(skip)]
    pub records: Vec<RunRecord>,
    /// Per-round wall times in microseconds, keyed by phase label.
    #[serde(skip)]
    pub phase_times: BTreeMap<String, Vec<f64>>,
}

impl RunOutcome {
    /// Last record at or before round `t`.
    pub fn record_at(&self, t: u64) -> Option<&RunRecord> {
        self.records.iter().take_while(|r| r.t <= t).last()
    }

    pub fn median_time(&self, phase: &str) -> Option<f64> {
        self.phase_times.get(phase).and_then(|v| median(v))
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub instance_id: String,
    pub arms: usize,
    pub lower_bound: f64,
    pub lower_bound_status: SolveStatus,
    pub deceitful: Vec<usize>,
    pub normalized: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub name: Option<String>,
    pub horizon: u64,
    pub instances: Vec<InstanceSummary>,
    pub runs: Vec<RunOutcome>,
}

pub fn build_policy(config: &PolicyConfig, instance: &Instance) -> dusa_core::Result<Box<dyn Policy>> {
    let spec = &instance.spec;
    Ok(match config {
        PolicyConfig::Dusa { epsilon, t0, strict, solver_tol, .. } => {
            let cfg = DusaConfig { epsilon: *epsilon, t0: *t0, strict: *strict, solver_tol: *solver_tol };
            Box::new(Dusa::new(spec.clone(), cfg)?.with_name(config.label()))
        }
        PolicyConfig::KlUcb => Box::new(KlUcb::new(spec)?),
        PolicyConfig::Ucb1 => Box::new(Ucb1::new(spec)?),
        PolicyConfig::Ossb { gamma, epsilon } => {
            Box::new(OssbLipschitz::new(spec, OssbConfig { gamma: *gamma, epsilon: *epsilon })?)
        }
        PolicyConfig::Oracle => Box::new(OracleArm::new(&instance.p)?),
    })
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Reward generator for one `(instance, seed, policy)` triple.
///
/// The key is derived from `(instance, seed)`, the stream from the policy
/// label and the word position from the round, so each draw depends only
/// on its coordinates.
pub struct RewardStream {
    rng: ChaCha8Rng,
}

impl RewardStream {
    pub fn new(instance_id: &str, seed: u64, policy: &str) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(fnv1a(instance_id.as_bytes()) ^ splitmix(seed)));
        rng.set_stream(fnv1a(policy.as_bytes()));
        Self { rng }
    }

    /// Uniform draw for round `t` (1-based).
    pub fn uniform(&mut self, t: u64) -> f64 {
        self.rng.set_word_pos(2 * (t as u128 - 1));
        self.rng.gen()
    }

    /// Reward level of `arm` in round `t`.
    pub fn level(&mut self, p: &RewardMatrix, arm: usize, t: u64) -> usize {
        sample_level(p.column(arm), self.uniform(t))
    }
}

/// Inverse-CDF draw from a probability column.
pub fn sample_level(column: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (l, p) in column.iter().enumerate() {
        acc += p;
        if u < acc {
            return l;
        }
    }
    column.iter().rposition(|p| *p > 0.0).unwrap_or(column.len() - 1)
}

pub struct SimulationParams {
    pub horizon: u64,
    pub stride: u64,
    /// Lower bound used to normalize the regret column.
    pub lower_bound: f64,
}

/// Runs `policy` for `horizon` rounds; a policy error ends the run and is recorded.
pub fn simulate(instance: &Instance, policy: &PolicyConfig, seed: u64, params: &SimulationParams) -> RunOutcome {
    let label = policy.label();
    let mut outcome = RunOutcome {
        instance_id: instance.id.clone(),
        seed,
        policy: label.clone(),
        rounds: 0,
        final_regret: 0.0,
        explorations: 0,
        normalized: params.lower_bound > ZERO_BOUND,
        flagged_rounds: 0,
        error: None,
        records: Vec::new(),
        phase_times: BTreeMap::new(),
    };
    let mut pol = match build_policy(policy, instance) {
        Ok(p) => p,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    let mut stream = RewardStream::new(&instance.id, seed, &label);
    let p = &instance.p;
    let mut regret = 0.0;
    for t in 1..=params.horizon {
        let start = Instant::now();
        let decision = match pol.select() {
            Ok(d) => d,
            Err(e) => {
                outcome.error = Some(format!("round {t}: {e}"));
                break;
            }
        };
        let level = stream.level(p, decision.arm, t);
        if let Err(e) = pol.observe(decision.arm, level) {
            outcome.error = Some(format!("round {t}: {e}"));
            break;
        }
        let micros = start.elapsed().as_secs_f64() * 1e6;
        regret += gap(p, decision.arm);
        outcome.rounds = t;
        if decision.diagnostics.flagged {
            outcome.flagged_rounds += 1;
        }
        let phase = decision.phase.label();
        outcome.phase_times.entry(phase.to_string()).or_default().push(micros);
        if t % params.stride == 0 || t == params.horizon {
            outcome.records.push(RunRecord {
                instance_id: instance.id.clone(),
                seed,
                policy: label.clone(),
                t,
                cum_regret: regret,
                normalized_regret: normalized_regret(regret, params.lower_bound, t).0,
                s_t: pol.explorations(),
                phase: phase.to_string(),
                round_time_us: micros,
            });
        }
    }
    if outcome.error.is_some() {
        log::error!("{} seed {} {}: {}", instance.id, seed, label, outcome.error.as_deref().unwrap_or(""));
    }
    outcome.final_regret = regret;
    outcome.explorations = pol.explorations();
    outcome
}

pub fn summarize_instance(instance: &Instance) -> Result<InstanceSummary, HarnessError> {
    let lb = lower_bound_dual(&instance.spec, &instance.p)?;
    Ok(InstanceSummary {
        instance_id: instance.id.clone(),
        arms: instance.p.arms(),
        lower_bound: lb.value,
        lower_bound_status: lb.status,
        normalized: lb.value > ZERO_BOUND,
        deceitful: lb.deceitful,
    })
}

/// Every `(instance, seed, policy)` combination, replications in parallel.
///
/// Output order is instance, then seed, then policy, independent of scheduling.
pub fn run_jobs(
    instances: &[Instance],
    policies: &[PolicyConfig],
    seeds: &[u64],
    horizon: u64,
    stride: u64,
) -> Result<(Vec<InstanceSummary>, Vec<RunOutcome>), HarnessError> {
    let summaries = instances.iter().map(summarize_instance).collect::<Result<Vec<_>, _>>()?;
    let mut jobs = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &seed in seeds {
            for pol in policies {
                jobs.push((i, seed, pol));
            }
        }
    }
    let runs = jobs
        .par_iter()
        .map(|&(i, seed, pol)| {
            let params = SimulationParams { horizon, stride, lower_bound: summaries[i].lower_bound };
            log::info!("{} seed {} {}", instances[i].id, seed, pol.label());
            simulate(&instances[i], pol, seed, &params)
        })
        .collect();
    Ok((summaries, runs))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, HarnessError> {
    config.check()?;
    let instances = config.instances()?;
    let horizon = config.horizon();
    let (summaries, runs) = run_jobs(&instances, &config.policies, &config.seeds(), horizon, config.stride)?;
    Ok(ExperimentOutput { name: config.name.clone(), horizon, instances: summaries, runs })
}

pub fn write_csv<W: Write>(out: W, runs: &[RunOutcome]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    if runs.iter().all(|r| r.records.is_empty()) {
        w.write_record(CSV_HEADER.split(','))?;
    }
    for run in runs {
        for rec in &run.records {
            w.serialize(rec)?;
        }
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(HarnessError::Config(format!("unexpected CSV header {}", header.join(","))));
    }
    r.deserialize().map(|rec| rec.map_err(HarnessError::from)).collect()
}

/// Path of the JSON sidecar written next to `csv`.
pub fn summary_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".summary.json");
    PathBuf::from(name)
}

/// Writes the CSV and its JSON sidecar.
pub fn write_outputs(path: &Path, output: &ExperimentOutput) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let file = std::fs::File::create(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    write_csv(std::io::BufWriter::new(file), &output.runs)?;
    let json = serde_json::to_string_pretty(output).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(summary_path(path), json).map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(())
}

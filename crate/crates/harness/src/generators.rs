//! Seeded instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use dusa_core::bandit::{RewardMatrix, RewardSupport};
use dusa_core::sampling::uniform_simplex;
use dusa_core::structures::{project_l1, StructureSpec};
use dusa_core::Result;

pub const ARMS: usize = 10;
pub const LINEAR_DIM: usize = 5;
pub const LIPSCHITZ_CONSTANT: f64 = 0.5;
pub const DISPERSION_LEVELS: usize = 11;

/// A bandit problem: structure plus the true reward matrix.
#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub spec: StructureSpec,
    pub p: RewardMatrix,
}

/// Lipschitz mean profile peaking at `0.8` for position `0.5`.
pub fn lipschitz_mean(position: f64) -> f64 {
    0.8 - 0.5 * (0.5 - position).abs()
}

/// Bernoulli arms at uniform positions on `[0, 1]` with `L = 0.5` and `d = |x − x'|`.
pub fn gen_lipschitz_instance(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions: Vec<f64> = (0..ARMS).map(|_| rng.gen::<f64>()).collect();
    lipschitz_instance(format!("lipschitz-{seed}"), &positions)
}

pub fn lipschitz_instance(id: String, positions: &[f64]) -> Result<Instance> {
    let means: Vec<f64> = positions.iter().map(|&x| lipschitz_mean(x)).collect();
    let spec = StructureSpec::lipschitz_on_line(RewardSupport::bernoulli(), LIPSCHITZ_CONSTANT, positions)?;
    Ok(Instance { id, spec, p: RewardMatrix::bernoulli(&means)? })
}

/// Bernoulli arms with means `c_x·θ`; features have a constant last coordinate and
/// `θ` is rescaled so the means span `[0.1, 0.9]`.
///
/// A draw with all raw means equal is replaced by the draw for `seed + 1`.
pub fn gen_linear_instance(seed: u64) -> Result<Instance> {
    let mut s = seed;
    loop {
        if let Some(inst) = linear_draw(s)? {
            return Ok(Instance { id: format!("linear-{seed}"), ..inst });
        }
        s = s.wrapping_add(1);
    }
}

fn linear_draw(seed: u64) -> Result<Option<Instance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let features: Vec<Vec<f64>> = (0..ARMS)
        .map(|_| {
            let mut c: Vec<f64> = (0..LINEAR_DIM - 1).map(|_| rng.sample(StandardNormal)).collect();
            c.push(1.0);
            c
        })
        .collect();
    let mut theta: Vec<f64> = (0..LINEAR_DIM).map(|_| rng.sample(StandardNormal)).collect();
    let dot = |c: &[f64], th: &[f64]| c.iter().zip(th).map(|(a, b)| a * b).sum::<f64>();
    let raw: Vec<f64> = features.iter().map(|c| dot(c, &theta)).collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > 1e-9) {
        return Ok(None);
    }
    let a = 0.8 / (hi - lo);
    let b = 0.1 - a * lo;
    theta.iter_mut().for_each(|v| *v *= a);
    theta[LINEAR_DIM - 1] += b;
    // exact endpoints; rounding in c·θ can leave the extremes off by an ulp or two
    let means: Vec<f64> = raw
        .iter()
        .map(|&m| if m == lo { 0.1 } else if m == hi { 0.9 } else { (a * m + b).clamp(0.1, 0.9) })
        .collect();
    let spec = StructureSpec::linear(RewardSupport::bernoulli(), features)?;
    Ok(Some(Instance { id: String::new(), spec, p: RewardMatrix::bernoulli(&means)? }))
}

/// Rewards on `{0, 0.1, …, 1}` with `γ(x) = 1/11 + U[0, 0.2]`; columns are uniform
/// simplex draws moved to the nearest feasible matrix in ℓ1.
pub fn gen_dispersion_instance(seed: u64) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support = RewardSupport::grid(DISPERSION_LEVELS)?;
    let gamma: Vec<f64> = (0..ARMS).map(|_| 1.0 / DISPERSION_LEVELS as f64 + rng.gen_range(0.0..=0.2)).collect();
    let spec = StructureSpec::dispersion(support.clone(), gamma)?;
    let cols = (0..ARMS).map(|_| uniform_simplex(&mut rng, DISPERSION_LEVELS)).collect();
    let q = RewardMatrix::new(support, cols)?;
    let p = project_if_needed(&spec, q)?;
    Ok(Instance { id: format!("dispersion-{seed}"), spec, p })
}

/// `q` itself when it already satisfies the structure, otherwise its ℓ1 projection.
pub fn project_if_needed(spec: &StructureSpec, q: RewardMatrix) -> Result<RewardMatrix> {
    if spec.contains(&q, 0.0)? {
        Ok(q)
    } else {
        project_l1(spec, &q)
    }
}

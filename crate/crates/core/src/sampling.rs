//! Random members of the model set, its cone and the dual cone.

use rand::Rng;

use crate::bandit::RewardMatrix;
use crate::info::DualVars;
use crate::structures::{project_l1, StructureParams, StructureSpec};
use crate::Result;

/// Uniform draw from the probability simplex with `k` vertices (sorted-uniform spacings).
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..k.saturating_sub(1)).map(|_| rng.gen::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Column-stochastic matrix with independent uniform columns.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, spec: &StructureSpec) -> RewardMatrix {
    let cols = (0..spec.arms()).map(|_| uniform_simplex(rng, spec.levels())).collect();
    RewardMatrix::new(spec.support().clone(), cols).expect("simplex draws are stochastic")
}

/// A member of 𝒫: the ℓ1 projection of a uniform random matrix.
pub fn sample_model<R: Rng + ?Sized>(rng: &mut R, spec: &StructureSpec) -> Result<RewardMatrix> {
    project_l1(spec, &random_matrix(rng, spec))
}

/// A member of `K = cone(𝒫)` as flattened entries, scaled by a random factor in `[0, scale]`.
pub fn sample_primal_point<R: Rng + ?Sized>(rng: &mut R, spec: &StructureSpec, scale: f64) -> Result<Vec<f64>> {
    let p = sample_model(rng, spec)?;
    let theta = rng.gen_range(0.0..=scale);
    Ok(p.as_slice().iter().map(|v| theta * v).collect())
}

fn zero_sum<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
    let mean = v.iter().sum::<f64>() / n as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    v
}

/// Removes from `v` its component in the span of `basis` (Gram–Schmidt).
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        let mut u = b.clone();
        for q in &ortho {
            let d: f64 = u.iter().zip(q).map(|(a, c)| a * c).sum();
            u.iter_mut().zip(q).for_each(|(a, c)| *a -= d * c);
        }
        let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-10 {
            u.iter_mut().for_each(|a| *a /= norm);
            ortho.push(u);
        }
    }
    for q in &ortho {
        let d: f64 = v.iter().zip(q).map(|(a, c)| a * c).sum();
        v.iter_mut().zip(q).for_each(|(a, c)| *a -= d * c);
    }
}

/// A member `(λ, aux)` of the dual cone with entries of size about `scale`.
///
/// Built from the multiplier form of each description, so the auxiliaries
/// certify membership exactly (up to rounding).
pub fn sample_dual_point<R: Rng + ?Sized>(rng: &mut R, spec: &StructureSpec, scale: f64) -> (Vec<f64>, Vec<f64>) {
    let k = spec.levels();
    let arms = spec.arms();
    let r = spec.support().values();
    let slack = |rng: &mut R| rng.gen_range(0.0..=scale) * if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    let mut lambda = vec![0.0; k * arms];
    let aux;
    match spec.params() {
        StructureParams::Separable { constraints } => {
            let gamma = zero_sum(rng, arms, scale);
            let tau: Vec<f64> = constraints.iter().map(|_| rng.gen_range(0.0..=scale)).collect();
            for x in 0..arms {
                for l in 0..k {
                    let mut v = gamma[x];
                    for (c, t) in constraints.iter().zip(&tau).filter(|(c, _)| c.arm == x) {
                        v += t * (c.coeffs[l] - c.rhs);
                    }
                    lambda[x * k + l] = v + slack(rng);
                }
            }
            aux = gamma.into_iter().chain(tau).collect();
        }
        StructureParams::Lipschitz { lipschitz, distances } => {
            let pairs = spec.lipschitz_pairs();
            let big: Vec<f64> = pairs.iter().map(|_| rng.gen_range(0.0..=scale)).collect();
            let budget: f64 = pairs.iter().zip(&big).map(|(&(a, b), v)| lipschitz * distances[a][b] * v).sum();
            let mut gamma = zero_sum(rng, arms, scale);
            gamma.iter_mut().for_each(|g| *g += budget / arms as f64);
            for x in 0..arms {
                let flow: f64 = pairs
                    .iter()
                    .zip(&big)
                    .map(|(&(a, b), v)| if a == x { *v } else if b == x { -*v } else { 0.0 })
                    .sum();
                for l in 0..k {
                    lambda[x * k + l] = gamma[x] - r[l] * flow + slack(rng);
                }
            }
            aux = gamma.into_iter().chain(big).collect();
        }
        StructureParams::Linear { features } => {
            let gamma = zero_sum(rng, arms, scale);
            let mut nu: Vec<f64> = (0..arms).map(|_| rng.gen_range(-scale..=scale)).collect();
            let basis: Vec<Vec<f64>> = (0..features[0].len()).map(|j| features.iter().map(|c| c[j]).collect()).collect();
            project_out(&mut nu, &basis);
            for x in 0..arms {
                for l in 0..k {
                    lambda[x * k + l] = gamma[x] + r[l] * nu[x] + slack(rng);
                }
            }
            aux = gamma.into_iter().chain(nu).collect();
        }
        StructureParams::Dispersion { gamma } => {
            let mu = zero_sum(rng, arms, scale);
            let nu: Vec<f64> = (0..arms).map(|_| rng.gen_range(0.0..=scale)).collect();
            for x in 0..arms {
                for l in 0..k {
                    lambda[x * k + l] = mu[x] - (r[l] * r[l] - gamma[x] * r[l]) * nu[x] + slack(rng);
                }
            }
            aux = mu.into_iter().chain(nu).collect();
        }
    }
    (lambda, aux)
}

/// Dual variables `(α, β, λ)` with `α ≥ 0` and `λ` from [`sample_dual_point`].
pub fn sample_dual_vars<R: Rng + ?Sized>(rng: &mut R, spec: &StructureSpec, scale: f64) -> DualVars {
    let (lambda, aux) = sample_dual_point(rng, spec, scale);
    DualVars { alpha: rng.gen_range(0.0..=scale), beta: rng.gen_range(-scale..=scale), lambda, aux }
}

#![allow(dead_code)]

use dusa_core::bandit::{RewardMatrix, RewardSupport};
use dusa_core::sampling::sample_model;
use dusa_core::structures::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Small random structure cycling through the four families.
pub fn structure(rng: &mut ChaCha8Rng, variant: usize) -> StructureSpec {
    let arms = rng.gen_range(2..=4);
    match variant % 4 {
        0 => {
            let s = RewardSupport::grid(rng.gen_range(2..=4)).unwrap();
            let c = ColumnConstraint { arm: 0, coeffs: s.values().to_vec(), rhs: rng.gen_range(0.0..0.5) };
            StructureSpec::separable(s, arms, vec![c]).unwrap()
        }
        1 => {
            let pos: Vec<f64> = (0..arms).map(|_| rng.gen()).collect();
            StructureSpec::lipschitz_on_line(RewardSupport::bernoulli(), rng.gen_range(0.2..1.0), &pos).unwrap()
        }
        2 => {
            let f = (0..arms).map(|_| vec![rng.gen_range(-1.0..1.0), 1.0]).collect();
            StructureSpec::linear(RewardSupport::bernoulli(), f).unwrap()
        }
        _ => {
            let s = RewardSupport::grid(rng.gen_range(3..=4)).unwrap();
            let k = s.len() as f64;
            StructureSpec::dispersion(s, (0..arms).map(|_| 1.0 / k + rng.gen_range(0.0..0.6)).collect()).unwrap()
        }
    }
}

/// A model with at least one deceitful arm, and that arm.
pub fn deceitful_instance(rng: &mut ChaCha8Rng, variant: usize) -> (StructureSpec, RewardMatrix, usize) {
    loop {
        let spec = structure(rng, variant);
        let p = sample_model(rng, &spec).unwrap();
        let class = classify_arms(&spec, &p).unwrap();
        if !class.deceitful.is_empty() {
            let xp = class.deceitful[rng.gen_range(0..class.deceitful.len())];
            return (spec, p, xp);
        }
    }
}

pub fn rates(rng: &mut ChaCha8Rng, arms: usize) -> Vec<f64> {
    (0..arms).map(|_| rng.gen_range(0.0..3.0)).collect()
}

pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, b)| if *b > 0.0 { a * (a / b).ln() } else { f64::INFINITY })
        .sum()
}

pub fn bern_kl(p: f64, q: f64) -> f64 {
    kl(&[1.0 - p, p], &[1.0 - q, q])
}

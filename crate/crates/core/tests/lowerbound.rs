use approx::assert_abs_diff_eq;
use dusa_core::bandit::{gap, RewardMatrix, RewardSupport};
use dusa_core::info::dual_test;
use dusa_core::lowerbound::*;
use dusa_core::sampling::sample_model;
use dusa_core::structures::{ColumnConstraint, StructureSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

mod common;
use common::{bern_kl, kl, structure};

/// Arm `a` = [1/2, 1/2] with `P(0, a) ≥ 2/5`, arm `b` Bernoulli(λ).
fn two_arm(lambda: f64) -> (StructureSpec, RewardMatrix) {
    let s = RewardSupport::bernoulli();
    let c = ColumnConstraint { arm: 0, coeffs: vec![1.0, 0.0], rhs: 0.4 };
    let spec = StructureSpec::separable(s.clone(), 2, vec![c]).unwrap();
    let p = RewardMatrix::new(s, vec![vec![0.5, 0.5], vec![1.0 - lambda, lambda]]).unwrap();
    (spec, p)
}

fn two_arm_oracle(lambda: f64) -> f64 {
    if lambda < 0.5 {
        (0.5 - lambda) / bern_kl(lambda, 0.5)
    } else if lambda < 0.6 {
        (lambda - 0.5) / bern_kl(0.5, lambda)
    } else {
        0.0
    }
}

fn line_distances(pos: &[f64]) -> Vec<Vec<f64>> {
    pos.iter().map(|a| pos.iter().map(|b| (a - b).abs()).collect()).collect()
}

#[test]
fn two_arm_closed_form() {
    let start = Instant::now();
    for lambda in [0.5, 0.7, 0.9] {
        let (spec, p) = two_arm(lambda);
        let r = lower_bound_dual(&spec, &p).unwrap();
        assert_eq!(r.value, 0.0, "lambda {lambda}");
        assert!(r.rates.iter().all(|&e| e == 0.0));
    }
    for (lambda, want) in [(0.30, 2.430639), (0.45, 9.983294), (0.55, 9.949916)] {
        let (spec, p) = two_arm(lambda);
        let c = lower_bound_dual(&spec, &p).unwrap().value;
        assert_abs_diff_eq!(c, two_arm_oracle(lambda), epsilon = 1e-4);
        assert_abs_diff_eq!(c, want, epsilon = 1e-4);
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn separable_examples() {
    let p = RewardMatrix::bernoulli(&[0.5, 0.8]).unwrap();
    assert_abs_diff_eq!(lower_bound_separable(&p), 0.3 / bern_kl(0.5, 0.8), epsilon = 1e-10);
    assert_abs_diff_eq!(lower_bound_separable(&p), 1.34443, epsilon = 1e-5);
    let top = RewardMatrix::bernoulli(&[0.5, 1.0]).unwrap();
    assert_eq!(lower_bound_separable(&top), 0.0);
    let spec = StructureSpec::generic(RewardSupport::bernoulli(), 2).unwrap();
    assert_eq!(lower_bound_dual(&spec, &top).unwrap().value, 0.0);
}

#[test]
fn lipschitz_examples() {
    let pos = [0.0, 0.3, 0.9];
    let d = line_distances(&pos);
    let top = RewardMatrix::bernoulli(&[0.8, 1.0, 0.7]).unwrap();
    assert_eq!(lower_bound_lipschitz_lp(&top, 1.0, &d).unwrap(), 0.0);

    // single suboptimal arm
    let d2 = line_distances(&[0.0, 0.5]);
    let p = RewardMatrix::bernoulli(&[0.5, 0.7]).unwrap();
    let q = worst_deceitful_lipschitz(&p, 0, 1.0, &d2).unwrap();
    assert_abs_diff_eq!(q.get(1, 0), 0.7, epsilon = 1e-15);
    assert_abs_diff_eq!(q.get(1, 1), 0.7, epsilon = 1e-15);
    assert_abs_diff_eq!(lower_bound_lipschitz_lp(&p, 1.0, &d2).unwrap(), 0.2 / bern_kl(0.5, 0.7), epsilon = 1e-7);

    let p = RewardMatrix::bernoulli(&[0.5, 0.7, 0.4]).unwrap();
    let q = worst_deceitful_lipschitz(&p, 0, 0.5, &d).unwrap();
    assert_abs_diff_eq!(q.get(1, 0), 0.7, epsilon = 1e-15);
    // far arm unchanged
    assert_abs_diff_eq!(q.get(1, 2), 0.4, epsilon = 1e-15);

    let pos = [0.0, 0.5, 0.1];
    let p = RewardMatrix::bernoulli(&[0.5, 0.75, 0.45]).unwrap();
    let q = worst_deceitful_lipschitz(&p, 0, 1.0, &line_distances(&pos)).unwrap();
    assert_abs_diff_eq!(q.get(1, 0), 0.75, epsilon = 1e-15);
    // intermediate arm lifted to Rew⋆ − L·d
    assert_abs_diff_eq!(q.get(1, 2), 0.65, epsilon = 1e-12);
    let spec = StructureSpec::lipschitz_on_line(RewardSupport::bernoulli(), 1.0, &pos).unwrap();
    assert!(spec.contains(&p, 1e-9).unwrap());
    assert!(spec.contains(&q, 1e-9).unwrap());
    assert!(worst_deceitful_lipschitz(&RewardMatrix::new(RewardSupport::grid(3).unwrap(), vec![vec![0.2, 0.3, 0.5]]).unwrap(), 0, 1.0, &[vec![0.0]]).is_err());
}

#[test]
fn concentration_examples() {
    let e = std::f64::consts::E;
    assert_abs_diff_eq!(concentration_bound(2.0, e, 1, 2).unwrap(), 12.0, epsilon = 1e-10);
    assert!(concentration_bound(3.9, 10.0, 3, 2).is_err());
    assert!(concentration_bound(4.0, 10.0, 3, 2).is_ok());
    assert!(concentration_bound(5.0, 0.5, 1, 2).is_err());
    let mut prev = f64::INFINITY;
    for delta in [50.0, 100.0, 200.0, 400.0] {
        let b = concentration_bound(delta, 1e4, 2, 3).unwrap();
        assert!(b < prev);
        prev = b;
    }
    assert!(prev < 1e-100);
}

/// `min I(P, Q)` over `Q` on `{0, ½, 1}` with mean exactly `m`, by a refined 1-D grid.
fn kl_inf_grid(col: &[f64], m: f64) -> f64 {
    // q = (1 − q1 − q2, q1, q2) with q1/2 + q2 = m, free parameter q2
    let f = |q2: f64| {
        let q1 = 2.0 * (m - q2);
        kl(col, &[1.0 - q1 - q2, q1, q2])
    };
    let (mut lo, mut hi) = ((2.0 * m - 1.0).max(0.0), m);
    let mut best = f64::INFINITY;
    for _ in 0..8 {
        let n = 1000;
        let mut arg = lo;
        for i in 0..=n {
            let q2 = lo + (hi - lo) * i as f64 / n as f64;
            let v = f(q2);
            if v < best {
                best = v;
                arg = q2;
            }
        }
        let w = (hi - lo) / n as f64;
        (lo, hi) = ((arg - w).max((2.0 * m - 1.0).max(0.0)), (arg + w).min(m));
    }
    best
}

#[test]
fn kl_inf_examples() {
    let b = [0.0, 1.0];
    assert_eq!(kl_inf(&[0.3, 0.7], &b, 0.6), 0.0);
    assert_abs_diff_eq!(kl_inf(&[0.7, 0.3], &b, 0.6), bern_kl(0.3, 0.6), epsilon = 1e-12);
    assert_eq!(kl_inf(&[0.7, 0.3], &b, 1.0), f64::INFINITY);
    let s = [0.0, 0.5, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let col = dusa_core::sampling::uniform_simplex(&mut rng, 3);
        let mean = 0.5 * col[1] + col[2];
        let m = rng.gen_range(mean..1.0);
        assert_abs_diff_eq!(kl_inf(&col, &s, m), kl_inf_grid(&col, m), epsilon = 1e-9);
    }
}

#[test]
fn near_coincident_arms_stay_feasible() {
    // two arms 8e-4 apart force rates near 1e6; the conic route may stall there
    let pos = [0.5790619727593637, 0.13015766623567337, 0.5782391416953016];
    let lip = 0.5216859388962207;
    let spec = StructureSpec::lipschitz_on_line(RewardSupport::bernoulli(), lip, &pos).unwrap();
    let p = RewardMatrix::bernoulli(&[0.8527877910838464, 0.7130143845206373, 0.8532170504783618]).unwrap();
    let (lp, eta) = lower_bound_lipschitz_rates(&p, lip, &line_distances(&pos)).unwrap();
    let oracle = {
        use dusa_conic::simplex::simplex;
        let best = 0.8532170504783618;
        let c: Vec<f64> = (0..3).map(|x| best - p.mean(x)).collect();
        let mut ge: Vec<(Vec<f64>, f64)> = (0..3).map(|x| ((0..3).map(|y| if x == y { 1.0 } else { 0.0 }).collect(), 0.0)).collect();
        for xp in [0, 1] {
            let q = worst_deceitful_lipschitz(&p, xp, lip, &line_distances(&pos)).unwrap();
            ge.push(((0..3).map(|x| if x < 2 { bern_kl(p.mean(x), q.mean(x)) } else { 0.0 }).collect(), 1.0));
        }
        simplex(&c, &[], &ge).objective
    };
    assert_abs_diff_eq!(lp, oracle, epsilon = 1e-5 * oracle);
    assert_eq!(eta[2], 0.0);
    let r = lower_bound_dual(&spec, &p).unwrap();
    for &xp in &r.deceitful {
        assert!(dual_test(&r.rates, xp, &p, &r.duals[xp]) >= 1.0 - 1e-6);
    }
    assert!(r.value >= lp - 1e-5 * lp && r.value <= 1.01 * lp, "{} vs {}", r.value, lp);

    let p = RewardMatrix::bernoulli(&[0.3133068006980556, 0.3124996249320405]).unwrap();
    let spec = StructureSpec::generic(RewardSupport::bernoulli(), 2).unwrap();
    let exact = lower_bound_separable(&p);
    let r = lower_bound_dual(&spec, &p).unwrap();
    assert!(dual_test(&r.rates, 1, &p, &r.duals[1]) >= 1.0 - 1e-6);
    assert!(r.value >= exact - 1e-6 * exact && r.value <= 1.01 * exact, "{} vs {}", r.value, exact);
}

#[test]
fn non_deceitful_instance_is_zero() {
    let spec = StructureSpec::lipschitz_on_line(RewardSupport::bernoulli(), 1.0, &[0.1, 0.4, 0.8]).unwrap();
    let p = RewardMatrix::bernoulli(&[0.9, 1.0, 0.7]).unwrap();
    let r = lower_bound_dual(&spec, &p).unwrap();
    assert_eq!(r.value, 0.0);
    assert!(r.deceitful.is_empty());
    assert_eq!(r.non_deceitful, vec![0, 2]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separable_agrees(means in prop::collection::vec(0.05f64..0.95, 2..=5)) {
        let best = means.iter().cloned().fold(0.0, f64::max);
        prop_assume!(means.iter().all(|&m| m == best || best - m >= 0.02));
        let p = RewardMatrix::bernoulli(&means).unwrap();
        let spec = StructureSpec::generic(RewardSupport::bernoulli(), means.len()).unwrap();
        let best = means.iter().cloned().fold(0.0, f64::max);
        let oracle: f64 = means.iter().filter(|&&m| m < best - 1e-12).map(|&m| (best - m) / bern_kl(m, best)).sum();
        prop_assert!((lower_bound_separable(&p) - oracle).abs() <= 1e-9 * oracle.max(1.0));
        let c = lower_bound_dual(&spec, &p).unwrap().value;
        prop_assert!((c - oracle).abs() <= 1e-4, "{} vs {}", c, oracle);
    }

    #[test]
    fn lipschitz_agrees(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = loop {
            let pos: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            if line_distances(&pos).iter().flatten().all(|&d| d == 0.0 || d >= 0.05) {
                break pos;
            }
        };
        let lip = rng.gen_range(0.2..1.0);
        let spec = StructureSpec::lipschitz_on_line(RewardSupport::bernoulli(), lip, &pos).unwrap();
        let p = sample_model(&mut rng, &spec).unwrap();
        let best = p.means().into_iter().fold(0.0, f64::max);
        prop_assume!(p.means().iter().all(|&m| m == best || best - m >= 0.02));
        let lp = lower_bound_lipschitz_lp(&p, lip, &line_distances(&pos)).unwrap();
        let c = lower_bound_dual(&spec, &p).unwrap().value;
        prop_assert!((c - lp).abs() <= 1e-4, "{} vs {}", c, lp);
    }

    #[test]
    fn returned_rates_are_feasible(seed in any::<u64>(), variant in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = structure(&mut rng, variant);
        let p = sample_model(&mut rng, &spec).unwrap();
        let r = lower_bound_dual(&spec, &p).unwrap();
        prop_assert!(r.value >= 0.0);
        let cost: f64 = (0..p.arms()).map(|x| r.rates[x] * gap(&p, x)).sum();
        prop_assert!((cost - r.value).abs() <= 1e-9 * r.value.max(1.0));
        for &xp in &r.deceitful {
            prop_assert!(dual_test(&r.rates, xp, &p, &r.duals[xp]) >= 1.0 - 1e-6);
        }
        if r.deceitful.is_empty() {
            prop_assert_eq!(r.value, 0.0);
        }
    }
}

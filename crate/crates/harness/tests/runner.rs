use approx::assert_abs_diff_eq;
use dusa_core::bandit::RewardMatrix;
use dusa_core::structures::{ColumnConstraint, StructureSpec};
use dusa_core::bandit::RewardSupport;
use dusa_harness::generators::{gen_lipschitz_instance, Instance};
use dusa_harness::runner::*;
use dusa_harness::{ExperimentConfig, PolicyConfig};

fn two_arm(lambda: f64) -> Instance {
    let s = RewardSupport::bernoulli();
    let c = ColumnConstraint { arm: 0, coeffs: vec![1.0, 0.0], rhs: 0.4 };
    let spec = StructureSpec::separable(s.clone(), 2, vec![c]).unwrap();
    let p = RewardMatrix::new(s, vec![vec![0.5, 0.5], vec![1.0 - lambda, lambda]]).unwrap();
    Instance { id: format!("two-arm-{lambda}"), spec, p }
}

#[test]
fn normalized_regret_examples() {
    let c = 2.5;
    let t = 1000;
    let (v, ok) = normalized_regret(c * (t as f64).ln(), c, t);
    assert!(ok);
    assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
    let (w, _) = normalized_regret(2.0 * c * (t as f64).ln(), c, t);
    assert_abs_diff_eq!(w, 2.0, epsilon = 1e-12);
    assert_eq!(normalized_regret(7.5, 0.0, t), (7.5, false));
    assert_eq!(normalized_regret(7.5, 1e-10, t), (7.5, false));
    assert!(normalized_regret(1.0, 1.0, 1).0.is_finite());
}

#[test]
fn oracle_has_zero_regret() {
    let inst = gen_lipschitz_instance(3).unwrap();
    let params = SimulationParams { horizon: 500, stride: 50, lower_bound: 1.0 };
    let run = simulate(&inst, &PolicyConfig::Oracle, 0, &params);
    assert!(run.error.is_none());
    assert_eq!(run.final_regret, 0.0);
    assert!(run.records.iter().all(|r| r.cum_regret == 0.0));
    assert_eq!(run.records.len(), 10);
}

#[test]
fn klucb_regret_is_sublinear() {
    let inst = two_arm(0.55);
    let params = SimulationParams { horizon: 10_000, stride: 100, lower_bound: 1.0 };
    let (mut early, mut late) = (0.0, 0.0);
    for seed in 0..20 {
        let run = simulate(&inst, &PolicyConfig::KlUcb, seed, &params);
        early += run.record_at(100).unwrap().cum_regret / 100.0;
        late += run.record_at(10_000).unwrap().cum_regret / 10_000.0;
    }
    assert!(late < early, "{late} vs {early}");
}

#[test]
fn runs_are_reproducible() {
    let inst = gen_lipschitz_instance(1).unwrap();
    let params = SimulationParams { horizon: 600, stride: 20, lower_bound: 3.0 };
    let policies = [PolicyConfig::dusa(Default::default()), PolicyConfig::KlUcb, PolicyConfig::Ucb1, PolicyConfig::ossb(Default::default())];
    for pol in &policies {
        let strip = |run: RunOutcome| -> Vec<(u64, f64, f64, u64, String)> {
            run.records.into_iter().map(|r| (r.t, r.cum_regret, r.normalized_regret, r.s_t, r.phase)).collect()
        };
        let a = simulate(&inst, pol, 4, &params);
        let b = simulate(&inst, pol, 4, &params);
        assert!(a.error.is_none(), "{:?}", a.error);
        assert_eq!(strip(a), strip(b), "{}", pol.label());
    }
    let a = simulate(&inst, &PolicyConfig::KlUcb, 4, &params);
    let b = simulate(&inst, &PolicyConfig::KlUcb, 5, &params);
    assert_ne!(a.final_regret, b.final_regret);
}

#[test]
fn reward_stream_is_position_addressed() {
    let mut a = RewardStream::new("x", 1, "dusa");
    let mut b = RewardStream::new("x", 1, "dusa");
    let forward: Vec<f64> = (1..=5).map(|t| a.uniform(t)).collect();
    let backward: Vec<f64> = (1..=5).rev().map(|t| b.uniform(t)).collect();
    assert_eq!(forward, backward.into_iter().rev().collect::<Vec<_>>());
    assert_ne!(RewardStream::new("x", 1, "kl-ucb").uniform(1), forward[0]);
    assert_eq!(sample_level(&[0.2, 0.5, 0.3], 0.1), 0);
    assert_eq!(sample_level(&[0.2, 0.5, 0.3], 0.69), 1);
    assert_eq!(sample_level(&[0.2, 0.5, 0.3], 0.99), 2);
}

#[test]
fn csv_round_trip() {
    let text = r#"
horizon = 300
seeds = [0, 1]
stride = 100

[instances]
source = "explicit"
id = "two"
means = [0.5, 0.55]
structure = { kind = "separable" }

[[policies]]
kind = "kl-ucb"

[[policies]]
kind = "oracle"
"#;
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.runs.len(), 4);
    assert_eq!(out.instances.len(), 1);
    assert_abs_diff_eq!(out.instances[0].lower_bound, 0.05 / dusa_core::info::bernoulli_kl(0.5, 0.55), epsilon = 1e-4);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out/runs.csv");
    write_outputs(&path, &out).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_csv(&path).unwrap();
    assert_eq!(rows.len(), 12);
    for run in rows.chunks(3) {
        assert!(run.windows(2).all(|w| w[0].t < w[1].t && w[0].cum_regret <= w[1].cum_regret));
        assert_eq!(run.iter().map(|r| r.t).collect::<Vec<_>>(), vec![100, 200, 300]);
    }
    let order: Vec<(u64, &str)> = rows.iter().step_by(3).map(|r| (r.seed, r.policy.as_str())).collect();
    assert_eq!(order, vec![(0, "kl-ucb"), (0, "oracle"), (1, "kl-ucb"), (1, "oracle")]);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(summary_path(&path)).unwrap()).unwrap();
    assert_eq!(summary["horizon"], 300);
    assert_eq!(summary["runs"].as_array().unwrap().len(), 4);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,b\n1,2\n").unwrap();
    assert!(read_csv(&bad).is_err());
}

#[test]
fn median_examples() {
    assert_eq!(median(&[]), None);
    assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
}

use approx::assert_abs_diff_eq;
use dusa_core::bandit::RewardMatrix;
use dusa_core::structures::StructureParams;
use dusa_harness::generators::*;

#[test]
fn linear_means_span_the_interval() {
    for seed in 0..20 {
        let inst = gen_linear_instance(seed).unwrap();
        let means = inst.p.means();
        assert_eq!(means.len(), ARMS);
        let max = means.iter().cloned().fold(f64::MIN, f64::max);
        let min = means.iter().cloned().fold(f64::MAX, f64::min);
        assert_abs_diff_eq!(max, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(min, 0.1, epsilon = 1e-12);
        assert!(inst.spec.contains(&inst.p, 1e-9).unwrap());
        let StructureParams::Linear { features } = inst.spec.params() else { panic!("linear structure expected") };
        assert!(features.iter().all(|c| c.len() == LINEAR_DIM && c[LINEAR_DIM - 1] == 1.0));
    }
}

#[test]
fn lipschitz_mean_profile() {
    assert_eq!(lipschitz_mean(0.5), 0.8);
    assert_abs_diff_eq!(lipschitz_mean(0.0), 0.55, epsilon = 1e-15);
    assert_abs_diff_eq!(lipschitz_mean(1.0), 0.55, epsilon = 1e-15);
    for seed in 0..20 {
        let inst = gen_lipschitz_instance(seed).unwrap();
        assert_eq!(inst.p.arms(), ARMS);
        assert!(inst.spec.contains(&inst.p, 1e-12).unwrap());
        let StructureParams::Lipschitz { lipschitz, .. } = inst.spec.params() else { panic!("Lipschitz structure expected") };
        assert_eq!(*lipschitz, LIPSCHITZ_CONSTANT);
    }
    let inst = lipschitz_instance("line".into(), &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(inst.p.means(), vec![0.55, 0.8, 0.55]);
}

#[test]
fn dispersion_instances_are_feasible() {
    for seed in 0..10 {
        let inst = gen_dispersion_instance(seed).unwrap();
        assert_eq!((inst.p.arms(), inst.p.levels()), (ARMS, DISPERSION_LEVELS));
        assert!(inst.spec.contains(&inst.p, 1e-8).unwrap());
        let StructureParams::Dispersion { gamma } = inst.spec.params() else { panic!("dispersion structure expected") };
        let floor = 1.0 / DISPERSION_LEVELS as f64;
        assert!(gamma.iter().all(|&g| g >= floor && g <= floor + 0.2));
    }
    let inst = gen_dispersion_instance(0).unwrap();
    let again = project_if_needed(&inst.spec, inst.p.clone()).unwrap();
    let moved: f64 = again.as_slice().iter().zip(inst.p.as_slice()).map(|(a, b)| (a - b).abs()).sum();
    assert!(moved <= 1e-8);
    let mut col = vec![0.0; DISPERSION_LEVELS];
    col[0] = 1.0;
    let q = RewardMatrix::new(inst.p.support().clone(), vec![col; ARMS]).unwrap();
    assert_eq!(project_if_needed(&inst.spec, q.clone()).unwrap(), q);
}

#[test]
fn generators_are_deterministic() {
    for seed in [0, 7, 123] {
        assert_eq!(gen_linear_instance(seed).unwrap().p, gen_linear_instance(seed).unwrap().p);
        assert_eq!(gen_lipschitz_instance(seed).unwrap().p, gen_lipschitz_instance(seed).unwrap().p);
        assert_eq!(gen_dispersion_instance(seed).unwrap().p, gen_dispersion_instance(seed).unwrap().p);
    }
    assert_ne!(gen_lipschitz_instance(0).unwrap().p, gen_lipschitz_instance(1).unwrap().p);
}

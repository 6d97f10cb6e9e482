use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillmem::arm::{
    run_trial, servo_step, ArmModel, ControllerConfig, FaultSpec, GripModel, IkParams, KinematicsError,
};
use skillmem::data::demo::{pick_place_nominal, PickPlaceConfig};

fn quiet() -> GripModel<f64> {
    GripModel { noise_std: 0.0, ..Default::default() }
}

fn nominal(skill: usize) -> skillmem::SensorimotorSequence {
    pick_place_nominal(&ArmModel::seven_link(), skill, &PickPlaceConfig::default()).unwrap()
}

#[test]
fn fk_straight_and_elbow() {
    let arm = ArmModel::<f64>::uniform(2, 1.0);
    let p = arm.forward_kinematics(&[0.0, 0.0]);
    assert!((p[0] - 2.0).abs() < 1e-15 && p[1].abs() < 1e-15);
    let p = arm.forward_kinematics(&[0.0, std::f64::consts::FRAC_PI_2]);
    assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
}

#[test]
fn fk_matches_cumulative_angle_oracle() {
    let arm = ArmModel::<f64>::seven_link();
    let lengths = [0.30, 0.25, 0.20, 0.15, 0.10, 0.08, 0.05];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let q: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.8..2.8)).collect();
        let (mut x, mut y) = (0.0, 0.0);
        for k in 0..7 {
            let theta: f64 = q[..=k].iter().sum();
            x += lengths[k] * theta.cos();
            y += lengths[k] * theta.sin();
        }
        let p = arm.forward_kinematics(&q);
        assert!((p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12);
    }
}

#[test]
fn seven_link_defaults() {
    let arm = ArmModel::<f64>::seven_link();
    assert_eq!(arm.joints(), 7);
    assert!((arm.reach() - 1.13).abs() < 1e-12);
    assert!(arm.joint_limits().iter().all(|&(lo, hi)| lo == -2.8 && hi == 2.8));
}

#[test]
fn arm_rejects_bad_parameters() {
    assert!(ArmModel::new(vec![1.0, -0.5], vec![(-1.0, 1.0); 2]).is_err());
    assert!(ArmModel::new(vec![1.0, 0.5], vec![(1.0, -1.0); 2]).is_err());
    assert!(ArmModel::new(vec![1.0], vec![(-1.0, 1.0); 2]).is_err());
    assert!(ArmModel::<f64>::new(vec![], vec![]).is_err());
}

#[test]
fn jacobian_matches_finite_differences() {
    let arm = ArmModel::<f64>::seven_link();
    let q = [0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.6];
    let jac = arm.jacobian(&q);
    let h = 1e-6;
    for k in 0..7 {
        let (mut qp, mut qm) = (q, q);
        qp[k] += h;
        qm[k] -= h;
        let (pp, pm) = (arm.forward_kinematics(&qp), arm.forward_kinematics(&qm));
        for r in 0..2 {
            assert!((jac[(r, k)] - (pp[r] - pm[r]) / (2.0 * h)).abs() < 1e-8);
        }
    }
}

#[test]
fn ik_at_seed_returns_seed() {
    let arm = ArmModel::<f64>::seven_link();
    let q = vec![0.2, -0.4, 0.5, 0.4, 0.3, 0.2, 0.1];
    let target = arm.forward_kinematics(&q);
    assert_eq!(arm.ik_dls(target, &q, &IkParams::default()).unwrap(), q);
}

#[test]
fn ik_two_link_right_angle() {
    let arm = ArmModel::<f64>::uniform(2, 1.0);
    let params = IkParams { tol_m: 1e-6, ..IkParams::default() };
    let q = arm.ik_dls([1.0, 1.0], &[0.1, 1.4], &params).unwrap();
    let p = arm.forward_kinematics(&q);
    assert!(((p[0] - 1.0).powi(2) + (p[1] - 1.0).powi(2)).sqrt() < 1e-6);
}

#[test]
fn ik_rejects_unreachable_target() {
    let arm = ArmModel::<f64>::seven_link();
    let r = arm.reach() + 0.1;
    match arm.ik_dls([r, 0.0], &[0.0; 7], &IkParams::default()) {
        Err(KinematicsError::Unreachable { distance, .. }) => assert!((distance - r).abs() < 1e-12),
        other => panic!("expected unreachable, got {other:?}"),
    }
}

#[test]
fn ik_reports_residual_on_failure() {
    let arm = ArmModel::<f64>::seven_link();
    let params = IkParams { max_iters: 1, tol_m: 1e-12, ..IkParams::default() };
    match arm.ik_dls([0.2, 0.8], &[0.0; 7], &params) {
        Err(KinematicsError::IkFailure { residual, iterations }) => {
            assert!(residual > 0.0);
            assert_eq!(iterations, 1);
        }
        other => panic!("expected IK failure, got {other:?}"),
    }
}

#[test]
fn servo_fixed_point_and_saturation() {
    let cfg = ControllerConfig::<f64>::default();
    let budget = cfg.tick_budget();
    assert!((budget - 0.05).abs() < 1e-15);
    let q = vec![0.1, -0.3];
    assert_eq!(servo_step(&q, &q, &cfg), q);
    let next = servo_step(&[0.0, 0.0], &[1.0, -1.0], &cfg);
    assert!((next[0] - budget).abs() < 1e-15 && (next[1] + budget).abs() < 1e-15);
}

#[test]
fn servo_reaches_target_in_closed_form_ticks() {
    let cfg = ControllerConfig::<f64>::default();
    for &delta in &[0.01, 0.05, 0.12, 0.51, 1.37] {
        let bound = (delta / cfg.tick_budget()).ceil() as usize;
        let mut q = vec![0.0];
        let mut ticks = 0;
        while q[0] != delta {
            q = servo_step(&q, &[delta], &cfg);
            ticks += 1;
            assert!(ticks <= bound, "delta {delta}: exceeded {bound} ticks");
        }
    }
}

#[test]
fn controller_validation() {
    let bad = ControllerConfig { low_rate: 41, ..ControllerConfig::<f64>::default() };
    assert!(bad.validate().is_err());
    let bad = ControllerConfig { max_joint_speed: 0.0, ..ControllerConfig::<f64>::default() };
    assert!(bad.validate().is_err());
    assert_eq!(ControllerConfig::<f64>::default().ticks_per_step(), 20);
}

#[test]
fn trial_shapes_and_fk_consistency() {
    let arm = ArmModel::seven_link();
    let cfg = ControllerConfig::default();
    let desired = nominal(0);
    let trace = run_trial(&arm, &cfg, &desired, None, &GripModel::default()).unwrap();
    assert_eq!(trace.observed.len(), desired.len());
    assert_eq!(trace.ticks(), desired.len() * cfg.ticks_per_step());
    for t in 0..trace.ticks() {
        let p = arm.forward_kinematics(trace.actual.row(t));
        assert_eq!(trace.ee_path.row(t), &p[..]);
    }
    let csv = trace.to_csv();
    assert_eq!(csv.lines().count(), trace.ticks() + 1);
    assert!(csv.starts_with("tick,time_s,cmd_q1"));
}

#[test]
fn servo_lag_bound_without_fault() {
    let arm = ArmModel::seven_link();
    let cfg = ControllerConfig::default();
    for skill in 0..2 {
        let trace = run_trial(&arm, &cfg, &nominal(skill), None, &quiet()).unwrap();
        let per = cfg.ticks_per_step();
        let bound = 2.0 * cfg.max_joint_speed / cfg.high_rate as f64;
        for mu in 0..trace.observed.len() {
            let t = (mu + 1) * per - 1;
            for k in 0..7 {
                assert!((trace.actual[(t, k)] - trace.commanded[(t, k)]).abs() < bound);
            }
        }
    }
}

#[test]
fn commanded_angles_within_limits() {
    let arm = ArmModel::seven_link();
    let trace = run_trial(&arm, &ControllerConfig::default(), &nominal(1), None, &quiet()).unwrap();
    for t in 0..trace.ticks() {
        assert!(arm.within_limits(trace.commanded.row(t)));
    }
}

#[test]
fn lock_freezes_joint() {
    let arm = ArmModel::seven_link();
    let cfg = ControllerConfig::default();
    let fault = FaultSpec::lock(4, 3.0, 0.0);
    let trace = run_trial(&arm, &cfg, &nominal(0), Some(&fault), &quiet()).unwrap();
    let from = fault.sample_index(cfg.high_rate);
    let held = trace.observed.step(from)[4];
    for mu in from..trace.observed.len() {
        assert_eq!(trace.observed.step(mu)[4], held);
    }
}

#[test]
fn fault_is_causal() {
    let arm = ArmModel::seven_link();
    let cfg = ControllerConfig::default();
    let grip = GripModel { seed: 9, ..Default::default() };
    let clean = run_trial(&arm, &cfg, &nominal(1), None, &grip).unwrap();
    for fault in [FaultSpec::lock(2, 2.5, 10.0), FaultSpec::push(5, 4.0, 0.2, 0.5)] {
        let faulted = run_trial(&arm, &cfg, &nominal(1), Some(&fault), &grip).unwrap();
        let first = fault.sample_index(cfg.high_rate);
        for mu in 0..first {
            assert_eq!(faulted.observed.step(mu), clean.observed.step(mu));
        }
        assert_ne!(faulted.observed.step(first), clean.observed.step(first));
    }
}

#[test]
fn transient_push_recovers() {
    let arm = ArmModel::seven_link();
    let cfg = ControllerConfig::default();
    let clean = run_trial(&arm, &cfg, &nominal(0), None, &quiet()).unwrap();
    let push = FaultSpec::push(3, 3.0, 0.2, 0.5);
    let pushed = run_trial(&arm, &cfg, &nominal(0), Some(&push), &quiet()).unwrap();
    let (a, b) = (clean.final_ee(), pushed.final_ee());
    assert!(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt() < 1e-3);
}

#[test]
fn fault_validation() {
    let arm = ArmModel::seven_link();
    let cfg = ControllerConfig::default();
    let out_of_range = FaultSpec::lock(7, 1.0, 5.0);
    assert!(matches!(
        run_trial(&arm, &cfg, &nominal(0), Some(&out_of_range), &quiet()),
        Err(KinematicsError::JointOutOfRange { joint: 7, joints: 7 })
    ));
    assert!(FaultSpec::lock(0, 1.0, 20.0).validate(7).is_err());
    assert!(FaultSpec::lock(0, -1.0, 5.0).validate(7).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fk_ik_round_trip(r in 0.4f64..0.9, phi in -0.8f64..0.8) {
        let arm = ArmModel::<f64>::seven_link();
        let target = [r * phi.cos(), r * phi.sin()];
        let seed = [0.2, -0.4, 0.5, 0.4, 0.3, 0.2, 0.1];
        let params = IkParams::default();
        let q = arm.ik_dls(target, &seed, &params).unwrap();
        let p = arm.forward_kinematics(&q);
        prop_assert!(((p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2)).sqrt() < params.tol_m);
        prop_assert!(arm.within_limits(&q));
    }

    #[test]
    fn servo_is_passive(
        start in prop::collection::vec(-2.0f64..2.0, 7),
        goal in prop::collection::vec(-2.0f64..2.0, 7),
        gain in 0.05f64..1.0,
    ) {
        let cfg = ControllerConfig { gain, ..ControllerConfig::default() };
        let inf = |q: &[f64]| q.iter().zip(&goal).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let mut q = start;
        let mut prev = inf(&q);
        for _ in 0..200 {
            q = servo_step(&q, &goal, &cfg);
            let now = inf(&q);
            prop_assert!(now <= prev);
            prev = now;
        }
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillmem::arm::{ArmModel, FaultSpec};
use skillmem::data::demo::{followthrough_nominal, Cue, FollowThroughCondition, FollowThroughConfig, FT_REACH_END};
use skillmem::data::demo::pick_place_channels;
use skillmem::data::{Channel, ChannelKind};
use skillmem::linalg::Matrix;
use skillmem::monitor::{
    calibrate_threshold, detect, evaluate_method, fault_score, isolate, pead, GridSpec, IsolationScope, MonitorError,
    ScoredTrial,
};

fn one_to_hundred() -> Vec<f64> {
    (1..=100).rev().map(f64::from).collect()
}

#[test]
fn fault_score_cases() {
    assert_eq!(fault_score(&[0.3, -1.0], &[0.3, -1.0]), 0.0);
    assert_eq!(fault_score(&[0.0, 2.5, 0.0], &[0.0, 0.0, 0.0]), 6.25);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let a: Vec<f64> = (0..14).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..14).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let mut oracle = 0.0;
        for i in 0..14 {
            oracle += (a[i] - b[i]) * (a[i] - b[i]);
        }
        assert!((fault_score(&a, &b) - oracle).abs() < 1e-12);
    }
}

#[test]
fn nearest_rank_percentile() {
    let th = calibrate_threshold(&one_to_hundred(), 0.95).unwrap();
    assert_eq!(th.value, 95.0);
    assert_eq!(th.calibration_n, 100);
    assert_eq!(th.calibration.first(), Some(&1.0));
    assert_eq!(calibrate_threshold(&one_to_hundred(), 0.99).unwrap().value, 99.0);
    assert_eq!(calibrate_threshold(&one_to_hundred(), 0.951).unwrap().value, 96.0);
    assert_eq!(calibrate_threshold(&one_to_hundred(), 1.0).unwrap().value, 100.0);
    for q in [0.01, 0.5, 1.0] {
        assert_eq!(calibrate_threshold(&[4.2], q).unwrap().value, 4.2);
    }
}

#[test]
fn calibration_errors() {
    assert_eq!(calibrate_threshold::<f64>(&[], 0.95), Err(MonitorError::EmptyCalibration));
    assert!(matches!(calibrate_threshold(&[1.0], 0.0), Err(MonitorError::Percentile(_))));
    assert!(matches!(calibrate_threshold(&[1.0], 1.5), Err(MonitorError::Percentile(_))));
}

#[test]
fn isolates_joint_five() {
    let channels = pick_place_channels(7);
    let mut errors = vec![0.0; channels.len()];
    errors[4] = -0.8;
    assert_eq!(isolate(&errors, &channels, IsolationScope::Joints), Some((4, Some(4))));
    assert_eq!(channels[4].label, "q5");
}

#[test]
fn isolation_tie_goes_to_lowest_index() {
    let channels = pick_place_channels(7);
    let mut errors = vec![0.0; channels.len()];
    errors[2] = 0.5;
    errors[6] = -0.5;
    assert_eq!(isolate(&errors, &channels, IsolationScope::Joints), Some((2, Some(2))));
}

#[test]
fn isolation_scope_filters_channels() {
    let channels = pick_place_channels(7);
    let mut errors = vec![0.0; channels.len()];
    errors[1] = 0.1;
    errors[7] = 0.3;
    errors[10] = 2.0;
    assert_eq!(isolate(&errors, &channels, IsolationScope::Joints), Some((1, Some(1))));
    assert_eq!(isolate(&errors, &channels, IsolationScope::Proprioceptive), Some((7, None)));
    assert_eq!(isolate(&errors, &channels, IsolationScope::All), Some((10, None)));
    let cues = vec![Channel::new("cue_a", ChannelKind::Cue)];
    assert_eq!(isolate(&[1.0], &cues, IsolationScope::Joints), None);
}

fn two_channel_trial(scores_at: &[(usize, f64)], steps: usize) -> (Matrix<f64>, Matrix<f64>, Vec<Channel>) {
    let predicted = Matrix::zeros(steps, 2);
    let mut observed = Matrix::zeros(steps, 2);
    for &(t, d) in scores_at {
        observed[(t, 1)] = d;
    }
    let channels = vec![Channel::new("q1", ChannelKind::Proprioceptive), Channel::new("q2", ChannelKind::Proprioceptive)];
    (predicted, observed, channels)
}

#[test]
fn detect_flags_first_exceedance() {
    let (pred, obs, ch) = two_channel_trial(&[(2, 0.5), (4, 3.0), (6, 3.0)], 8);
    let th = calibrate_threshold(&[1.0, 0.5, 0.1], 1.0).unwrap();
    let r = detect(&pred, &obs, &ch, &th, 0, IsolationScope::Joints).unwrap();
    assert!(r.detected);
    assert_eq!(r.detect_step, Some(4));
    assert_eq!(r.energy_trace[4], 9.0);
    assert_eq!(r.isolated_channel, Some(1));
    assert_eq!(r.isolated_joint, Some(1));
    let r = detect(&pred, &obs, &ch, &th, 5, IsolationScope::Joints).unwrap();
    assert_eq!(r.detect_step, Some(6));
    let r = detect(&pred, &obs, &ch, &th, 7, IsolationScope::Joints).unwrap();
    assert!(!r.detected && r.isolated_joint.is_none());
}

#[test]
fn detect_never_fires_on_own_calibration_at_max_threshold() {
    let (pred, obs, ch) = two_channel_trial(&[(1, 0.3), (3, -0.7)], 5);
    let scores: Vec<f64> = (0..5).map(|t| fault_score(obs.row(t), pred.row(t))).collect();
    let th = calibrate_threshold(&scores, 1.0).unwrap();
    assert!(!detect(&pred, &obs, &ch, &th, 0, IsolationScope::Joints).unwrap().detected);
}

#[test]
fn detect_rejects_mismatched_shapes() {
    let (pred, _, ch) = two_channel_trial(&[], 5);
    let th = calibrate_threshold(&[1.0], 1.0).unwrap();
    let short = Matrix::zeros(4, 2);
    assert!(matches!(detect(&pred, &short, &ch, &th, 0, IsolationScope::Joints), Err(MonitorError::Length { .. })));
    assert!(detect(&pred, &pred, &ch[..1], &th, 0, IsolationScope::Joints).is_err());
}

#[test]
fn pead_cases() {
    let straight = Matrix::from_fn(5, 2, |t, c| if c == 0 { t as f64 * 0.25 } else { 0.0 });
    let p = pead(&straight, [0.0, 0.0], [1.0, 0.0]).unwrap();
    assert_eq!(p.magnitude, 0.0);
    let mut bumped = straight.clone();
    bumped[(2, 1)] = -0.3;
    let p = pead(&bumped, [0.0, 0.0], [1.0, 0.0]).unwrap();
    assert!((p.magnitude - 0.3).abs() < 1e-15 && (p.signed + 0.3).abs() < 1e-15);
    assert_eq!(pead(&straight, [1.0, 1.0], [1.0, 1.0]), Err(MonitorError::DegenerateLine));
    assert_eq!(pead(&Matrix::zeros(0, 2), [0.0, 0.0], [1.0, 0.0]), Err(MonitorError::EmptyPath));
}

#[test]
fn pead_ignores_path_beyond_closest_approach() {
    let path = Matrix::<f64>::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.1], vec![1.0, 0.0], vec![1.0, 0.9]]).unwrap();
    let p = pead(&path, [0.0, 0.0], [1.0, 0.0]).unwrap();
    assert!((p.signed - 0.1).abs() < 1e-15);
}

#[test]
fn pead_of_demonstrations_mirrors_across_cues() {
    let arm = ArmModel::<f64>::seven_link();
    let cfg = FollowThroughConfig::default();
    let g = cfg.geometry;
    let value = |cue| {
        let seq = followthrough_nominal(&arm, FollowThroughCondition::PlanAndExecute, cue, &cfg).unwrap();
        let (x, y) = (seq.channel_index("ee_x").unwrap(), seq.channel_index("ee_y").unwrap());
        let path = Matrix::from_fn(FT_REACH_END + 1, 2, |t, c| seq.step(t)[if c == 0 { x } else { y }]);
        pead(&path, g.start, g.target).unwrap()
    };
    let (cw, ccw) = (value(Cue::Cw), value(Cue::Ccw));
    assert!((cw.magnitude - ccw.magnitude).abs() < 1e-5);
    assert!((cw.magnitude - g.amplitude).abs() < 1e-5);
    assert!(cw.signed * ccw.signed < 0.0);
}

#[test]
fn grid_cardinality() {
    let spec = GridSpec::<f64>::default();
    assert_eq!(spec.len(), 490);
    assert_eq!(2 * spec.len(), 980);
    let faults = spec.faults();
    assert_eq!(faults.len(), 490);
    assert_eq!(faults[0], FaultSpec::lock(0, 1.0, -15.0));
    assert_eq!(faults[489], FaultSpec::lock(6, 5.5, 15.0));
    assert_eq!(spec.times_s.last(), Some(&5.5));
}

fn scored(scores: Vec<f64>, joint_err: Option<(usize, usize)>, fault: Option<FaultSpec<f64>>) -> ScoredTrial<f64> {
    let steps = scores.len();
    let mut errors = Matrix::zeros(steps, 14);
    if let Some((t, j)) = joint_err {
        errors[(t, j)] = 1.0;
    }
    let scan_from = fault.map(|f| f.sample_index(2)).unwrap_or(0);
    ScoredTrial { skill: "skill1".into(), fault, scan_from, scores, errors }
}

#[test]
fn method_rates_on_synthetic_trials() {
    let channels = pick_place_channels(7);
    let calibration: Vec<_> = (0..2).map(|k| scored((1..=10).map(|i| (i + 10 * k) as f64).collect(), None, None)).collect();
    let normal = vec![scored(vec![1.0, 25.0, 3.0, 4.0], None, None), scored(vec![1.0; 4], None, None)];
    let faults = vec![
        scored(vec![0.0, 0.0, 50.0, 0.0], Some((1, 3)), Some(FaultSpec::lock(3, 0.5, 10.0))),
        scored(vec![0.0, 0.0, 5.0, 0.0], Some((1, 2)), Some(FaultSpec::lock(6, 0.5, 0.0))),
    ];
    let r = evaluate_method("m", 0.95, &calibration, &faults, &normal, &channels, IsolationScope::Joints).unwrap();
    assert_eq!(r.threshold.value, 19.0);
    assert_eq!(r.detection_accuracy, 0.5);
    assert_eq!(r.fnr, 0.5);
    assert_eq!(r.isolation_accuracy, 0.5);
    assert_eq!(r.isolated_at_fault, vec![Some(3), Some(2)]);
    assert_eq!(r.fpr, 1.0 / 8.0);
    assert_eq!(r.trial_fpr, 0.5);
    assert_eq!(r.reports[0].detect_step, Some(2));
    assert!(r.reports[0].truth.is_some());
}

proptest! {
    #[test]
    fn threshold_monotone_in_q(
        energies in prop::collection::vec(0.0f64..100.0, 1..200),
        a in 0.01f64..1.0,
        b in 0.01f64..1.0,
    ) {
        let (q1, q2) = if a <= b { (a, b) } else { (b, a) };
        let t1 = calibrate_threshold(&energies, q1).unwrap();
        let t2 = calibrate_threshold(&energies, q2).unwrap();
        prop_assert!(t1.value <= t2.value);
        let alarms = |t: &skillmem::DetectionThreshold| energies.iter().filter(|&&e| t.exceeded_by(e)).count();
        prop_assert!(alarms(&t1) >= alarms(&t2));
        prop_assert!(t2.calibration.contains(&t2.value));
    }

    #[test]
    fn scores_translation_invariant(
        obs in prop::collection::vec(-5.0f64..5.0, 14),
        pred in prop::collection::vec(-5.0f64..5.0, 14),
        shift in prop::collection::vec(-5.0f64..5.0, 14),
    ) {
        let o2: Vec<f64> = obs.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let p2: Vec<f64> = pred.iter().zip(&shift).map(|(a, s)| a + s).collect();
        prop_assert!((fault_score(&obs, &pred) - fault_score(&o2, &p2)).abs() < 1e-9);
    }

    #[test]
    fn isolation_scale_invariant(errors in prop::collection::vec(-3.0f64..3.0, 14), scale in 0.01f64..100.0) {
        let channels = pick_place_channels(7);
        let scaled: Vec<f64> = errors.iter().map(|e| e * scale).collect();
        let a = isolate(&errors, &channels, IsolationScope::Joints).map(|(_, j)| j);
        let b = isolate(&scaled, &channels, IsolationScope::Joints).map(|(_, j)| j);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn detection_never_precedes_scan_start(
        scores in prop::collection::vec(0.0f64..10.0, 15),
        from in 0usize..15,
    ) {
        let channels = pick_place_channels(7);
        let trial = ScoredTrial { skill: "s".into(), fault: None, scan_from: from, scores: scores.clone(), errors: Matrix::zeros(15, 14) };
        let r = evaluate_method("m", 0.5, std::slice::from_ref(&trial), std::slice::from_ref(&trial), &[], &channels, IsolationScope::Joints).unwrap();
        if let Some(step) = r.reports[0].detect_step {
            prop_assert!(step >= from);
        }
    }
}

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillmem::arm::ArmModel;
use skillmem::baselines::{zscore_errors, RnnError, RnnModel, RnnVariant, StatsMode, ZscoreDetector};
use skillmem::data::demo::{followthrough_nominal, gen_pick_place, Cue, FollowThroughCondition, PickPlaceConfig};
use skillmem::data::{Channel, ChannelKind, ChannelStats, DataError};
use skillmem::linalg::Matrix;
use skillmem::optim::{Optimizer, ParamState};
use skillmem::tpc::{kaiming_bound, TrainConfig};
use skillmem::SensorimotorSequence;

fn rmat(rng: &mut ChaCha8Rng, r: usize, c: usize, s: f64) -> Matrix<f64> {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-s..s))
}

fn rvec(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-s..s)).collect()
}

fn random_rnn(seed: u64, h: usize, d_in: usize, d_out: usize) -> RnnModel<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RnnModel::new(
        rmat(&mut rng, h, d_in, 0.8),
        rmat(&mut rng, h, h, 0.8),
        rmat(&mut rng, d_out, h, 0.8),
        rvec(&mut rng, h, 0.3),
        rvec(&mut rng, d_out, 0.3),
        RnnVariant::SensorimotorToSensorimotor,
    )
    .unwrap()
}

fn stats2() -> ChannelStats<f64> {
    ChannelStats { mean: vec![1.0, -2.0, 0.5], std: vec![0.5, 2.0, 1.0] }
}

#[test]
fn zscore_cases() {
    let s = stats2();
    assert_eq!(zscore_errors(&s.mean, &s).unwrap(), vec![0.0; 3]);
    let e = zscore_errors(&[1.0 + 2.0 * 0.5, -2.0, 0.5], &s).unwrap();
    assert_eq!(e, vec![2.0, 0.0, 0.0]);
    assert_eq!(zscore_errors(&[0.0; 2], &s), Err(DataError::ChannelCount { expected: 3, found: 2 }));
}

#[test]
fn zscore_matches_hand_oracle() {
    let s = stats2();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let x = rvec(&mut rng, 3, 5.0);
        let e = zscore_errors(&x, &s).unwrap();
        for i in 0..3 {
            assert!((e[i] - (x[i] - s.mean[i]) / s.std[i]).abs() < 1e-12);
        }
    }
}

fn demos() -> Vec<SensorimotorSequence> {
    gen_pick_place(&ArmModel::seven_link(), &PickPlaceConfig::default()).unwrap()
}

#[test]
fn detector_per_step_and_pooled() {
    let demos = demos();
    let per = ZscoreDetector::fit(&demos, StatsMode::PerStep).unwrap();
    let pooled = ZscoreDetector::fit(&demos, StatsMode::Pooled).unwrap();
    assert_eq!(per.skills().collect::<Vec<_>>(), vec!["skill1", "skill2"]);
    let reps: Vec<_> = demos.iter().filter(|d| d.skill_id == "skill2").cloned().collect();
    let step7: Vec<&[f64]> = reps.iter().map(|r| r.step(7)).collect();
    assert_eq!(per.stats_for("skill2", 7), Some(&ChannelStats::fit_rows(&step7, 14).unwrap()));
    assert_eq!(pooled.stats_for("skill2", 3), pooled.stats_for("skill2", 11));
    assert!(per.stats_for("skill2", 15).is_none());
    assert!(per.errors("skill9", 0, demos[0].step(0)).is_err());
    let scores = per.score_sequence("skill1", &demos[0]).unwrap();
    assert_eq!(scores.len(), 15);
    assert!(scores.iter().all(|s| s.is_finite() && *s >= 0.0));
}

#[test]
fn zscore_score_invariant_to_affine_units() {
    let demos = demos();
    let (scale, shift) = (3.7, -1.25);
    let rescale = |s: &SensorimotorSequence| {
        let mut out = s.clone();
        let cues = s.channels_of_kind(ChannelKind::Cue);
        let data = out.data_mut();
        for t in 0..data.rows() {
            for c in 0..data.cols() {
                if !cues.contains(&c) {
                    data[(t, c)] = data[(t, c)] * scale + shift;
                }
            }
        }
        out
    };
    let scaled: Vec<_> = demos.iter().map(rescale).collect();
    let a = ZscoreDetector::fit(&demos, StatsMode::PerStep).unwrap();
    let b = ZscoreDetector::fit(&scaled, StatsMode::PerStep).unwrap();
    let probe = gen_pick_place(&ArmModel::seven_link(), &PickPlaceConfig { seed: 77, n_reps: 1, ..Default::default() })
        .unwrap();
    let sa = a.score_sequence("skill1", &probe[0]).unwrap();
    let sb = b.score_sequence("skill1", &rescale(&probe[0])).unwrap();
    for (x, y) in sa.iter().zip(&sb) {
        // channels pinned at the std floor keep their raw-unit spread
        if x.abs() < 1e6 {
            assert!((x - y).abs() <= 1e-6 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn rnn_zero_model_outputs_zero() {
    let m = RnnModel::new(
        Matrix::zeros(4, 3),
        Matrix::zeros(4, 4),
        Matrix::zeros(2, 4),
        vec![0.0; 4],
        vec![0.0; 2],
        RnnVariant::SensoryToMotor,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (y, h) = m.forward(&rmat(&mut rng, 5, 3, 2.0)).unwrap();
    assert_eq!(y.max_abs(), 0.0);
    assert_eq!(h.max_abs(), 0.0);
}

#[test]
fn rnn_single_step_oracle() {
    let m = random_rnn(2, 3, 2, 2);
    let u = [0.4, -1.1];
    let (y, _) = m.forward(&Matrix::from_rows(&[u.to_vec()]).unwrap()).unwrap();
    let mut h = [0.0; 3];
    for i in 0..3 {
        h[i] = (m.w_in[(i, 0)] * u[0] + m.w_in[(i, 1)] * u[1] + m.b_h[i]).tanh();
    }
    for o in 0..2 {
        let mut v = m.b_o[o];
        for i in 0..3 {
            v += m.w_out[(o, i)] * h[i];
        }
        assert!((y[(0, o)] - v).abs() < 1e-12);
    }
}

#[test]
fn rnn_forward_deterministic() {
    let a = RnnModel::<f64>::init(16, 4, 3, RnnVariant::SensorimotorToSensorimotor, 5);
    let b = RnnModel::<f64>::init(16, 4, 3, RnnVariant::SensorimotorToSensorimotor, 5);
    assert_eq!(a, b);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = rmat(&mut rng, 6, 4, 1.0);
    assert_eq!(a.forward(&u).unwrap(), b.forward(&u).unwrap());
    assert_ne!(a, RnnModel::<f64>::init(16, 4, 3, RnnVariant::SensorimotorToSensorimotor, 6));
}

#[test]
fn rnn_init_bounds() {
    let m = RnnModel::<f64>::init(32, 5, 7, RnnVariant::SensoryToMotor, 0);
    assert!(m.w_in.max_abs() <= kaiming_bound(5));
    assert!(m.w_rec.max_abs() <= kaiming_bound(32));
    assert!(m.w_out.max_abs() <= kaiming_bound(32));
    assert!(m.b_h.iter().chain(&m.b_o).all(|&b| b == 0.0));
}

#[test]
fn rnn_zero_loss_zero_gradients() {
    let m = random_rnn(8, 4, 3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let u = rmat(&mut rng, 5, 3, 1.0);
    let (y, _) = m.forward(&u).unwrap();
    let (loss, g) = m.bptt(&u, &y).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.is_zero());
}

#[test]
fn rnn_dimension_errors() {
    let m = random_rnn(1, 3, 2, 2);
    assert!(matches!(m.forward(&Matrix::zeros(2, 3)), Err(RnnError::DimensionMismatch { .. })));
    assert!(m.bptt(&Matrix::zeros(2, 2), &Matrix::zeros(3, 2)).is_err());
    assert!(m.rollout_from_first(&[1.0], 4).is_err());
    assert!(RnnModel::new(
        Matrix::zeros(3, 2),
        Matrix::zeros(3, 3),
        Matrix::zeros(2, 3),
        vec![0.0; 2],
        vec![0.0; 2],
        RnnVariant::SensoryToMotor
    )
    .is_err());
}

#[test]
fn rollout_zeroes_later_inputs() {
    let m = random_rnn(3, 4, 2, 2);
    let first = [0.7, -0.2];
    let mut u = Matrix::zeros(6, 2);
    u.set_row(0, &first);
    assert_eq!(m.rollout_from_first(&first, 6).unwrap(), m.forward(&u).unwrap().0);
}

#[test]
fn variants_select_channels() {
    let arm = ArmModel::<f64>::seven_link();
    let seq = followthrough_nominal(&arm, FollowThroughCondition::PlanOnly, Cue::Cw, &Default::default()).unwrap();
    assert_eq!(RnnVariant::SensoryToMotor.input_channels(&seq), vec![9, 10]);
    assert_eq!(RnnVariant::SensoryToMotor.output_channels(&seq), (0..9).collect::<Vec<_>>());
    assert_eq!(RnnVariant::SensorimotorToSensorimotor.input_channels(&seq).len(), 11);
    let (u, y) = RnnVariant::SensorimotorToSensorimotor.training_pair(&seq, true);
    assert_eq!(u.shape(), (12, 11));
    assert_eq!(y.row(0), seq.step(1));
    assert_eq!(u.row(0), seq.step(0));
    assert!((1..12).all(|t| u.row(t).iter().all(|&v| v == 0.0)));
    let (u, _) = RnnVariant::SensoryToMotor.training_pair(&seq, false);
    assert_eq!(u.row(5), &seq.step(5)[9..]);
    assert_eq!("sm-to-sm".parse::<RnnVariant>(), Ok(RnnVariant::SensorimotorToSensorimotor));
}

fn constant_task() -> Vec<(Matrix<f64>, Matrix<f64>)> {
    let u = Matrix::from_fn(6, 2, |t, c| if t == 0 { [1.0, -0.5][c] } else { 0.0 });
    let y = Matrix::from_fn(6, 3, |_, c| [0.6, -0.3, 0.2][c]);
    vec![(u, y)]
}

fn sgd(lr: f64) -> TrainConfig<f64> {
    TrainConfig { weight_lr: lr, optimizer: Optimizer::Sgd, ..Default::default() }
}

#[test]
fn rnn_training_converges_on_constant_target() {
    let mut m = RnnModel::<f64>::init(16, 2, 3, RnnVariant::SensorimotorToSensorimotor, 3);
    let curve = m.train(&constant_task(), 1500, &sgd(0.01)).unwrap();
    let burn_in = 20;
    for w in curve[burn_in..].windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
    assert!(*curve.last().unwrap() < 1e-3 * curve[0]);
}

#[test]
fn rnn_two_seeds_both_converge() {
    let task = constant_task();
    let train = |seed| {
        let mut m = RnnModel::<f64>::init(16, 2, 3, RnnVariant::SensorimotorToSensorimotor, seed);
        let curve = m.train(&task, 400, &sgd(0.05)).unwrap();
        (m, *curve.last().unwrap())
    };
    let (a, la) = train(1);
    let (b, lb) = train(2);
    assert_ne!(a, b);
    assert!(la < 1e-3 && lb < 1e-3, "{la} {lb}");
}

#[test]
fn rnn_training_reports_divergence() {
    let mut m = RnnModel::<f64>::init(8, 2, 3, RnnVariant::SensorimotorToSensorimotor, 0);
    let task = vec![(Matrix::from_fn(4, 2, |_, _| 1e150), Matrix::from_fn(4, 3, |_, _| 1e200))];
    assert!(matches!(m.train(&task, 5, &sgd(1e10)), Err(RnnError::Divergence { epoch: 0 })));
    assert!(matches!(m.train(&[], 5, &sgd(0.1)), Err(RnnError::Empty(_))));
    assert!(matches!(m.train(&task, 5, &sgd(-1.0)), Err(RnnError::InvalidConfig(_))));
}

#[test]
fn sgd_and_adam_steps() {
    let mut p: Vec<f64> = vec![1.0, -2.0];
    ParamState::new(Optimizer::Sgd, 2).step(0.1, &mut p, &[0.5, 4.0]);
    assert!((p[0] - 1.05).abs() < 1e-15 && (p[1] + 1.6).abs() < 1e-15);
    // the first bias-corrected Adam step has magnitude lr regardless of scale
    let mut p: Vec<f64> = vec![0.0, 0.0, 0.0];
    let mut adam = ParamState::new(Optimizer::Adam, 3);
    adam.step(1e-3, &mut p, &[0.5, -40.0, 1e-3]);
    for (v, s) in p.iter().zip([1.0, -1.0, 1.0]) {
        assert!((v - s * 1e-3).abs() < 1e-7, "{v}");
    }
    adam.step(1e-3, &mut p, &[0.5, -40.0, 1e-3]);
    assert!((p[0] - 2e-3).abs() < 1e-7);
    assert_eq!("adam".parse::<Optimizer>(), Ok(Optimizer::Adam));
    assert!("rmsprop".parse::<Optimizer>().is_err());
}

#[test]
fn zscore_channel_helper_rejects_bad_layouts() {
    let seq = SensorimotorSequence::new(
        Matrix::zeros(2, 1),
        vec![Channel::new("f", ChannelKind::Exteroceptive)],
        "s",
        "r",
        2.0,
    )
    .unwrap();
    let det = ZscoreDetector::fit(std::slice::from_ref(&seq), StatsMode::Pooled).unwrap();
    assert!(det.errors("s", 0, &[0.0, 1.0]).is_err());
    assert!(ZscoreDetector::<f64>::fit(&[], StatsMode::PerStep).is_err());
}

proptest! {
    #[test]
    fn zscore_errors_affine_invariant(
        x in prop::collection::vec(-10.0f64..10.0, 3),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let s = stats2();
        let t = ChannelStats {
            mean: s.mean.iter().map(|m| m * scale + shift).collect(),
            std: s.std.iter().map(|d| d * scale).collect(),
        };
        let xs: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
        let (a, b) = (zscore_errors(&x, &s).unwrap(), zscore_errors(&xs, &t).unwrap());
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }
}

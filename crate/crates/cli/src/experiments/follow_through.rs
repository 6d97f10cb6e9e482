//! Contextual inference: planned versus executed follow-through and the
//! deviation of the recalled reach.

use std::fmt::Write as _;

use skillmem::arm::ArmModel;
use skillmem::baselines::{RnnModel, RnnVariant};
use skillmem::data::demo::{gen_followthrough, Cue, FollowThroughCondition, FollowThroughConfig, FT_REACH_END};
use skillmem::data::{ChannelStats, SensorimotorSequence};
use skillmem::linalg::Matrix;
use skillmem::monitor::pead;
use skillmem::tpc::{InferenceConfig, TpcModel};

use super::{mean_matrix, rmse, Context, ExperimentError};
use crate::config::ExperimentConfig;
use crate::report::ReportBundle;

/// A recall model of the follow-through experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tpc,
    Rnn(RnnVariant),
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [
        ModelKind::Tpc,
        ModelKind::Rnn(RnnVariant::SensoryToMotor),
        ModelKind::Rnn(RnnVariant::SensorimotorToSensorimotor),
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Tpc => "tpc",
            ModelKind::Rnn(v) => v.tag(),
        }
    }
}

/// Models trained on one condition's demonstrations of both cues.
#[derive(Debug, Clone)]
pub struct FollowThroughModels {
    pub condition: FollowThroughCondition,
    pub seed: u64,
    pub stats: ChannelStats<f64>,
    pub normalized: Vec<SensorimotorSequence<f64>>,
    pub tpc: TpcModel<f64>,
    pub s_to_m: RnnModel<f64>,
    pub sm_to_sm: RnnModel<f64>,
    pub epochs: usize,
}

pub fn ft_config(cfg: &ExperimentConfig) -> FollowThroughConfig<f64> {
    let mut ft = FollowThroughConfig { noise: cfg.ft_noise, ..FollowThroughConfig::default() };
    ft.geometry.amplitude = cfg.ft_amplitude;
    ft
}

fn cond_salt(cond: FollowThroughCondition) -> u64 {
    match cond {
        FollowThroughCondition::PlanOnly => 1,
        FollowThroughCondition::PlanAndExecute => 2,
        FollowThroughCondition::ExecuteOnly => 3,
    }
}

/// Demonstrations of both cues for one condition, raw units.
pub fn demos(
    cfg: &ExperimentConfig,
    cond: FollowThroughCondition,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<SensorimotorSequence<f64>>, ExperimentError> {
    let arm = ArmModel::seven_link();
    let ft = ft_config(cfg);
    let mut out = Vec::new();
    for cue in Cue::BOTH {
        let s = seed.wrapping_mul(31).wrapping_add(cond_salt(cond) * 2 + cue.index() as u64);
        out.extend(gen_followthrough(&arm, cond, cue, n_reps, s, &ft).ctx("follow-through demonstrations")?);
    }
    Ok(out)
}

/// Trains tPC and both RNNs on the same demonstrations and the same number
/// of sequence presentations.
pub fn train(
    cfg: &ExperimentConfig,
    cond: FollowThroughCondition,
    seed: u64,
) -> Result<FollowThroughModels, ExperimentError> {
    let raw = demos(cfg, cond, cfg.ft_reps, seed)?;
    let stats = ChannelStats::fit(&raw).ctx("normalization")?;
    let normalized = stats.apply_all(&raw).ctx("normalization")?;
    let epochs = (cfg.ft_learning_trials / normalized.len()).max(1);
    let train_cfg = cfg.train_config(seed);
    let d = normalized[0].dim();
    let mut tpc = TpcModel::init(cfg.hidden, d, cfg.activation, seed);
    let data: Vec<&Matrix<f64>> = normalized.iter().map(|s| s.data()).collect();
    tpc.memorize_matrices(&data, epochs, &train_cfg, &cfg.inference_config()).ctx("tpc training")?;
    let rnn = |variant: RnnVariant| -> Result<RnnModel<f64>, ExperimentError> {
        let mut m = RnnModel::for_sequence(cfg.hidden, variant, &normalized[0], seed);
        let pairs: Vec<_> = normalized.iter().map(|s| variant.training_pair(s, true)).collect();
        m.train(&pairs, epochs, &train_cfg).ctx("rnn training")?;
        Ok(m)
    };
    let s_to_m = rnn(RnnVariant::SensoryToMotor)?;
    let sm_to_sm = rnn(RnnVariant::SensorimotorToSensorimotor)?;
    Ok(FollowThroughModels { condition: cond, seed, stats, normalized, tpc, s_to_m, sm_to_sm, epochs })
}

/// Fresh noisy repetitions whose first observations cue recall.
pub fn recall_cues(
    cfg: &ExperimentConfig,
    models: &FollowThroughModels,
) -> Result<Vec<(Cue, SensorimotorSequence<f64>)>, ExperimentError> {
    let per_cue = cfg.recall_trials.div_ceil(2);
    let raw = demos(cfg, models.condition, per_cue, models.seed.wrapping_add(0x5EED))?;
    let norm = models.stats.apply_all(&raw).ctx("normalization")?;
    Ok(norm.into_iter().enumerate().map(|(i, s)| (Cue::BOTH[i / per_cue], s)).collect())
}

impl FollowThroughModels {
    /// Offline recall of a whole sequence from its first observation, normalized units.
    pub fn recall(
        &self,
        kind: ModelKind,
        cue: &SensorimotorSequence<f64>,
        inference: &InferenceConfig<f64>,
    ) -> Result<Matrix<f64>, ExperimentError> {
        let steps = cue.len();
        match kind {
            ModelKind::Tpc => Ok(self.tpc.recall_offline(&cue.prefix(1), steps, inference).ctx("offline recall")?.x_hat),
            ModelKind::Rnn(v) => {
                let model = match v {
                    RnnVariant::SensoryToMotor => &self.s_to_m,
                    RnnVariant::SensorimotorToSensorimotor => &self.sm_to_sm,
                };
                let ins = v.input_channels(cue);
                let outs = v.output_channels(cue);
                let first: Vec<f64> = ins.iter().map(|&c| cue.step(0)[c]).collect();
                let pred = model.rollout_from_first(&first, steps - 1).ctx("rnn recall")?;
                // Channels the network does not predict keep the cue value.
                let mut x = Matrix::zeros(steps, cue.dim());
                for t in 0..steps {
                    x.row_mut(t).copy_from_slice(cue.step(0));
                }
                for t in 1..steps {
                    for (k, &c) in outs.iter().enumerate() {
                        x.row_mut(t)[c] = pred[(t - 1, k)];
                    }
                }
                Ok(x)
            }
        }
    }

    /// End-effector path of the reach segment in metres.
    pub fn reach_path(&self, recalled: &Matrix<f64>) -> Matrix<f64> {
        let seq = &self.normalized[0];
        let cx = seq.channel_index("ee_x").expect("ee_x channel");
        let cy = seq.channel_index("ee_y").expect("ee_y channel");
        let rows = (FT_REACH_END + 1).min(recalled.rows());
        Matrix::from_fn(rows, 2, |t, j| {
            let c = if j == 0 { cx } else { cy };
            recalled[(t, c)] * self.stats.std[c] + self.stats.mean[c]
        })
    }

    /// Per-step mean of the training demonstrations of one cue.
    pub fn cue_mean(&self, cue: Cue) -> Matrix<f64> {
        let seqs: Vec<_> = self.normalized.iter().filter(|s| s.skill_id == cue.tag()).collect();
        mean_matrix(&seqs)
    }
}

/// Signed deviations of recalled reaches, grouped by cue.
#[derive(Debug, Clone, PartialEq)]
pub struct PeadSummary {
    pub signed: [Vec<f64>; 2],
}

impl PeadSummary {
    pub fn mean(&self, cue: Cue) -> f64 {
        let v = &self.signed[cue.index()];
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// `mean(CW) − mean(CCW)`.
    pub fn difference(&self) -> f64 {
        self.mean(Cue::Cw) - self.mean(Cue::Ccw)
    }

    pub fn opposite_signs(&self) -> bool {
        self.mean(Cue::Cw) * self.mean(Cue::Ccw) < 0.0
    }
}

pub fn pead_summary(
    cfg: &ExperimentConfig,
    models: &FollowThroughModels,
    kind: ModelKind,
    cues: &[(Cue, SensorimotorSequence<f64>)],
) -> Result<PeadSummary, ExperimentError> {
    let geom = ft_config(cfg).geometry;
    let mut signed = [Vec::new(), Vec::new()];
    for (cue, seq) in cues {
        let x = models.recall(kind, seq, &cfg.inference_config())?;
        let p = pead(&models.reach_path(&x), geom.start, geom.target).ctx("pead")?;
        signed[cue.index()].push(p.signed);
    }
    Ok(PeadSummary { signed })
}

/// Mean recall RMSE against the cued demonstration mean, normalized units.
pub fn recall_error(
    models: &FollowThroughModels,
    kind: ModelKind,
    cues: &[(Cue, SensorimotorSequence<f64>)],
    inference: &InferenceConfig<f64>,
) -> Result<f64, ExperimentError> {
    let means = [models.cue_mean(Cue::Cw), models.cue_mean(Cue::Ccw)];
    let mut total = 0.0;
    for (cue, seq) in cues {
        total += rmse(&models.recall(kind, seq, inference)?, &means[cue.index()]);
    }
    Ok(total / cues.len() as f64)
}

pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle, ExperimentError> {
    let mut bundle = ReportBundle::new("follow-through", cfg);
    let mut csv = String::from("seed,model,condition,cue,trial,pead_signed\n");
    let mut all_ok = true;
    for &seed in &cfg.seeds {
        let mut diffs = Vec::new();
        for cond in FollowThroughCondition::ALL {
            let models = train(cfg, cond, seed)?;
            bundle.set(format!("seed{seed}.{}.epochs", cond.tag()), models.epochs);
            let cues = recall_cues(cfg, &models)?;
            for kind in ModelKind::ALL {
                let s = pead_summary(cfg, &models, kind, &cues)?;
                let p = format!("seed{seed}.{}.{}", kind.tag(), cond.tag());
                bundle.set(format!("{p}.pead_mean_cw"), s.mean(Cue::Cw));
                bundle.set(format!("{p}.pead_mean_ccw"), s.mean(Cue::Ccw));
                bundle.set(format!("{p}.pead_difference"), s.difference());
                bundle.set(format!("{p}.opposite_signs"), s.opposite_signs());
                for cue in Cue::BOTH {
                    for (i, v) in s.signed[cue.index()].iter().enumerate() {
                        let _ = writeln!(csv, "{seed},{},{},{},{i},{v}", kind.tag(), cond.tag(), cue.tag());
                    }
                }
                diffs.push((kind, cond, s));
            }
        }
        for kind in ModelKind::ALL {
            let get = |c: FollowThroughCondition| {
                diffs.iter().find(|(k, cc, _)| *k == kind && *cc == c).map(|(_, _, s)| s).expect("all conditions ran")
            };
            let plan_only = get(FollowThroughCondition::PlanOnly);
            let plan_exec = get(FollowThroughCondition::PlanAndExecute);
            let exec_only = get(FollowThroughCondition::ExecuteOnly);
            let ratio = exec_only.difference().abs() / plan_exec.difference().abs();
            let ok = plan_only.opposite_signs() && plan_exec.opposite_signs() && ratio < 0.25;
            let p = format!("seed{seed}.{}", kind.tag());
            bundle.set(format!("{p}.execute_only_ratio"), ratio);
            bundle.set(format!("{p}.contextual_ok"), ok);
            all_ok &= ok;
        }
    }
    bundle.set("contextual_ok", all_ok);
    bundle.add_csv("pead.csv", "signed deviation of recalled reaches", csv);
    Ok(bundle)
}

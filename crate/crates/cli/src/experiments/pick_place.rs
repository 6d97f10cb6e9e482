//! Two-skill pick-and-place memorization and offline recall.

use std::fmt::Write as _;

use serde_json::Value;
use skillmem::arm::ArmModel;
use skillmem::data::demo::{gen_pick_place, PickPlaceConfig};
use skillmem::data::{ChannelStats, SensorimotorSequence};
use skillmem::linalg::Matrix;
use skillmem::tpc::{MemorizeReport, TpcModel};

use super::{curve_csv, mean_matrix, per_channel_rmse, rmse, train_tpc, Context, ExperimentError};
use crate::config::ExperimentConfig;
use crate::report::ReportBundle;

/// A trained repertoire with the data it was trained on.
#[derive(Debug, Clone)]
pub struct TrainedPickPlace {
    pub seed: u64,
    pub model: TpcModel<f64>,
    pub report: MemorizeReport<f64>,
    pub stats: ChannelStats<f64>,
    /// Raw demonstrations.
    pub demos: Vec<SensorimotorSequence<f64>>,
    pub normalized: Vec<SensorimotorSequence<f64>>,
}

pub fn demo_config(cfg: &ExperimentConfig, seed: u64) -> PickPlaceConfig<f64> {
    PickPlaceConfig { n_reps: cfg.n_reps, n_skills: cfg.n_skills, noise: cfg.noise, seed, ..Default::default() }
}

pub fn train(cfg: &ExperimentConfig, seed: u64) -> Result<TrainedPickPlace, ExperimentError> {
    let arm = ArmModel::seven_link();
    let demos = gen_pick_place(&arm, &demo_config(cfg, seed)).ctx("pick-and-place demonstrations")?;
    let stats = ChannelStats::fit(&demos).ctx("normalization")?;
    let normalized = stats.apply_all(&demos).ctx("normalization")?;
    let (model, report) = train_tpc(cfg, seed, &normalized)?;
    Ok(TrainedPickPlace { seed, model, report, stats, demos, normalized })
}

/// Rebuilds the training data for `seed` around a stored model.
pub fn with_model(cfg: &ExperimentConfig, seed: u64, model: TpcModel<f64>) -> Result<TrainedPickPlace, ExperimentError> {
    let arm = ArmModel::seven_link();
    let demos = gen_pick_place(&arm, &demo_config(cfg, seed)).ctx("pick-and-place demonstrations")?;
    let stats = ChannelStats::fit(&demos).ctx("normalization")?;
    let normalized = stats.apply_all(&demos).ctx("normalization")?;
    if model.obs_dim() != stats.dim() {
        return Err(ExperimentError::Invalid(format!(
            "stored model observes {} channels, the task has {}",
            model.obs_dim(),
            stats.dim()
        )));
    }
    let report = MemorizeReport { energy_curve: Vec::new(), epochs: 0, skills: cfg.n_skills };
    Ok(TrainedPickPlace { seed, model, report, stats, demos, normalized })
}

/// Recall quality of a trained repertoire.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallScore {
    /// Per-channel RMSE against the cued skill's mean demonstration, pooled
    /// over all recall trials, normalized units.
    pub channel_rmse: Vec<f64>,
    /// Fraction of trials whose recalled trajectory is closest to the cued skill's mean.
    pub classification: f64,
    pub trials: usize,
    /// `(trial, cued skill, nearest skill, rmse)` per trial.
    pub per_trial: Vec<(usize, String, String, f64)>,
}

/// Offline recall from the first observation of fresh noisy repetitions,
/// `recall_trials` in total split evenly over the skills.
pub fn score_recall(cfg: &ExperimentConfig, trained: &TrainedPickPlace) -> Result<RecallScore, ExperimentError> {
    let arm = ArmModel::seven_link();
    let per_skill = cfg.recall_trials.div_ceil(cfg.n_skills);
    let fresh_cfg = PickPlaceConfig { n_reps: per_skill, ..demo_config(cfg, trained.seed.wrapping_add(10_007)) };
    let fresh = gen_pick_place(&arm, &fresh_cfg).ctx("recall cues")?;
    let fresh = trained.stats.apply_all(&fresh).ctx("normalization")?;
    let mut skills: Vec<&str> = trained.normalized.iter().map(|s| s.skill_id.as_str()).collect();
    skills.dedup();
    let means: Vec<Matrix<f64>> = skills
        .iter()
        .map(|k| mean_matrix(&trained.normalized.iter().filter(|s| s.skill_id == *k).collect::<Vec<_>>()))
        .collect();
    let inf = cfg.inference_config();
    let mut recalls = Vec::new();
    let mut per_trial = Vec::new();
    let mut correct = 0;
    for (i, seq) in fresh.iter().take(cfg.recall_trials).enumerate() {
        let horizon = seq.len();
        let r = trained.model.recall_offline(&seq.prefix(1), horizon, &inf).ctx("offline recall")?;
        let cued = skills.iter().position(|k| *k == seq.skill_id).expect("cued skill was trained");
        let (nearest, _) = means
            .iter()
            .enumerate()
            .map(|(k, m)| (k, rmse(&r.x_hat, m)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one skill");
        correct += usize::from(nearest == cued);
        per_trial.push((i, skills[cued].to_string(), skills[nearest].to_string(), rmse(&r.x_hat, &means[cued])));
        recalls.push((r.x_hat, cued));
    }
    let pairs: Vec<(&Matrix<f64>, &Matrix<f64>)> = recalls.iter().map(|(x, k)| (x, &means[*k])).collect();
    Ok(RecallScore {
        channel_rmse: per_channel_rmse(&pairs),
        classification: correct as f64 / recalls.len() as f64,
        trials: recalls.len(),
        per_trial,
    })
}

/// Trains one repertoire per seed and scores its recall.
pub fn run(cfg: &ExperimentConfig) -> Result<(ReportBundle, Vec<TrainedPickPlace>), ExperimentError> {
    let mut bundle = ReportBundle::new("train", cfg);
    bundle.set("n_reps", cfg.n_reps);
    bundle.set("n_skills", cfg.n_skills);
    bundle.set("epochs_per_skill", cfg.epochs_per_skill);
    bundle.set("weight_lr", cfg.weight_lr);
    bundle.set("hidden", cfg.hidden);
    let mut trained = Vec::new();
    for &seed in &cfg.seeds {
        let t = train(cfg, seed)?;
        let score = score_recall(cfg, &t)?;
        let curve = &t.report.energy_curve;
        let reduction = 1.0 - curve.last().copied().unwrap_or(0.0) / curve[0];
        let p = format!("seed{seed}");
        bundle.set(format!("{p}.epochs"), t.report.epochs);
        bundle.set(format!("{p}.energy_first"), curve[0]);
        bundle.set(format!("{p}.energy_last"), *curve.last().expect("non-empty curve"));
        bundle.set(format!("{p}.energy_reduction"), reduction);
        bundle.set(format!("{p}.recall_trials"), score.trials);
        bundle.set(format!("{p}.recall_rmse_max_channel"), score.channel_rmse.iter().copied().fold(0.0, f64::max));
        bundle.set(format!("{p}.recall_rmse_per_channel"), Value::from(score.channel_rmse.clone()));
        bundle.set(format!("{p}.recall_classification"), score.classification);
        bundle.add_csv(format!("learning_curve_seed{seed}.csv"), "memorization energy", curve_csv("energy", curve));
        let mut trials = String::from("trial,cued,nearest,rmse\n");
        for (i, c, n, e) in &score.per_trial {
            let _ = writeln!(trials, "{i},{c},{n},{e}");
        }
        bundle.add_csv(format!("recall_trials_seed{seed}.csv"), "recall error per trial", trials);
        trained.push(t);
    }
    Ok((bundle, trained))
}

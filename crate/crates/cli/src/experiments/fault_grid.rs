//! Fault detection and isolation over the joint × time × overshoot grid.

use skillmem::arm::{ArmModel, ControllerConfig};
use skillmem::baselines::StatsMode;
use skillmem::monitor::{eval_grid, GridConfig, GridEvaluation, GridSpec, SkillMonitor};

use super::pick_place::{self, TrainedPickPlace};
use super::{Context, ExperimentError};
use crate::config::ExperimentConfig;
use crate::report::ReportBundle;

pub fn grid_config(cfg: &ExperimentConfig, seed: u64) -> GridConfig<f64> {
    GridConfig {
        spec: GridSpec {
            joints: cfg.grid_joints.iter().map(|j| j - 1).collect(),
            times_s: cfg.grid_times.clone(),
            overshoots_deg: cfg.grid_overshoots.clone(),
        },
        thresholds: cfg.grid_thresholds.clone(),
        calibration_trials: cfg.grid_calibration_trials,
        held_out_trials: cfg.grid_held_out_trials,
        noise_std: cfg.noise,
        seed,
        scope: cfg.isolation_scope,
        units: cfg.isolation_units,
        baseline_mode: StatsMode::PerStep,
        ..Default::default()
    }
}

/// Runs the grid against an already trained repertoire.
pub fn evaluate(cfg: &ExperimentConfig, trained: &TrainedPickPlace) -> Result<GridEvaluation<f64>, ExperimentError> {
    let arm = ArmModel::seven_link();
    let monitor = SkillMonitor {
        model: &trained.model,
        stats: &trained.stats,
        arm: &arm,
        controller: ControllerConfig::default(),
        inference: cfg.inference_config(),
    };
    eval_grid(&monitor, &trained.demos, &grid_config(cfg, trained.seed)).ctx("fault grid")
}

/// Adds one seed's grid outcome to `bundle` under `seed<k>.`.
pub fn record(bundle: &mut ReportBundle, seed: u64, eval: &GridEvaluation<f64>) {
    let p = format!("seed{seed}");
    bundle.set(format!("{p}.fault_trials"), eval.fault_trials);
    bundle.set(format!("{p}.calibration_trials"), eval.calibration_trials);
    bundle.set(format!("{p}.normal_trials"), eval.normal_trials);
    let mut detection_ok = true;
    let mut fpr_ok = true;
    for row in &eval.rows {
        let q = format!("{p}.q{:.2}", row.q);
        for r in [&row.tpc, &row.baseline] {
            bundle.set(format!("{q}.{}.threshold", r.method), r.threshold.value);
            bundle.set(format!("{q}.{}.detection_accuracy", r.method), r.detection_accuracy);
            bundle.set(format!("{q}.{}.isolation_accuracy", r.method), r.isolation_accuracy);
            bundle.set(format!("{q}.{}.fpr", r.method), r.fpr);
            bundle.set(format!("{q}.{}.trial_fpr", r.method), r.trial_fpr);
            bundle.set(format!("{q}.{}.fnr", r.method), r.fnr);
        }
        detection_ok &= row.tpc.detection_accuracy >= row.baseline.detection_accuracy;
        fpr_ok &= row.tpc.fpr <= 2.0 * (1.0 - row.q);
    }
    // Isolation is read at the fault's own sample and does not depend on q.
    let first = &eval.rows[0];
    bundle.set(format!("{p}.tpc.isolation_accuracy"), first.tpc.isolation_accuracy);
    bundle.set(format!("{p}.zscore.isolation_accuracy"), first.baseline.isolation_accuracy);
    bundle.set(format!("{p}.detection_at_least_baseline"), detection_ok);
    bundle.set(format!("{p}.fpr_within_bound"), fpr_ok);
    bundle.set(
        format!("{p}.isolation_ratio_ok"),
        first.tpc.isolation_accuracy >= 1.5 * first.baseline.isolation_accuracy,
    );
    bundle.add_csv(format!("grid_summary_seed{seed}.csv"), "detection and isolation per percentile", eval.summary_csv());
    bundle.add_csv(format!("grid_trials_tpc_seed{seed}.csv"), "fault trials, memory monitor", first.tpc.trials_csv());
    bundle.add_csv(format!("grid_trials_zscore_seed{seed}.csv"), "fault trials, z-score monitor", first.baseline.trials_csv());
}

pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle, ExperimentError> {
    let mut bundle = ReportBundle::new("fault-grid", cfg);
    for &seed in &cfg.seeds {
        let trained = pick_place::train(cfg, seed)?;
        let eval = evaluate(cfg, &trained)?;
        record(&mut bundle, seed, &eval);
    }
    Ok(bundle)
}

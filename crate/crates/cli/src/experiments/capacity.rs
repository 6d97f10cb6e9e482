//! Learning speed as a function of repertoire size.

use skillmem::arm::ArmModel;
use skillmem::data::demo::{gen_pick_place, PickPlaceConfig};
use skillmem::data::ChannelStats;
use skillmem::linalg::Matrix;
use skillmem::tpc::{MemorizeReport, TpcModel};

use super::{curve_csv, Context, ExperimentError};
use crate::config::ExperimentConfig;
use crate::report::ReportBundle;

/// Trains on `capacity_demos` sequences spread evenly over `skills` skills
/// for a fixed number of epochs. Returns the energy curve normalized by its
/// first value and the epoch at which it first falls to half.
pub fn learning_curve(
    cfg: &ExperimentConfig,
    skills: usize,
    seed: u64,
) -> Result<(Vec<f64>, Option<usize>), ExperimentError> {
    let arm = ArmModel::seven_link();
    let per_skill = cfg.capacity_demos.div_ceil(skills);
    let demo_cfg = PickPlaceConfig { n_reps: per_skill, n_skills: skills, noise: cfg.noise, seed, ..Default::default() };
    let mut raw = gen_pick_place(&arm, &demo_cfg).ctx("capacity demonstrations")?;
    // Round-robin over skills so every size sees exactly `capacity_demos` sequences.
    raw.sort_by_key(|s| s.rep_id.clone());
    raw.truncate(cfg.capacity_demos);
    let stats = ChannelStats::fit(&raw).ctx("normalization")?;
    let norm = stats.apply_all(&raw).ctx("normalization")?;
    let mut model = TpcModel::init(cfg.hidden, norm[0].dim(), cfg.activation, seed);
    let data: Vec<&Matrix<f64>> = norm.iter().map(|s| s.data()).collect();
    let curve = model
        .memorize_matrices(&data, cfg.capacity_epochs, &cfg.train_config(seed), &cfg.inference_config())
        .ctx("tpc training")?;
    let report = MemorizeReport { energy_curve: curve, epochs: cfg.capacity_epochs, skills };
    let half = report.epochs_to_fraction(0.5);
    let first = report.energy_curve[0];
    Ok((report.energy_curve.iter().map(|e| e / first).collect(), half))
}

pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle, ExperimentError> {
    let mut bundle = ReportBundle::new("capacity", cfg);
    let mut all_ok = true;
    for &seed in &cfg.seeds {
        let mut halves = Vec::new();
        for &k in &cfg.capacity_skills {
            let (curve, half) = learning_curve(cfg, k, seed)?;
            // Never reaching half counts as one epoch past the run.
            let half = half.unwrap_or(cfg.capacity_epochs);
            bundle.set(format!("seed{seed}.skills{k}.epochs_to_half"), half);
            bundle.add_csv(format!("capacity_seed{seed}_skills{k}.csv"), "normalized energy over epochs", curve_csv("energy", &curve));
            halves.push(half);
        }
        let ok = halves.windows(2).all(|w| w[0] <= w[1]);
        bundle.set(format!("seed{seed}.ordering_ok"), ok);
        all_ok &= ok;
    }
    bundle.set("ordering_ok", all_ok);
    Ok(bundle)
}

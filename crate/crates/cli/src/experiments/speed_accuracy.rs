//! Recall error as a function of the inference budget.

use std::fmt::Write as _;

use skillmem::data::demo::FollowThroughCondition;

use super::follow_through::{self, ModelKind};
use super::ExperimentError;
use crate::config::ExperimentConfig;
use crate::report::ReportBundle;

/// True when every value is at most 5% above the smallest value before it.
pub fn non_increasing_within(curve: &[f64], tolerance: f64) -> bool {
    let mut best = f64::INFINITY;
    for &v in curve {
        if v > best * (1.0 + tolerance) {
            return false;
        }
        best = best.min(v);
    }
    true
}

pub fn run(cfg: &ExperimentConfig) -> Result<ReportBundle, ExperimentError> {
    let mut bundle = ReportBundle::new("speed-accuracy", cfg);
    let mut csv = String::from("seed,model,n_iters,recall_rmse\n");
    let mut all_ok = true;
    for &seed in &cfg.seeds {
        let models = follow_through::train(cfg, FollowThroughCondition::PlanAndExecute, seed)?;
        let cues = follow_through::recall_cues(cfg, &models)?;
        for kind in ModelKind::ALL {
            let mut curve = Vec::new();
            for &n in &cfg.speed_iters {
                let inf = cfg.inference_config().with_iters(n);
                let e = follow_through::recall_error(&models, kind, &cues, &inf)?;
                let _ = writeln!(csv, "{seed},{},{n},{e}", kind.tag());
                curve.push(e);
            }
            let p = format!("seed{seed}.{}", kind.tag());
            let (first, last) = (curve[0], *curve.last().expect("non-empty sweep"));
            bundle.set(format!("{p}.error_first"), first);
            bundle.set(format!("{p}.error_last"), last);
            let ok = match kind {
                ModelKind::Tpc => last < first && non_increasing_within(&curve, 0.05),
                ModelKind::Rnn(_) => curve.iter().all(|&e| e == first),
            };
            bundle.set(format!("{p}.speed_accuracy_ok"), ok);
            all_ok &= ok;
        }
    }
    bundle.set("speed_accuracy_ok", all_ok);
    bundle.add_csv("speed_accuracy.csv", "recall error versus inference iterations", csv);
    Ok(bundle)
}

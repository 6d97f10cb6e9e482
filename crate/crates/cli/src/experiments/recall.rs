//! Single recalls with an optional injected fault, and the seeded push
//! trials of reactive correction.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skillmem::arm::{ArmModel, ControllerConfig, FaultSpec, GripModel};
use skillmem::data::demo::skill_name;
use skillmem::data::SensorimotorSequence;
use skillmem::monitor::{calibrate_threshold, reactive_correct, ReactiveOutcome, SkillMonitor};

use super::pick_place::TrainedPickPlace;
use super::{matrix_csv, Context, ExperimentError};
use crate::config::ExperimentConfig;
use crate::report::ReportBundle;

pub const PUSH_RAD: f64 = 0.2;
pub const PUSH_S: f64 = 0.5;
/// Final end-effector error a corrected trial must stay within, m.
pub const RECONVERGE_M: f64 = 1e-3;
/// Percentile of the no-fault scores used as the alarm level.
pub const ALARM_Q: f64 = 0.99;

fn first_row_mean(reps: &[&SensorimotorSequence<f64>]) -> Vec<f64> {
    let n = reps.len() as f64;
    (0..reps[0].dim()).map(|c| reps.iter().map(|s| s.step(0)[c]).sum::<f64>() / n).collect()
}

/// One seeded push trial next to its fault-free twin.
#[derive(Debug, Clone)]
pub struct PushTrial {
    pub skill: String,
    pub fault: FaultSpec<f64>,
    pub faulted: ReactiveOutcome<f64>,
    pub clean: ReactiveOutcome<f64>,
}

impl PushTrial {
    pub fn final_error(&self) -> f64 {
        self.faulted.final_ee_distance(&self.clean)
    }
}

/// Push trials with the same recalled plan and sensor noise as a fault-free
/// run. The control variant pushes the base joint and holds it there for the
/// rest of the trial.
pub fn push_trials(
    cfg: &ExperimentConfig,
    trained: &TrainedPickPlace,
    control: bool,
) -> Result<Vec<PushTrial>, ExperimentError> {
    let arm = ArmModel::seven_link();
    let monitor = SkillMonitor {
        model: &trained.model,
        stats: &trained.stats,
        arm: &arm,
        controller: ControllerConfig::default(),
        inference: cfg.inference_config(),
    };
    let mut skills: Vec<&str> = trained.demos.iter().map(|s| s.skill_id.as_str()).collect();
    skills.dedup();
    let mut out = Vec::with_capacity(cfg.reactive_trials);
    for i in 0..cfg.reactive_trials {
        let seed = trained.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let skill = skills[i % skills.len()];
        let reps: Vec<&SensorimotorSequence<f64>> = trained.demos.iter().filter(|s| s.skill_id == skill).collect();
        let template = reps[0];
        let duration_s = template.len() as f64 / template.rate_hz;
        let joint = rng.gen_range(0..arm.joints());
        let time_s = 0.5 * rng.gen_range(2..=8) as f64;
        let (joint, hold) = if control { (0, duration_s) } else { (joint, PUSH_S) };
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let fault = FaultSpec::push(joint, time_s, sign * PUSH_RAD, hold);
        let grip = GripModel { noise_std: cfg.noise, seed, ..GripModel::default() };
        let cue = first_row_mean(&reps);
        let faulted = reactive_correct(&monitor, &cue, template, Some(&fault), &grip).ctx("push trial")?;
        let clean = reactive_correct(&monitor, &cue, template, None, &grip).ctx("push trial")?;
        out.push(PushTrial { skill: skill.to_string(), fault, faulted, clean });
    }
    Ok(out)
}

/// Outcome of a push-trial set.
#[derive(Debug, Clone, PartialEq)]
pub struct PushSummary {
    pub trials: usize,
    pub reconverged: usize,
    pub detected: usize,
    pub alarm: f64,
    pub errors: Vec<f64>,
}

/// Alarm level from every fault-free twin's scores; a trial is detected when
/// any score from the push onward exceeds it.
pub fn summarize(trials: &[PushTrial], high_rate: u32) -> Result<PushSummary, ExperimentError> {
    let pooled: Vec<f64> = trials.iter().flat_map(|t| t.clean.execution.scores.iter().copied()).collect();
    let alarm = calibrate_threshold(&pooled, ALARM_Q).ctx("alarm calibration")?;
    let errors: Vec<f64> = trials.iter().map(PushTrial::final_error).collect();
    let detected = trials
        .iter()
        .filter(|t| {
            let from = t.fault.sample_index(high_rate);
            t.faulted.execution.scores.iter().skip(from).any(|&s| alarm.exceeded_by(s))
        })
        .count();
    Ok(PushSummary {
        trials: trials.len(),
        reconverged: errors.iter().filter(|&&e| e <= RECONVERGE_M).count(),
        detected,
        alarm: alarm.value,
        errors,
    })
}

fn push_csv(trials: &[PushTrial], s: &PushSummary) -> String {
    let mut csv = String::from("trial,skill,joint,time_s,offset_rad,duration_s,final_ee_error_m\n");
    for (i, (t, e)) in trials.iter().zip(&s.errors).enumerate() {
        let f = &t.fault;
        let _ = writeln!(csv, "{i},{},{},{},{},{},{e}", t.skill, f.joint + 1, f.time_s, f.magnitude, f.duration_s);
    }
    csv
}

pub fn run(cfg: &ExperimentConfig, trained: &TrainedPickPlace) -> Result<ReportBundle, ExperimentError> {
    let mut bundle = ReportBundle::new("recall", cfg);
    let seed = trained.seed;
    let p = format!("seed{seed}");
    let arm = ArmModel::seven_link();
    let controller = ControllerConfig::default();
    let monitor = SkillMonitor {
        model: &trained.model,
        stats: &trained.stats,
        arm: &arm,
        controller,
        inference: cfg.inference_config(),
    };
    let skill = skill_name(cfg.recall_skill - 1);
    let reps: Vec<&SensorimotorSequence<f64>> = trained.demos.iter().filter(|s| s.skill_id == skill).collect();
    let template = *reps.first().ok_or_else(|| ExperimentError::Invalid(format!("skill `{skill}` was not trained")))?;
    let grip = GripModel { noise_std: cfg.noise, seed, ..GripModel::default() };
    let outcome =
        reactive_correct(&monitor, &first_row_mean(&reps), template, cfg.fault.as_ref(), &grip).ctx("recall")?;
    let labels: Vec<&str> = template.labels().collect();
    bundle.add_csv(format!("recall_plan_seed{seed}.csv"), "recalled plan, raw units", matrix_csv(&labels, outcome.plan.desired.data()));
    bundle.add_csv(format!("recall_trace_seed{seed}.csv"), "executed trial per servo tick", outcome.execution.trace.to_csv());
    bundle.set(format!("{p}.skill"), skill);
    bundle.set(format!("{p}.max_score"), outcome.execution.scores.iter().copied().fold(0.0, f64::max));

    for (tag, control) in [("push", false), ("control", true)] {
        let trials = push_trials(cfg, trained, control)?;
        let s = summarize(&trials, controller.high_rate)?;
        bundle.set(format!("{p}.{tag}.trials"), s.trials);
        bundle.set(format!("{p}.{tag}.reconverged"), s.reconverged);
        bundle.set(format!("{p}.{tag}.detected"), s.detected);
        bundle.set(format!("{p}.{tag}.reconverged_fraction"), s.reconverged as f64 / s.trials.max(1) as f64);
        bundle.set(format!("{p}.{tag}.alarm"), s.alarm);
        bundle.add_csv(format!("{tag}_trials_seed{seed}.csv"), "final end-effector error after a push", push_csv(&trials, &s));
    }
    Ok(bundle)
}

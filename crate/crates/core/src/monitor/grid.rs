//! Systematic fault-grid evaluation of the memory-based monitor against the
//! Z-score baseline.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::detect::{isolate, report_from_scores};
use super::{calibrate_threshold, fault_score, DetectionReport, DetectionThreshold, IsolationScope, MonitorError};
use crate::arm::{run_trial, ArmModel, ControllerConfig, FaultSpec, GripModel, TrialTrace};
use crate::baselines::{StatsMode, ZscoreDetector};
use crate::data::{Channel, ChannelKind, ChannelStats, SensorimotorSequence};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::tpc::{InferenceConfig, TpcModel};

/// A trained memory plus everything needed to turn a cue into a movement.
#[derive(Debug, Clone, Copy)]
pub struct SkillMonitor<'a, T> {
    pub model: &'a TpcModel<T>,
    pub stats: &'a ChannelStats<T>,
    pub arm: &'a ArmModel<T>,
    pub controller: ControllerConfig<T>,
    pub inference: InferenceConfig<T>,
}

/// A recalled motor plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan<T> {
    /// Offline recall in normalized units, `T x D`.
    pub x_hat: Matrix<T>,
    /// The same trajectory in raw units with cue channels snapped to 0/1.
    pub desired: SensorimotorSequence<T>,
}

/// One executed plan and its prediction errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution<T> {
    pub trace: TrialTrace<T>,
    /// Observed sequence in normalized units.
    pub observed: Matrix<T>,
    /// Fault score per step: squared distance to the plan, normalized units.
    pub scores: Vec<T>,
    /// `observed − x_hat`, normalized units.
    pub errors: Matrix<T>,
    /// `observed − desired`, raw units.
    pub raw_errors: Matrix<T>,
}

impl<'a, T: Real> SkillMonitor<'a, T> {
    /// Recalls a full trajectory from one raw observation. `template` fixes
    /// the channel layout, rate and horizon.
    pub fn plan(&self, cue: &[T], template: &SensorimotorSequence<T>) -> Result<Plan<T>, MonitorError> {
        let cue_norm = self.stats.normalize_row(cue);
        let cue_m = Matrix::from_vec(1, cue_norm.len(), cue_norm).expect("row vector");
        let recall = self.model.recall_offline(&cue_m, template.len(), &self.inference)?;
        let mut raw = self.stats.denormalize_matrix(&recall.x_hat)?;
        for c in template.channels_of_kind(ChannelKind::Cue) {
            for t in 0..raw.rows() {
                let v = raw[(t, c)];
                raw.row_mut(t)[c] = if v >= T::lit(0.5) { T::one() } else { T::zero() };
            }
        }
        let mut desired = template.with_data(raw)?;
        desired.normalized = false;
        Ok(Plan { x_hat: recall.x_hat, desired })
    }

    /// Executes a plan on the arm and scores every observation against it.
    pub fn execute(
        &self,
        plan: &Plan<T>,
        fault: Option<&FaultSpec<T>>,
        grip: &GripModel<T>,
    ) -> Result<Execution<T>, MonitorError> {
        let trace = run_trial(self.arm, &self.controller, &plan.desired, fault, grip)?;
        let observed = self.stats.normalize_matrix(trace.observed.data())?;
        let steps = observed.rows();
        let scores = (0..steps).map(|t| fault_score(observed.row(t), plan.x_hat.row(t))).collect();
        let d = observed.cols();
        let errors = Matrix::from_fn(steps, d, |t, c| observed[(t, c)] - plan.x_hat[(t, c)]);
        let raw_errors = Matrix::from_fn(steps, d, |t, c| trace.observed.data()[(t, c)] - plan.desired.data()[(t, c)]);
        Ok(Execution { trace, observed, scores, errors, raw_errors })
    }
}

/// Faults injected by the grid: every joint × onset time × lock overshoot.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    pub joints: Vec<usize>,
    pub times_s: Vec<T>,
    pub overshoots_deg: Vec<T>,
}

impl<T: Real> Default for GridSpec<T> {
    /// 7 joints × {1.0, 1.5, …, 5.5} s × {−15, −10, …, 15}°.
    fn default() -> Self {
        Self {
            joints: (0..7).collect(),
            times_s: (0..10).map(|i| T::lit(1.0 + 0.5 * i as f64)).collect(),
            overshoots_deg: (-3..=3).map(|i| T::lit(5.0 * i as f64)).collect(),
        }
    }
}

impl<T: Real> GridSpec<T> {
    pub fn len(&self) -> usize {
        self.joints.len() * self.times_s.len() * self.overshoots_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Joint-major, then time, then overshoot.
    pub fn faults(&self) -> Vec<FaultSpec<T>> {
        let mut out = Vec::with_capacity(self.len());
        for &j in &self.joints {
            for &t in &self.times_s {
                for &o in &self.overshoots_deg {
                    out.push(FaultSpec::lock(j, t, o));
                }
            }
        }
        out
    }
}

/// Units in which the memory monitor ranks channels for isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolationUnits {
    /// Z-scored channel units, the space the network predicts in.
    #[default]
    Normalized,
    /// Raw sensor units (radians for joints).
    Raw,
}

impl IsolationUnits {
    pub fn tag(self) -> &'static str {
        match self {
            IsolationUnits::Normalized => "normalized",
            IsolationUnits::Raw => "raw",
        }
    }
}

impl std::str::FromStr for IsolationUnits {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(IsolationUnits::Normalized),
            "raw" => Ok(IsolationUnits::Raw),
            other => Err(format!("unknown isolation units `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig<T> {
    pub spec: GridSpec<T>,
    pub thresholds: Vec<T>,
    /// No-fault trials per skill used to set thresholds.
    pub calibration_trials: usize,
    /// Further no-fault trials per skill used to measure false positives.
    pub held_out_trials: usize,
    /// Noise on the cue observation and on every trial's sensors, raw units.
    pub noise_std: T,
    pub grip_force: T,
    pub seed: u64,
    pub scope: IsolationScope,
    pub units: IsolationUnits,
    pub baseline_mode: StatsMode,
}

impl<T: Real> Default for GridConfig<T> {
    fn default() -> Self {
        Self {
            spec: GridSpec::default(),
            thresholds: [0.99, 0.98, 0.97, 0.96, 0.95].iter().map(|&q| T::lit(q)).collect(),
            calibration_trials: 10,
            held_out_trials: 50,
            noise_std: T::lit(0.01),
            grip_force: T::lit(5.0),
            seed: 0,
            scope: IsolationScope::Joints,
            units: IsolationUnits::Normalized,
            baseline_mode: StatsMode::PerStep,
        }
    }
}

/// Per-step scores and isolation errors of one trial under one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTrial<T> {
    pub skill: String,
    pub fault: Option<FaultSpec<T>>,
    /// Fault's sample index, or 0 for a no-fault trial.
    pub scan_from: usize,
    pub scores: Vec<T>,
    /// Signed errors ranked for isolation, `T x D`.
    pub errors: Matrix<T>,
}

/// Outcome of one method at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct GridResult<T> {
    pub method: String,
    pub threshold: DetectionThreshold<T>,
    /// One report per fault trial, grid order.
    pub reports: Vec<DetectionReport<T>>,
    /// Joint ranked first at each fault trial's sample step.
    pub isolated_at_fault: Vec<Option<usize>>,
    /// One report per held-out no-fault trial.
    pub normal_reports: Vec<DetectionReport<T>>,
    pub detection_accuracy: f64,
    pub isolation_accuracy: f64,
    /// Fraction of held-out no-fault steps over threshold.
    pub fpr: f64,
    /// Fraction of held-out no-fault trials with any alarm.
    pub trial_fpr: f64,
    pub fnr: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Thresholds one method at percentile `q` and scores it on the trial sets.
pub fn evaluate_method<T: Real>(
    method: &str,
    q: T,
    calibration: &[ScoredTrial<T>],
    fault_trials: &[ScoredTrial<T>],
    normal_trials: &[ScoredTrial<T>],
    channels: &[Channel],
    scope: IsolationScope,
) -> Result<GridResult<T>, MonitorError> {
    let pooled: Vec<T> = calibration.iter().flat_map(|t| t.scores.iter().copied()).collect();
    let threshold = calibrate_threshold(&pooled, q)?;
    let report = |t: &ScoredTrial<T>| {
        let mut r = report_from_scores(
            t.scores.clone(),
            &Matrix::zeros(t.errors.rows(), t.errors.cols()),
            &t.errors,
            channels,
            &threshold,
            t.scan_from,
            scope,
        );
        r.truth = t.fault;
        r
    };
    let reports: Vec<_> = fault_trials.iter().map(report).collect();
    let normal_reports: Vec<_> = normal_trials.iter().map(report).collect();
    let isolated_at_fault: Vec<Option<usize>> = fault_trials
        .iter()
        .map(|t| {
            let step = t.scan_from.min(t.errors.rows().saturating_sub(1));
            isolate(t.errors.row(step), channels, scope).and_then(|(_, j)| j)
        })
        .collect();
    let detected = reports.iter().filter(|r| r.detected).count();
    let isolated = fault_trials
        .iter()
        .zip(&isolated_at_fault)
        .filter(|(t, iso)| t.fault.is_some_and(|f| **iso == Some(f.joint)))
        .count();
    let normal_steps: usize = normal_reports.iter().map(|r| r.energy_trace.len()).sum();
    let normal_alarms: usize = normal_reports
        .iter()
        .map(|r| r.energy_trace.iter().filter(|&&e| threshold.exceeded_by(e)).count())
        .sum();
    let detection_accuracy = ratio(detected, reports.len());
    Ok(GridResult {
        method: method.to_string(),
        threshold,
        isolation_accuracy: ratio(isolated, fault_trials.len()),
        fpr: ratio(normal_alarms, normal_steps),
        trial_fpr: ratio(normal_reports.iter().filter(|r| r.detected).count(), normal_reports.len()),
        fnr: 1.0 - detection_accuracy,
        detection_accuracy,
        reports,
        isolated_at_fault,
        normal_reports,
    })
}

/// Both methods at one percentile.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow<T> {
    pub q: T,
    pub tpc: GridResult<T>,
    pub baseline: GridResult<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEvaluation<T> {
    pub rows: Vec<GridRow<T>>,
    pub channels: Vec<Channel>,
    pub fault_trials: usize,
    pub calibration_trials: usize,
    pub normal_trials: usize,
}

/// Scored trial sets for both methods.
struct TrialSets<T> {
    calibration: Vec<ScoredTrial<T>>,
    faults: Vec<ScoredTrial<T>>,
    normal: Vec<ScoredTrial<T>>,
}

fn trial_seed(base: u64, skill: usize, set: u64, index: usize) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ ((skill as u64) << 48)
        ^ (set << 40)
        ^ index as u64
}

fn skill_mean_first_row<T: Real>(demos: &[&SensorimotorSequence<T>]) -> Vec<T> {
    let d = demos[0].dim();
    let n = T::from_usize(demos.len()).expect("count");
    (0..d).map(|c| demos.iter().map(|s| s.step(0)[c]).fold(T::zero(), |a, b| a + b) / n).collect()
}

/// Runs calibration, held-out and fault trials for every skill in `demos`
/// (raw units), thresholds both methods at every percentile and aggregates.
///
/// Every trial recalls its own plan from the skill's mean first observation
/// plus fresh sensor noise, then executes it. The baseline is fitted on the
/// same demonstrations and is told which skill is running.
pub fn eval_grid<T: Real>(
    monitor: &SkillMonitor<'_, T>,
    demos: &[SensorimotorSequence<T>],
    cfg: &GridConfig<T>,
) -> Result<GridEvaluation<T>, MonitorError> {
    let baseline = ZscoreDetector::fit(demos, cfg.baseline_mode)?;
    let mut skills: Vec<&str> = demos.iter().map(|s| s.skill_id.as_str()).collect();
    skills.dedup();
    skills.sort_unstable();
    skills.dedup();
    let channels = demos.first().ok_or(MonitorError::EmptyCalibration)?.channels().to_vec();
    let faults = cfg.spec.faults();
    let mut tpc = TrialSets { calibration: vec![], faults: vec![], normal: vec![] };
    let mut base = TrialSets { calibration: vec![], faults: vec![], normal: vec![] };

    for (k, skill) in skills.iter().enumerate() {
        let reps: Vec<&SensorimotorSequence<T>> = demos.iter().filter(|s| s.skill_id == *skill).collect();
        let nominal = skill_mean_first_row(&reps);
        let template = reps[0];
        let mut run = |set: u64, index: usize, fault: Option<FaultSpec<T>>| -> Result<(), MonitorError> {
            let seed = trial_seed(cfg.seed, k, set, index);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cue = nominal.clone();
            if cfg.noise_std > T::zero() {
                let normal = Normal::new(0.0, cfg.noise_std.as_f64()).expect("finite noise");
                for (c, v) in cue.iter_mut().enumerate() {
                    if channels[c].kind != ChannelKind::Cue && channels[c].label != "gripper" {
                        *v = *v + T::lit(normal.sample(&mut rng));
                    }
                }
            }
            let plan = monitor.plan(&cue, template)?;
            let grip = GripModel { grip_force: cfg.grip_force, noise_std: cfg.noise_std, seed: seed ^ 0xA5A5 };
            let exec = monitor.execute(&plan, fault.as_ref(), &grip)?;
            let scan_from = fault.map(|f| f.sample_index(monitor.controller.high_rate)).unwrap_or(0);
            let z_scores = baseline.score_sequence(skill, &exec.trace.observed)?;
            let z_errors = {
                let obs = exec.trace.observed.data();
                let rows: Vec<Vec<T>> = (0..obs.rows())
                    .map(|t| baseline.errors(skill, t, obs.row(t)))
                    .collect::<Result<_, _>>()?;
                Matrix::from_rows(&rows).expect("rectangular")
            };
            let tpc_errors = match cfg.units {
                IsolationUnits::Normalized => exec.errors.clone(),
                IsolationUnits::Raw => exec.raw_errors.clone(),
            };
            let mk = |scores, errors| ScoredTrial { skill: skill.to_string(), fault, scan_from, scores, errors };
            let (t_trial, b_trial) = (mk(exec.scores, tpc_errors), mk(z_scores, z_errors));
            let (t_set, b_set) = match set {
                0 => (&mut tpc.calibration, &mut base.calibration),
                1 => (&mut tpc.normal, &mut base.normal),
                _ => (&mut tpc.faults, &mut base.faults),
            };
            t_set.push(t_trial);
            b_set.push(b_trial);
            Ok(())
        };
        for i in 0..cfg.calibration_trials {
            run(0, i, None)?;
        }
        for i in 0..cfg.held_out_trials {
            run(1, i, None)?;
        }
        for (i, f) in faults.iter().enumerate() {
            run(2, i, Some(*f))?;
        }
    }

    let rows = cfg
        .thresholds
        .iter()
        .map(|&q| {
            Ok(GridRow {
                q,
                tpc: evaluate_method("tpc", q, &tpc.calibration, &tpc.faults, &tpc.normal, &channels, cfg.scope)?,
                baseline: evaluate_method(
                    "zscore",
                    q,
                    &base.calibration,
                    &base.faults,
                    &base.normal,
                    &channels,
                    cfg.scope,
                )?,
            })
        })
        .collect::<Result<Vec<_>, MonitorError>>()?;
    Ok(GridEvaluation {
        rows,
        channels,
        fault_trials: tpc.faults.len(),
        calibration_trials: tpc.calibration.len(),
        normal_trials: tpc.normal.len(),
    })
}

impl<T: Real> GridEvaluation<T> {
    /// `q,method,threshold,detection_accuracy,isolation_accuracy,fpr,trial_fpr,fnr`
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("q,method,threshold,detection_accuracy,isolation_accuracy,fpr,trial_fpr,fnr\n");
        for row in &self.rows {
            for r in [&row.tpc, &row.baseline] {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    row.q,
                    r.method,
                    r.threshold.value,
                    r.detection_accuracy,
                    r.isolation_accuracy,
                    r.fpr,
                    r.trial_fpr,
                    r.fnr
                );
            }
        }
        out
    }
}

impl<T: Real> GridResult<T> {
    /// One row per fault trial:
    /// `trial,joint,time_s,overshoot_deg,detected,detect_step,isolated_channel,isolated_joint,isolated_at_fault,max_score`.
    /// Joints are 1-based; missing values are empty.
    pub fn trials_csv(&self) -> String {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(
            "trial,joint,time_s,overshoot_deg,detected,detect_step,isolated_channel,isolated_joint,isolated_at_fault,max_score\n",
        );
        for (i, (r, iso)) in self.reports.iter().zip(&self.isolated_at_fault).enumerate() {
            let (joint, time, mag) = r
                .truth
                .map(|f| ((f.joint + 1).to_string(), f.time_s.to_string(), f.magnitude.to_string()))
                .unwrap_or_default();
            let max = r.energy_trace.iter().copied().fold(T::neg_infinity(), T::max);
            let _ = writeln!(
                out,
                "{i},{joint},{time},{mag},{},{},{},{},{},{max}",
                r.detected,
                opt(r.detect_step),
                opt(r.isolated_channel),
                opt(r.isolated_joint.map(|j| j + 1)),
                opt(iso.map(|j| j + 1)),
            );
        }
        out
    }
}

//! Experiment configuration: a line-oriented `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error. Every key has a default, so an empty file is a valid configuration.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `experiment` | `pick-place` | `pick-place`, `fault-grid`, `follow-through`, `speed-accuracy`, `capacity` |
//! | `seeds` | `0` | comma-separated list of seeds |
//! | `hidden` | `256` | hidden units of every network |
//! | `activation` | `tanh` | `tanh` or `linear` |
//! | `weight_lr` | `1e-4` | learning rate of every network |
//! | `optimizer` | `adam` | `adam` or `sgd` |
//! | `epochs_per_skill` | `1000` | training sweeps per distinct skill |
//! | `batch_size` | `1` | sequences per update |
//! | `update_mode` | `per-step` | `per-step` or `per-sequence` |
//! | `inference_lr` | `0.01` | hidden-state relaxation step |
//! | `n_iters` | `100` | relaxation iterations |
//! | `warm_start` | `prediction` | `prediction` or `zero` |
//! | `n_reps` | `10` | demonstrations per skill |
//! | `n_skills` | `2` | pick-and-place skills |
//! | `noise` | `0.01` | pick-and-place sensor noise, raw units |
//! | `recall_trials` | `24` | recall trials, split evenly over skills or cues |
//! | `grid_thresholds` | `0.99,0.98,0.97,0.96,0.95` | percentiles swept by the fault grid |
//! | `grid_calibration_trials` | `10` | no-fault calibration trials per skill |
//! | `grid_held_out_trials` | `50` | held-out no-fault trials per skill |
//! | `grid_joints` | `1,2,3,4,5,6,7` | faulted joints, 1-based |
//! | `grid_times` | `1,1.5,…,5.5` | fault onset times, s |
//! | `grid_overshoots` | `-15,-10,-5,0,5,10,15` | lock overshoots, degrees |
//! | `isolation_scope` | `joints` | `joints`, `proprio` or `all` |
//! | `isolation_units` | `normalized` | `normalized` or `raw` |
//! | `ft_noise` | `0.002` | follow-through sensor noise, raw units |
//! | `ft_reps` | `12` | follow-through demonstrations per cue |
//! | `ft_learning_trials` | `1200` | sequence presentations per follow-through model |
//! | `ft_amplitude` | `0.04` | lateral bow of the reach, m |
//! | `speed_iters` | `1,2,5,10,20,50,100` | inference budgets of the speed-accuracy sweep |
//! | `capacity_skills` | `1,2,4` | repertoire sizes of the capacity sweep |
//! | `capacity_demos` | `12` | demonstrations per epoch in the capacity sweep |
//! | `capacity_epochs` | `60` | epochs per capacity run |
//! | `fault` | `none` | `none`, `lock:<joint>:<time_s>:<overshoot_deg>` or `push:<joint>:<time_s>:<offset_rad>:<duration_s>` |
//! | `recall_skill` | `1` | skill cued by the `recall` command, 1-based |
//! | `reactive_trials` | `40` | seeded push trials in the recall command |

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use skillmem::arm::FaultSpec;
use skillmem::monitor::{IsolationScope, IsolationUnits};
use skillmem::optim::Optimizer;
use skillmem::tpc::{Activation, InferenceConfig, TrainConfig, UpdateMode, WarmStart};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("unknown key `{key}` on line {line}")]
    UnknownKey { line: usize, key: String },
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    PickPlace,
    FaultGrid,
    FollowThrough,
    SpeedAccuracy,
    Capacity,
}

impl Experiment {
    pub fn tag(self) -> &'static str {
        match self {
            Experiment::PickPlace => "pick-place",
            Experiment::FaultGrid => "fault-grid",
            Experiment::FollowThrough => "follow-through",
            Experiment::SpeedAccuracy => "speed-accuracy",
            Experiment::Capacity => "capacity",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pick-place" => Ok(Experiment::PickPlace),
            "fault-grid" => Ok(Experiment::FaultGrid),
            "follow-through" => Ok(Experiment::FollowThrough),
            "speed-accuracy" => Ok(Experiment::SpeedAccuracy),
            "capacity" => Ok(Experiment::Capacity),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

/// Every tunable of every experiment, with the published defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub hidden: usize,
    pub activation: Activation,
    pub weight_lr: f64,
    pub optimizer: Optimizer,
    pub epochs_per_skill: usize,
    pub batch_size: usize,
    pub update_mode: UpdateMode,
    pub inference_lr: f64,
    pub n_iters: usize,
    pub warm_start: WarmStart,
    pub n_reps: usize,
    pub n_skills: usize,
    pub noise: f64,
    pub recall_trials: usize,
    pub grid_thresholds: Vec<f64>,
    pub grid_calibration_trials: usize,
    pub grid_held_out_trials: usize,
    pub grid_joints: Vec<usize>,
    pub grid_times: Vec<f64>,
    pub grid_overshoots: Vec<f64>,
    pub isolation_scope: IsolationScope,
    pub isolation_units: IsolationUnits,
    pub ft_noise: f64,
    pub ft_reps: usize,
    pub ft_learning_trials: usize,
    pub ft_amplitude: f64,
    pub speed_iters: Vec<usize>,
    pub capacity_skills: Vec<usize>,
    pub capacity_demos: usize,
    pub capacity_epochs: usize,
    pub fault: Option<FaultSpec<f64>>,
    pub recall_skill: usize,
    pub reactive_trials: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::<f64>::default();
        let inf = InferenceConfig::<f64>::default();
        Self {
            experiment: Experiment::PickPlace,
            seeds: vec![0],
            hidden: 256,
            activation: Activation::Tanh,
            weight_lr: train.weight_lr,
            optimizer: train.optimizer,
            epochs_per_skill: train.epochs_per_skill,
            batch_size: train.batch_size,
            update_mode: train.update_mode,
            inference_lr: inf.inference_lr,
            n_iters: inf.n_iters,
            warm_start: inf.warm_start,
            n_reps: 10,
            n_skills: 2,
            noise: 0.01,
            recall_trials: 24,
            grid_thresholds: vec![0.99, 0.98, 0.97, 0.96, 0.95],
            grid_calibration_trials: 10,
            grid_held_out_trials: 50,
            grid_joints: (1..=7).collect(),
            grid_times: (0..10).map(|i| 1.0 + 0.5 * i as f64).collect(),
            grid_overshoots: vec![-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0],
            isolation_scope: IsolationScope::Joints,
            isolation_units: IsolationUnits::Normalized,
            ft_noise: 0.002,
            ft_reps: 12,
            ft_learning_trials: 1200,
            ft_amplitude: 0.04,
            speed_iters: vec![1, 2, 5, 10, 20, 50, 100],
            capacity_skills: vec![1, 2, 4],
            capacity_demos: 12,
            capacity_epochs: 60,
            fault: None,
            recall_skill: 1,
            reactive_trials: 40,
        }
    }
}

fn scope_tag(s: IsolationScope) -> &'static str {
    match s {
        IsolationScope::Joints => "joints",
        IsolationScope::Proprioceptive => "proprio",
        IsolationScope::All => "all",
    }
}

fn warm_tag(w: WarmStart) -> &'static str {
    match w {
        WarmStart::Prediction => "prediction",
        WarmStart::Zero => "zero",
    }
}

fn list<V: fmt::Display>(v: &[V]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list<V: FromStr>(key: &str, s: &str) -> Result<Vec<V>, ConfigError>
where
    V::Err: fmt::Display,
{
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|e: V::Err| ConfigError::Value { key: key.into(), message: e.to_string() }))
        .collect()
}

fn parse_one<V: FromStr>(key: &str, s: &str) -> Result<V, ConfigError>
where
    V::Err: fmt::Display,
{
    s.parse().map_err(|e: V::Err| ConfigError::Value { key: key.into(), message: e.to_string() })
}

/// `none`, `lock:<joint>:<time>:<deg>` or `push:<joint>:<time>:<rad>:<dur>`; joints 1-based.
pub fn parse_fault(s: &str) -> Result<Option<FaultSpec<f64>>, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let num = |i: usize| -> Result<f64, String> {
        parts.get(i).ok_or_else(|| format!("missing field {i} in `{s}`"))?.parse().map_err(|e| format!("{e}"))
    };
    let joint = || -> Result<usize, String> {
        let j: usize = parts.get(1).ok_or("missing joint")?.parse().map_err(|e| format!("{e}"))?;
        j.checked_sub(1).ok_or_else(|| "joints are numbered from 1".to_string())
    };
    match parts[0] {
        "none" if parts.len() == 1 => Ok(None),
        "lock" if parts.len() == 4 => Ok(Some(FaultSpec::lock(joint()?, num(2)?, num(3)?))),
        "push" if parts.len() == 5 => Ok(Some(FaultSpec::push(joint()?, num(2)?, num(3)?, num(4)?))),
        _ => Err(format!("malformed fault `{s}`")),
    }
}

pub fn fault_text(f: Option<&FaultSpec<f64>>) -> String {
    match f {
        None => "none".into(),
        Some(f) => match f.kind {
            skillmem::arm::FaultKind::JointLock => format!("lock:{}:{}:{}", f.joint + 1, f.time_s, f.magnitude),
            skillmem::arm::FaultKind::TransientPush => {
                format!("push:{}:{}:{}:{}", f.joint + 1, f.time_s, f.magnitude, f.duration_s)
            }
        },
    }
}

impl ExperimentConfig {
    /// Reduced counts for quick runs: 2 seeds, 100 learning trials, 5 epochs per skill.
    pub fn smoke(mut self) -> Self {
        self.seeds.truncate(2);
        while self.seeds.len() < 2 {
            let next = self.seeds.last().map_or(0, |s| s + 1);
            self.seeds.push(next);
        }
        self.epochs_per_skill = 5;
        self.ft_learning_trials = 100;
        self.recall_trials = 4;
        self.grid_times = vec![2.0, 4.0];
        self.grid_overshoots = vec![-10.0, 0.0, 10.0];
        self.grid_held_out_trials = 10;
        self.capacity_epochs = 10;
        self.reactive_trials = 4;
        self
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig<f64> {
        TrainConfig {
            weight_lr: self.weight_lr,
            epochs_per_skill: self.epochs_per_skill,
            batch_size: self.batch_size,
            seed,
            update_mode: self.update_mode,
            optimizer: self.optimizer,
        }
    }

    pub fn inference_config(&self) -> InferenceConfig<f64> {
        InferenceConfig { inference_lr: self.inference_lr, n_iters: self.n_iters, warm_start: self.warm_start }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: &str| Err(ConfigError::Value { key: key.into(), message: message.into() });
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed is required");
        }
        if self.hidden == 0 {
            return bad("hidden", "must be positive");
        }
        if self.recall_trials == 0 {
            return bad("recall_trials", "must be positive");
        }
        if self.grid_thresholds.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return bad("grid_thresholds", "percentiles must lie in (0, 1]");
        }
        if self.grid_joints.iter().any(|&j| j == 0 || j > 7) {
            return bad("grid_joints", "joints are numbered 1..=7");
        }
        if self.n_skills == 0 || self.n_skills > skillmem::data::demo::PICK_PLACE_SKILLS {
            return bad("n_skills", "must lie in 1..=4");
        }
        if self.recall_skill == 0 || self.recall_skill > self.n_skills {
            return bad("recall_skill", "must name one of the trained skills");
        }
        if self.capacity_skills.iter().any(|&k| k == 0 || k > skillmem::data::demo::PICK_PLACE_SKILLS) {
            return bad("capacity_skills", "must lie in 1..=4");
        }
        self.train_config(0).validate().map_err(|e| ConfigError::Value { key: "weight_lr".into(), message: e.to_string() })?;
        self.inference_config()
            .validate()
            .map_err(|e| ConfigError::Value { key: "inference_lr".into(), message: e.to_string() })?;
        Ok(())
    }

    /// Applies `key = value` lines on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::default().apply(text)
    }

    /// Defaults with the seed count each experiment reports over.
    pub fn for_experiment(experiment: Experiment) -> Self {
        let seeds = match experiment {
            Experiment::FollowThrough | Experiment::SpeedAccuracy => (0..6).collect(),
            Experiment::Capacity => (0..3).collect(),
            Experiment::PickPlace | Experiment::FaultGrid => vec![0],
        };
        Self { experiment, seeds, ..Self::default() }
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply(self, text: &str) -> Result<Self, ConfigError> {
        let mut cfg = self;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Line { line: i + 1, message: format!("expected `key = value`, found `{line}`") })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                other => other,
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        Self::default().load_onto(path)
    }

    pub fn load_onto(self, path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        self.apply(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let val = |m: String| ConfigError::Value { key: key.into(), message: m };
        match key {
            "experiment" => self.experiment = v.parse().map_err(val)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "hidden" => self.hidden = parse_one(key, v)?,
            "activation" => self.activation = v.parse().map_err(val)?,
            "weight_lr" => self.weight_lr = parse_one(key, v)?,
            "optimizer" => self.optimizer = v.parse().map_err(val)?,
            "epochs_per_skill" => self.epochs_per_skill = parse_one(key, v)?,
            "batch_size" => self.batch_size = parse_one(key, v)?,
            "update_mode" => self.update_mode = v.parse().map_err(val)?,
            "inference_lr" => self.inference_lr = parse_one(key, v)?,
            "n_iters" => self.n_iters = parse_one(key, v)?,
            "warm_start" => {
                self.warm_start = match v {
                    "prediction" => WarmStart::Prediction,
                    "zero" => WarmStart::Zero,
                    other => return Err(val(format!("unknown warm start `{other}`"))),
                }
            }
            "n_reps" => self.n_reps = parse_one(key, v)?,
            "n_skills" => self.n_skills = parse_one(key, v)?,
            "noise" => self.noise = parse_one(key, v)?,
            "recall_trials" => self.recall_trials = parse_one(key, v)?,
            "grid_thresholds" => self.grid_thresholds = parse_list(key, v)?,
            "grid_calibration_trials" => self.grid_calibration_trials = parse_one(key, v)?,
            "grid_held_out_trials" => self.grid_held_out_trials = parse_one(key, v)?,
            "grid_joints" => self.grid_joints = parse_list(key, v)?,
            "grid_times" => self.grid_times = parse_list(key, v)?,
            "grid_overshoots" => self.grid_overshoots = parse_list(key, v)?,
            "isolation_scope" => {
                self.isolation_scope = match v {
                    "joints" => IsolationScope::Joints,
                    "proprio" => IsolationScope::Proprioceptive,
                    "all" => IsolationScope::All,
                    other => return Err(val(format!("unknown isolation scope `{other}`"))),
                }
            }
            "isolation_units" => self.isolation_units = v.parse().map_err(val)?,
            "ft_noise" => self.ft_noise = parse_one(key, v)?,
            "ft_reps" => self.ft_reps = parse_one(key, v)?,
            "ft_learning_trials" => self.ft_learning_trials = parse_one(key, v)?,
            "ft_amplitude" => self.ft_amplitude = parse_one(key, v)?,
            "speed_iters" => self.speed_iters = parse_list(key, v)?,
            "capacity_skills" => self.capacity_skills = parse_list(key, v)?,
            "capacity_demos" => self.capacity_demos = parse_one(key, v)?,
            "capacity_epochs" => self.capacity_epochs = parse_one(key, v)?,
            "fault" => self.fault = parse_fault(v).map_err(val)?,
            "recall_skill" => self.recall_skill = parse_one(key, v)?,
            "reactive_trials" => self.reactive_trials = parse_one(key, v)?,
            other => return Err(ConfigError::UnknownKey { line: 0, key: other.into() }),
        }
        Ok(())
    }

    /// Canonical text form: every key in a fixed order. Parsing it yields an
    /// identical configuration.
    pub fn to_text(&self) -> String {
        let pairs: Vec<(&str, String)> = vec![
            ("experiment", self.experiment.to_string()),
            ("seeds", list(&self.seeds)),
            ("hidden", self.hidden.to_string()),
            ("activation", self.activation.to_string()),
            ("weight_lr", self.weight_lr.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("epochs_per_skill", self.epochs_per_skill.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("update_mode", self.update_mode.tag().into()),
            ("inference_lr", self.inference_lr.to_string()),
            ("n_iters", self.n_iters.to_string()),
            ("warm_start", warm_tag(self.warm_start).into()),
            ("n_reps", self.n_reps.to_string()),
            ("n_skills", self.n_skills.to_string()),
            ("noise", self.noise.to_string()),
            ("recall_trials", self.recall_trials.to_string()),
            ("grid_thresholds", list(&self.grid_thresholds)),
            ("grid_calibration_trials", self.grid_calibration_trials.to_string()),
            ("grid_held_out_trials", self.grid_held_out_trials.to_string()),
            ("grid_joints", list(&self.grid_joints)),
            ("grid_times", list(&self.grid_times)),
            ("grid_overshoots", list(&self.grid_overshoots)),
            ("isolation_scope", scope_tag(self.isolation_scope).into()),
            ("isolation_units", self.isolation_units.tag().into()),
            ("ft_noise", self.ft_noise.to_string()),
            ("ft_reps", self.ft_reps.to_string()),
            ("ft_learning_trials", self.ft_learning_trials.to_string()),
            ("ft_amplitude", self.ft_amplitude.to_string()),
            ("speed_iters", list(&self.speed_iters)),
            ("capacity_skills", list(&self.capacity_skills)),
            ("capacity_demos", self.capacity_demos.to_string()),
            ("capacity_epochs", self.capacity_epochs.to_string()),
            ("fault", fault_text(self.fault.as_ref())),
            ("recall_skill", self.recall_skill.to_string()),
            ("reactive_trials", self.reactive_trials.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

//! Synthetic demonstrations standing in for teleoperated recordings.
//!
//! End-effector waypoints are turned into joint trajectories with damped
//! least-squares IK, each step seeded from the previous solution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{joint_label, Channel, ChannelKind, DataError, SensorimotorSequence};
use crate::arm::{ArmModel, IkParams, KinematicsError};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DemoError {
    #[error("IK failed for skill `{skill}` at step {step}: {source}")]
    Ik { skill: String, step: usize, source: KinematicsError },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid generator parameters: {0}")]
    Invalid(String),
}

/// A skill as a list of end-effector targets, one per high-rate step.
#[derive(Debug, Clone, PartialEq)]
pub struct SkillPlan<T> {
    pub id: String,
    pub ee: Vec<[T; 2]>,
    /// Gripper closed (`true`) per step.
    pub gripper: Vec<bool>,
    /// Joint configuration the first IK solve starts from.
    pub seed_pose: Vec<T>,
    /// Posture bias per step, one angle per joint in radians, imposed before
    /// each IK solve. Empty for none.
    pub posture: Vec<Vec<T>>,
}

/// Parameters of the pick-and-place repertoire.
#[derive(Debug, Clone, PartialEq)]
pub struct PickPlaceConfig<T> {
    pub n_reps: usize,
    pub n_skills: usize,
    /// Standard deviation of the Gaussian noise on joint, end-effector and
    /// force channels, raw units.
    pub noise: T,
    pub seed: u64,
    /// Adds a one-hot skill cue in the two cue channels. Off by default: the
    /// skills are told apart by their start pose alone.
    pub cue: bool,
    pub grip_force: T,
    pub ik: IkParams<T>,
}

impl<T: Real> Default for PickPlaceConfig<T> {
    fn default() -> Self {
        Self {
            n_reps: 10,
            n_skills: 2,
            noise: T::lit(0.01),
            seed: 0,
            cue: false,
            grip_force: T::lit(5.0),
            ik: IkParams { tol_m: T::lit(1e-6), ..IkParams::default() },
        }
    }
}

/// Steps per pick-and-place demonstration.
pub const PICK_PLACE_STEPS: usize = 15;
/// Rate of the skill-level observations, Hz.
pub const PICK_PLACE_RATE_HZ: f64 = 2.0;
/// Number of distinct pick-and-place skills available.
pub const PICK_PLACE_SKILLS: usize = 4;

/// Channel layout of the pick-and-place task (D = 14 for a 7-joint arm):
/// joint angles, end-effector x/y, gripper toggle, two finger forces, two cue channels.
pub fn pick_place_channels(joints: usize) -> Vec<Channel> {
    let mut ch: Vec<Channel> = (0..joints).map(|k| Channel::new(joint_label(k), ChannelKind::Proprioceptive)).collect();
    ch.push(Channel::new("ee_x", ChannelKind::Proprioceptive));
    ch.push(Channel::new("ee_y", ChannelKind::Proprioceptive));
    ch.push(Channel::new("gripper", ChannelKind::Exteroceptive));
    ch.push(Channel::new("force_l", ChannelKind::Exteroceptive));
    ch.push(Channel::new("force_r", ChannelKind::Exteroceptive));
    ch.push(Channel::new("cue_a", ChannelKind::Cue));
    ch.push(Channel::new("cue_b", ChannelKind::Cue));
    ch
}

fn lerp<T: Real>(a: [T; 2], b: [T; 2], s: T) -> [T; 2] {
    [a[0] + (b[0] - a[0]) * s, a[1] + (b[1] - a[1]) * s]
}

/// Keyframes `(step, point)` expanded to one point per step by linear interpolation.
fn expand<T: Real>(keys: &[(usize, [f64; 2])], steps: usize) -> Vec<[T; 2]> {
    expand_with(keys, steps, |p| p)
}

fn expand_with<T: Real, K: Copy>(keys: &[(usize, K)], steps: usize, to_pt: impl Fn(K) -> [f64; 2]) -> Vec<[T; 2]> {
    let pt = |k: K| {
        let p = to_pt(k);
        [T::lit(p[0]), T::lit(p[1])]
    };
    (0..steps)
        .map(|t| {
            let k = keys.iter().rposition(|&(s, _)| s <= t).unwrap_or(0);
            match keys.get(k + 1) {
                Some(&(s1, p1)) => {
                    let (s0, p0) = keys[k];
                    let frac = T::lit((t - s0) as f64 / (s1 - s0) as f64);
                    lerp(pt(p0), pt(p1), frac)
                }
                None => pt(keys[k].1),
            }
        })
        .collect()
}

/// The built-in pick-and-place skills: each starts from its own pose, picks an
/// object at step 6 (3 s), and releases it at step 13.
pub fn pick_place_plan<T: Real>(skill: usize) -> SkillPlan<T> {
    // start, above pick, pick, lift, above place, place, retreat
    let (start, pick, place, seed): ([f64; 2], [f64; 2], [f64; 2], [f64; 7]) = match skill {
        0 => ([0.55, 0.45], [0.80, 0.05], [0.40, 0.10], [0.9, -0.3, -0.3, -0.2, -0.2, -0.1, -0.1]),
        1 => ([0.25, 0.70], [0.45, -0.05], [0.85, 0.25], [1.4, -0.2, -0.3, -0.3, -0.2, -0.2, -0.1]),
        2 => ([0.70, -0.30], [0.55, 0.30], [0.30, -0.20], [0.2, -0.5, 0.2, 0.3, 0.2, 0.1, 0.1]),
        3 => ([0.20, -0.60], [0.65, -0.25], [0.85, 0.05], [-0.6, 0.3, 0.4, 0.2, 0.2, 0.1, 0.1]),
        _ => panic!("pick-and-place skill index {skill} out of range"),
    };
    // wrist turns into the grasp and back out for the placement; the elbow
    // folds while carrying
    let turn = if skill % 2 == 0 { 1.0 } else { -1.0 };
    let wrist_keys = [(0, 0.0), (3, 0.5), (6, 0.8), (8, 0.4), (11, -0.4), (13, -0.7), (14, -0.3)];
    let elbow_keys = [(0, 0.0), (3, -0.3), (6, -0.5), (9, 0.3), (11, 0.6), (13, 0.4), (14, 0.0)];
    let above = |p: [f64; 2]| [p[0], p[1] + 0.12];
    let keys = [
        (0, start),
        (3, above(pick)),
        (5, [pick[0], pick[1] + 0.02]),
        (6, pick),
        (8, above(pick)),
        (11, above(place)),
        (12, place),
        (13, place),
        (14, above(place)),
    ];
    let ee = expand(&keys, PICK_PLACE_STEPS);
    let gripper = (0..PICK_PLACE_STEPS).map(|t| (6..13).contains(&t)).collect();
    let wrist: Vec<[T; 2]> = expand_with(&wrist_keys, PICK_PLACE_STEPS, |w| [turn * w, 0.0]);
    let elbow: Vec<[T; 2]> = expand_with(&elbow_keys, PICK_PLACE_STEPS, |e| [turn * e, 0.0]);
    let posture = wrist
        .iter()
        .zip(&elbow)
        .map(|(w, e)| vec![T::zero(), T::zero(), e[0], e[0], w[0], w[0], w[0]])
        .collect();
    SkillPlan { id: skill_name(skill), ee, gripper, seed_pose: seed.map(T::lit).to_vec(), posture }
}

pub fn skill_name(skill: usize) -> String {
    format!("skill{}", skill + 1)
}

/// Solves IK along an end-effector plan; returns one joint vector per step.
///
/// Each solve starts from the previous solution. When `posture` is
/// non-empty, the change in posture bias since the previous step is first
/// added to the joints, so the minimum-norm IK correction leaves most of the
/// posture change in place.
pub fn plan_joints<T: Real>(
    arm: &ArmModel<T>,
    id: &str,
    ee: &[[T; 2]],
    seed_pose: &[T],
    posture: &[Vec<T>],
    ik: &IkParams<T>,
) -> Result<Vec<Vec<T>>, DemoError> {
    let mut seed: Vec<T> = seed_pose.iter().copied().chain(std::iter::repeat(T::zero())).take(arm.joints()).collect();
    let mut out = Vec::with_capacity(ee.len());
    for (step, &target) in ee.iter().enumerate() {
        if let Some(bias) = posture.get(step) {
            for (k, (q, &b)) in seed.iter_mut().zip(bias).enumerate() {
                let prev = if step == 0 { T::zero() } else { posture[step - 1][k] };
                *q = *q + (b - prev);
            }
        }
        let q = arm
            .ik_dls(target, &seed, ik)
            .map_err(|source| DemoError::Ik { skill: id.to_string(), step, source })?;
        seed = q.clone();
        out.push(q);
    }
    Ok(out)
}

/// Noise-free raw observations of a pick-and-place skill.
pub fn pick_place_nominal<T: Real>(
    arm: &ArmModel<T>,
    skill: usize,
    cfg: &PickPlaceConfig<T>,
) -> Result<SensorimotorSequence<T>, DemoError> {
    let plan = pick_place_plan::<T>(skill);
    let qs = plan_joints(arm, &plan.id, &plan.ee, &plan.seed_pose, &plan.posture, &cfg.ik)?;
    let j = arm.joints();
    let channels = pick_place_channels(j);
    let d = channels.len();
    let mut data = Matrix::zeros(PICK_PLACE_STEPS, d);
    for t in 0..PICK_PLACE_STEPS {
        let row = data.row_mut(t);
        row[..j].copy_from_slice(&qs[t]);
        let p = arm.forward_kinematics(&qs[t]);
        row[j] = p[0];
        row[j + 1] = p[1];
        let closed = plan.gripper[t];
        row[j + 2] = if closed { T::one() } else { T::zero() };
        let f = if closed { cfg.grip_force } else { T::zero() };
        row[j + 3] = f;
        row[j + 4] = f;
        if cfg.cue {
            row[j + 5 + (skill % 2)] = T::one();
        }
    }
    Ok(SensorimotorSequence::new(data, channels, plan.id, "nominal", T::lit(PICK_PLACE_RATE_HZ))?)
}

/// Adds seeded Gaussian noise to every channel that is neither a cue nor the gripper toggle.
pub fn add_noise<T: Real>(seq: &mut SensorimotorSequence<T>, std: T, rng: &mut ChaCha8Rng) {
    if !(std > T::zero()) {
        return;
    }
    let normal = Normal::new(0.0, std.as_f64()).expect("finite noise std");
    let noisy: Vec<bool> =
        seq.channels().iter().map(|c| c.kind != ChannelKind::Cue && c.label != "gripper").collect();
    let data = seq.data_mut();
    for t in 0..data.rows() {
        for (v, &n) in data.row_mut(t).iter_mut().zip(&noisy) {
            if n {
                *v = *v + T::lit(normal.sample(rng));
            }
        }
    }
}

/// `n_reps` noisy repetitions of each of the first `n_skills` pick-and-place skills.
pub fn gen_pick_place<T: Real>(
    arm: &ArmModel<T>,
    cfg: &PickPlaceConfig<T>,
) -> Result<Vec<SensorimotorSequence<T>>, DemoError> {
    if cfg.n_skills == 0 || cfg.n_skills > PICK_PLACE_SKILLS {
        return Err(DemoError::Invalid(format!("n_skills must lie in 1..={PICK_PLACE_SKILLS}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_reps * cfg.n_skills);
    for skill in 0..cfg.n_skills {
        let nominal = pick_place_nominal(arm, skill, cfg)?;
        for rep in 0..cfg.n_reps {
            let mut seq = nominal.clone();
            seq.rep_id = format!("rep{}", rep + 1);
            add_noise(&mut seq, cfg.noise, &mut rng);
            out.push(seq);
        }
    }
    Ok(out)
}

/// Follow-through experiment conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FollowThroughCondition {
    /// Cue visible before movement; the follow-through is planned but not executed.
    PlanOnly,
    /// Cue visible before movement; the follow-through is executed.
    PlanAndExecute,
    /// Cue appears only once the movement has started; the follow-through is executed.
    ExecuteOnly,
}

impl FollowThroughCondition {
    pub const ALL: [FollowThroughCondition; 3] = [Self::PlanOnly, Self::PlanAndExecute, Self::ExecuteOnly];

    pub fn cue_onset_step(self) -> usize {
        match self {
            Self::PlanOnly | Self::PlanAndExecute => 0,
            Self::ExecuteOnly => FT_MOVEMENT_ONSET,
        }
    }

    pub fn executes_followthrough(self) -> bool {
        !matches!(self, Self::PlanOnly)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Self::PlanOnly => "plan-only",
            Self::PlanAndExecute => "plan-and-execute",
            Self::ExecuteOnly => "execute-only",
        }
    }
}

impl std::str::FromStr for FollowThroughCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|c| c.tag() == s).ok_or_else(|| format!("unknown condition `{s}`"))
    }
}

/// Direction of the (hypothetical) force field the reach compensates for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cue {
    Cw,
    Ccw,
}

impl Cue {
    pub const BOTH: [Cue; 2] = [Cue::Cw, Cue::Ccw];

    /// Side of the S→T line the compensating reach bows toward.
    pub fn sign(self) -> f64 {
        match self {
            Cue::Cw => 1.0,
            Cue::Ccw => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Cue::Cw => 0,
            Cue::Ccw => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Cue::Cw => "cw",
            Cue::Ccw => "ccw",
        }
    }
}

/// Geometry of the follow-through reach, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowThroughGeometry<T> {
    pub start: [T; 2],
    pub target: [T; 2],
    /// Secondary target for the CW cue; the CCW one is mirrored across the S→T line.
    pub secondary_cw: [T; 2],
    /// Peak lateral offset of the curved reach.
    pub amplitude: T,
}

impl<T: Real> Default for FollowThroughGeometry<T> {
    fn default() -> Self {
        Self {
            start: [T::lit(0.70), T::lit(-0.15)],
            target: [T::lit(0.70), T::lit(0.15)],
            secondary_cw: [T::lit(0.60), T::lit(0.27)],
            amplitude: T::lit(0.04),
        }
    }
}

impl<T: Real> FollowThroughGeometry<T> {
    /// Unit normal of the S→T line; positive lateral offsets lie on this side.
    pub fn normal(&self) -> [T; 2] {
        let (dx, dy) = (self.target[0] - self.start[0], self.target[1] - self.start[1]);
        let n = (dx * dx + dy * dy).sqrt();
        [-dy / n, dx / n]
    }

    pub fn secondary(&self, cue: Cue) -> [T; 2] {
        match cue {
            Cue::Cw => self.secondary_cw,
            Cue::Ccw => {
                // mirror across the S→T line
                let n = self.normal();
                let rel = [self.secondary_cw[0] - self.start[0], self.secondary_cw[1] - self.start[1]];
                let off = rel[0] * n[0] + rel[1] * n[1];
                let two = T::lit(2.0);
                [self.secondary_cw[0] - two * off * n[0], self.secondary_cw[1] - two * off * n[1]]
            }
        }
    }
}

/// Step at which the reach begins; the cue of the execute-only condition appears here.
pub const FT_MOVEMENT_ONSET: usize = 1;
/// Reach segment S→T covers steps `0..=FT_REACH_END`.
pub const FT_REACH_END: usize = 8;
/// Total steps of a follow-through sequence.
pub const FT_STEPS: usize = 13;
pub const FT_RATE_HZ: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FollowThroughConfig<T> {
    pub geometry: FollowThroughGeometry<T>,
    pub noise: T,
    pub ik: IkParams<T>,
}

impl<T: Real> Default for FollowThroughConfig<T> {
    fn default() -> Self {
        Self {
            geometry: FollowThroughGeometry::default(),
            noise: T::lit(0.002),
            ik: IkParams { tol_m: T::lit(1e-6), ..IkParams::default() },
        }
    }
}

/// Channel layout of the follow-through task (D = 11 for 7 joints):
/// joint angles, end-effector x/y, one-hot visual cue.
pub fn followthrough_channels(joints: usize) -> Vec<Channel> {
    let mut ch: Vec<Channel> = (0..joints).map(|k| Channel::new(joint_label(k), ChannelKind::Proprioceptive)).collect();
    ch.push(Channel::new("ee_x", ChannelKind::Proprioceptive));
    ch.push(Channel::new("ee_y", ChannelKind::Proprioceptive));
    ch.push(Channel::new("cue_cw", ChannelKind::Cue));
    ch.push(Channel::new("cue_ccw", ChannelKind::Cue));
    ch
}

/// End-effector plan: a reach S→T bowed sideways by `4A·s(1−s)` (sign set by
/// the cue) followed by either a straight move to the secondary target or a hold at T.
pub fn followthrough_path<T: Real>(
    geom: &FollowThroughGeometry<T>,
    cond: FollowThroughCondition,
    cue: Cue,
) -> Vec<[T; 2]> {
    let n = geom.normal();
    let sign = T::lit(cue.sign());
    let four = T::lit(4.0);
    let mut path = Vec::with_capacity(FT_STEPS);
    for i in 0..=FT_REACH_END {
        let s = T::lit(i as f64 / FT_REACH_END as f64);
        let base = lerp(geom.start, geom.target, s);
        let off = sign * four * geom.amplitude * s * (T::one() - s);
        path.push([base[0] + off * n[0], base[1] + off * n[1]]);
    }
    let tail = FT_STEPS - FT_REACH_END - 1;
    let st = geom.secondary(cue);
    for i in 1..=tail {
        let p = if cond.executes_followthrough() {
            lerp(geom.target, st, T::lit(i as f64 / tail as f64))
        } else {
            geom.target
        };
        path.push(p);
    }
    path
}

/// Noise-free follow-through demonstration for one condition and cue.
pub fn followthrough_nominal<T: Real>(
    arm: &ArmModel<T>,
    cond: FollowThroughCondition,
    cue: Cue,
    cfg: &FollowThroughConfig<T>,
) -> Result<SensorimotorSequence<T>, DemoError> {
    let path = followthrough_path(&cfg.geometry, cond, cue);
    let id = format!("{}-{}", cond.tag(), cue.tag());
    let seed = [0.2, -0.4, 0.5, 0.4, 0.3, 0.2, 0.1].map(T::lit);
    let qs = plan_joints(arm, &id, &path, &seed, &[], &cfg.ik)?;
    let j = arm.joints();
    let channels = followthrough_channels(j);
    let mut data = Matrix::zeros(FT_STEPS, channels.len());
    for (t, q) in qs.iter().enumerate() {
        let row = data.row_mut(t);
        row[..j].copy_from_slice(q);
        let p = arm.forward_kinematics(q);
        row[j] = p[0];
        row[j + 1] = p[1];
        if t >= cond.cue_onset_step() {
            row[j + 2 + cue.index()] = T::one();
        }
    }
    Ok(SensorimotorSequence::new(data, channels, cue.tag(), "nominal", T::lit(FT_RATE_HZ))?)
}

/// `n_reps` noisy demonstrations of one condition and cue.
pub fn gen_followthrough<T: Real>(
    arm: &ArmModel<T>,
    cond: FollowThroughCondition,
    cue: Cue,
    n_reps: usize,
    seed: u64,
    cfg: &FollowThroughConfig<T>,
) -> Result<Vec<SensorimotorSequence<T>>, DemoError> {
    let nominal = followthrough_nominal(arm, cond, cue, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_reps)
        .map(|rep| {
            let mut seq = nominal.clone();
            seq.rep_id = format!("rep{}", rep + 1);
            add_noise(&mut seq, cfg.noise, &mut rng);
            seq
        })
        .collect())
}

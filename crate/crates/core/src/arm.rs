//! Redundant planar arm: forward kinematics, damped-least-squares IK, a
//! rate-limited joint position servo, and fault injection.
//!
//! A trial runs the low-level servo at `low_rate` ticks per second against
//! joint targets that change at `high_rate`, holding each target for the
//! whole high-rate period. Observation row `μ` is sampled at the end of the
//! period in which target `μ` was held.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::data::{ChannelKind, SensorimotorSequence};
use crate::linalg::Matrix;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("target at distance {distance:.4} m lies outside the reachable annulus [{inner:.4}, {outer:.4}]")]
    Unreachable { distance: f64, inner: f64, outer: f64 },
    #[error("IK did not converge: final residual {residual:.3e} m after {iterations} iterations")]
    IkFailure { residual: f64, iterations: usize },
    #[error("joint index {joint} out of range for a {joints}-joint arm")]
    JointOutOfRange { joint: usize, joints: usize },
    #[error("dimension mismatch: expected {expected} joints, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid arm or controller parameters: {0}")]
    Invalid(String),
    #[error("desired sequence has no joint channels")]
    NoJointChannels,
}

/// Serial planar chain with revolute joints.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel<T> {
    link_lengths: Vec<T>,
    joint_limits: Vec<(T, T)>,
}

impl<T: Real> ArmModel<T> {
    pub fn new(link_lengths: Vec<T>, joint_limits: Vec<(T, T)>) -> Result<Self, KinematicsError> {
        if link_lengths.is_empty() {
            return Err(KinematicsError::Invalid("arm needs at least one link".into()));
        }
        if link_lengths.len() != joint_limits.len() {
            return Err(KinematicsError::Dimension { expected: link_lengths.len(), found: joint_limits.len() });
        }
        if link_lengths.iter().any(|&l| !(l > T::zero())) {
            return Err(KinematicsError::Invalid("link lengths must be positive".into()));
        }
        if joint_limits.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(KinematicsError::Invalid("joint limits need lo < hi".into()));
        }
        Ok(Self { link_lengths, joint_limits })
    }

    /// Seven links from 0.30 m down to 0.05 m (1.13 m total), limits ±2.8 rad.
    pub fn seven_link() -> Self {
        let lengths = [0.30, 0.25, 0.20, 0.15, 0.10, 0.08, 0.05].map(T::lit).to_vec();
        let limits = vec![(T::lit(-2.8), T::lit(2.8)); 7];
        Self::new(lengths, limits).expect("valid default arm")
    }

    /// Equal unit-free links with wide limits; handy for analytic checks.
    pub fn uniform(joints: usize, length: T) -> Self {
        let pi = T::lit(std::f64::consts::PI);
        Self::new(vec![length; joints], vec![(-pi, pi); joints]).expect("valid uniform arm")
    }

    pub fn joints(&self) -> usize {
        self.link_lengths.len()
    }

    pub fn link_lengths(&self) -> &[T] {
        &self.link_lengths
    }

    pub fn joint_limits(&self) -> &[(T, T)] {
        &self.joint_limits
    }

    pub fn reach(&self) -> T {
        self.link_lengths.iter().copied().sum()
    }

    /// Inner radius of the reachable annulus ignoring joint limits.
    pub fn inner_reach(&self) -> T {
        let longest = self.link_lengths.iter().copied().fold(T::zero(), T::max);
        (longest - (self.reach() - longest)).max(T::zero())
    }

    pub fn clamp(&self, q: &mut [T]) {
        for (qi, &(lo, hi)) in q.iter_mut().zip(&self.joint_limits) {
            *qi = qi.max(lo).min(hi);
        }
    }

    pub fn within_limits(&self, q: &[T]) -> bool {
        q.iter().zip(&self.joint_limits).all(|(&qi, &(lo, hi))| qi >= lo && qi <= hi)
    }

    fn check_len(&self, q: &[T]) -> Result<(), KinematicsError> {
        if q.len() != self.joints() {
            return Err(KinematicsError::Dimension { expected: self.joints(), found: q.len() });
        }
        Ok(())
    }

    /// End-effector position `Σ_k L_k (cos θ_k, sin θ_k)` with `θ_k = Σ_{i≤k} q_i`.
    pub fn forward_kinematics(&self, q: &[T]) -> [T; 2] {
        debug_assert_eq!(q.len(), self.joints());
        let mut theta = T::zero();
        let (mut x, mut y) = (T::zero(), T::zero());
        for (&qi, &l) in q.iter().zip(&self.link_lengths) {
            theta = theta + qi;
            x = x + l * theta.cos();
            y = y + l * theta.sin();
        }
        [x, y]
    }

    /// Position Jacobian, 2 x J.
    pub fn jacobian(&self, q: &[T]) -> Matrix<T> {
        let j = self.joints();
        let mut thetas = Vec::with_capacity(j);
        let mut theta = T::zero();
        for &qi in q {
            theta = theta + qi;
            thetas.push(theta);
        }
        let mut jac = Matrix::zeros(2, j);
        let (mut sx, mut sy) = (T::zero(), T::zero());
        for k in (0..j).rev() {
            sx = sx + self.link_lengths[k] * thetas[k].cos();
            sy = sy + self.link_lengths[k] * thetas[k].sin();
            jac[(0, k)] = -sy;
            jac[(1, k)] = sx;
        }
        jac
    }

    /// Damped least squares: `q ← q + Jᵀ(JJᵀ + λ²I)⁻¹ e`, clamped to the joint
    /// limits after every step, until `‖e‖ < tol_m`.
    pub fn ik_dls(&self, target: [T; 2], q_seed: &[T], params: &IkParams<T>) -> Result<Vec<T>, KinematicsError> {
        self.check_len(q_seed)?;
        let dist = (target[0] * target[0] + target[1] * target[1]).sqrt();
        if dist > self.reach() || dist < self.inner_reach() {
            return Err(KinematicsError::Unreachable {
                distance: dist.as_f64(),
                inner: self.inner_reach().as_f64(),
                outer: self.reach().as_f64(),
            });
        }
        let mut q = q_seed.to_vec();
        self.clamp(&mut q);
        let lambda2 = params.damping * params.damping;
        let mut residual = T::infinity();
        for _ in 0..=params.max_iters {
            let p = self.forward_kinematics(&q);
            let e = [target[0] - p[0], target[1] - p[1]];
            residual = (e[0] * e[0] + e[1] * e[1]).sqrt();
            if residual < params.tol_m {
                return Ok(q);
            }
            let jac = self.jacobian(&q);
            let (r0, r1) = (jac.row(0), jac.row(1));
            let a = crate::linalg::dot(r0, r0) + lambda2;
            let b = crate::linalg::dot(r0, r1);
            let d = crate::linalg::dot(r1, r1) + lambda2;
            let det = a * d - b * b;
            // (JJᵀ + λ²I)⁻¹ e for the symmetric 2x2 system
            let w0 = (d * e[0] - b * e[1]) / det;
            let w1 = (a * e[1] - b * e[0]) / det;
            for (k, qk) in q.iter_mut().enumerate() {
                *qk = *qk + r0[k] * w0 + r1[k] * w1;
            }
            self.clamp(&mut q);
        }
        Err(KinematicsError::IkFailure { residual: residual.as_f64(), iterations: params.max_iters })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IkParams<T> {
    pub damping: T,
    pub max_iters: usize,
    pub tol_m: T,
}

impl<T: Real> Default for IkParams<T> {
    fn default() -> Self {
        Self { damping: T::lit(0.1), max_iters: 200, tol_m: T::lit(1e-4) }
    }
}

/// Two-rate position control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig<T> {
    /// Rate of the skill-level targets, Hz.
    pub high_rate: u32,
    /// Servo tick rate, Hz.
    pub low_rate: u32,
    /// Joint speed limit, rad/s.
    pub max_joint_speed: T,
    /// Proportional gain applied to the joint error each tick.
    pub gain: T,
}

impl<T: Real> Default for ControllerConfig<T> {
    fn default() -> Self {
        Self { high_rate: 2, low_rate: 40, max_joint_speed: T::lit(2.0), gain: T::one() }
    }
}

impl<T: Real> ControllerConfig<T> {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if self.high_rate == 0 || self.low_rate % self.high_rate != 0 {
            return Err(KinematicsError::Invalid(format!(
                "low rate {} Hz must be a positive multiple of high rate {} Hz",
                self.low_rate, self.high_rate
            )));
        }
        if !(self.max_joint_speed > T::zero()) {
            return Err(KinematicsError::Invalid("max_joint_speed must be positive".into()));
        }
        if !(self.gain > T::zero()) || self.gain > T::one() {
            return Err(KinematicsError::Invalid("gain must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// Servo ticks per skill-level step.
    pub fn ticks_per_step(&self) -> usize {
        (self.low_rate / self.high_rate) as usize
    }

    /// Largest joint travel in one tick, rad.
    pub fn tick_budget(&self) -> T {
        self.max_joint_speed / T::from_u32(self.low_rate).expect("rate")
    }
}

/// One servo tick: every joint moves toward its target by `gain·Δ`, clipped
/// to the per-tick budget, and snaps onto the target once within one tick of travel.
pub fn servo_step<T: Real>(q_actual: &[T], q_desired: &[T], cfg: &ControllerConfig<T>) -> Vec<T> {
    let budget = cfg.tick_budget();
    q_actual
        .iter()
        .zip(q_desired)
        .map(|(&qa, &qd)| {
            let delta = qd - qa;
            if delta.abs() <= budget {
                qd
            } else {
                let step = cfg.gain * delta;
                qa + step.max(-budget).min(budget)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// The joint overshoots its target at fault time and stays stuck there.
    JointLock,
    /// The joint is pushed off its commanded angle for a while, then released.
    TransientPush,
}

/// An injected fault.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec<T> {
    pub kind: FaultKind,
    /// 0-based joint index.
    pub joint: usize,
    pub time_s: T,
    /// Degrees of overshoot for a lock, radians of offset for a push.
    pub magnitude: T,
    /// Push duration in seconds; unused for locks.
    pub duration_s: T,
}

impl<T: Real> FaultSpec<T> {
    pub fn lock(joint: usize, time_s: T, overshoot_deg: T) -> Self {
        Self { kind: FaultKind::JointLock, joint, time_s, magnitude: overshoot_deg, duration_s: T::zero() }
    }

    pub fn push(joint: usize, time_s: T, offset_rad: T, duration_s: T) -> Self {
        Self { kind: FaultKind::TransientPush, joint, time_s, magnitude: offset_rad, duration_s }
    }

    pub fn validate(&self, joints: usize) -> Result<(), KinematicsError> {
        if self.joint >= joints {
            return Err(KinematicsError::JointOutOfRange { joint: self.joint, joints });
        }
        if !(self.time_s >= T::zero()) {
            return Err(KinematicsError::Invalid("fault time must be non-negative".into()));
        }
        if self.kind == FaultKind::JointLock && self.magnitude.abs() > T::lit(15.0) {
            return Err(KinematicsError::Invalid("lock overshoot must lie within ±15°".into()));
        }
        if self.kind == FaultKind::TransientPush && self.duration_s < T::zero() {
            return Err(KinematicsError::Invalid("push duration must be non-negative".into()));
        }
        Ok(())
    }

    /// First servo tick at which the fault is active.
    pub fn start_tick(&self, low_rate: u32) -> usize {
        (self.time_s * T::from_u32(low_rate).expect("rate")).round().to_usize().unwrap_or(0)
    }

    /// High-rate sample during which the fault first acts.
    pub fn sample_index(&self, high_rate: u32) -> usize {
        (self.time_s * T::from_u32(high_rate).expect("rate")).floor().to_usize().unwrap_or(0)
    }
}

/// Synthetic gripper sensing and observation noise for trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripModel<T> {
    /// Steady grip force per finger when closed, N.
    pub grip_force: T,
    /// Standard deviation of additive Gaussian noise on joint, end-effector
    /// and force channels, raw units.
    pub noise_std: T,
    pub seed: u64,
}

impl<T: Real> Default for GripModel<T> {
    fn default() -> Self {
        Self { grip_force: T::lit(5.0), noise_std: T::lit(0.01), seed: 0 }
    }
}

/// Everything recorded during one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace<T> {
    /// Servo targets per tick, `ticks x J`.
    pub commanded: Matrix<T>,
    /// Joint angles per tick after the servo and any fault acted.
    pub actual: Matrix<T>,
    /// End-effector position per tick, `ticks x 2`.
    pub ee_path: Matrix<T>,
    /// Observations sampled at the high rate.
    pub observed: SensorimotorSequence<T>,
    pub low_rate: u32,
}

impl<T: Real> TrialTrace<T> {
    pub fn ticks(&self) -> usize {
        self.actual.rows()
    }

    pub fn final_ee(&self) -> [T; 2] {
        let r = self.ee_path.row(self.ee_path.rows() - 1);
        [r[0], r[1]]
    }

    /// CSV with one row per tick: `tick,time_s,cmd_q1..cmd_qJ,act_q1..act_qJ,ee_x,ee_y`.
    pub fn to_csv(&self) -> String {
        let j = self.actual.cols();
        let mut out = String::new();
        let mut header = vec!["tick".to_string(), "time_s".to_string()];
        header.extend((1..=j).map(|k| format!("cmd_q{k}")));
        header.extend((1..=j).map(|k| format!("act_q{k}")));
        header.extend(["ee_x".to_string(), "ee_y".to_string()]);
        out.push_str(&header.join(","));
        out.push('\n');
        for t in 0..self.ticks() {
            let mut row = vec![t.to_string(), format!("{}", t as f64 / self.low_rate as f64)];
            row.extend(self.commanded.row(t).iter().map(|v| v.to_string()));
            row.extend(self.actual.row(t).iter().map(|v| v.to_string()));
            row.extend(self.ee_path.row(t).iter().map(|v| v.to_string()));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Channel indices the trial writes to, found by label.
struct TrialChannels {
    joints: Vec<usize>,
    ee: Option<(usize, usize)>,
    gripper: Option<usize>,
    forces: Vec<usize>,
}

impl TrialChannels {
    fn of<T: Real>(seq: &SensorimotorSequence<T>) -> Self {
        let ee = seq.channel_index("ee_x").zip(seq.channel_index("ee_y"));
        let forces = seq
            .channels()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ChannelKind::Exteroceptive && c.label.starts_with("force"))
            .map(|(i, _)| i)
            .collect();
        Self { joints: seq.joint_channels(), ee, gripper: seq.channel_index("gripper"), forces }
    }
}

/// Runs one trial against the joint targets in `desired`.
///
/// The arm starts at the first target. Targets are zero-order held for
/// `low_rate / high_rate` ticks each. A `JointLock` drives the faulted joint to
/// its target at fault time plus the overshoot and keeps it there for the rest
/// of the trial; a `TransientPush` displaces the joint by the push offset for
/// `duration_s`, after which the servo pulls it back. Observation noise is drawn
/// for every row up front, so rows before the fault match the fault-free trial
/// bit for bit.
pub fn run_trial<T: Real>(
    arm: &ArmModel<T>,
    cfg: &ControllerConfig<T>,
    desired: &SensorimotorSequence<T>,
    fault: Option<&FaultSpec<T>>,
    grip: &GripModel<T>,
) -> Result<TrialTrace<T>, KinematicsError> {
    cfg.validate()?;
    let ch = TrialChannels::of(desired);
    if ch.joints.is_empty() {
        return Err(KinematicsError::NoJointChannels);
    }
    if ch.joints.len() != arm.joints() {
        return Err(KinematicsError::Dimension { expected: arm.joints(), found: ch.joints.len() });
    }
    if let Some(f) = fault {
        f.validate(arm.joints())?;
    }
    let j = arm.joints();
    let steps = desired.len();
    let per_step = cfg.ticks_per_step();
    let ticks = steps * per_step;
    let targets: Vec<Vec<T>> = (0..steps)
        .map(|mu| {
            let mut q: Vec<T> = ch.joints.iter().map(|&c| desired.step(mu)[c]).collect();
            arm.clamp(&mut q);
            q
        })
        .collect();

    let noise = draw_noise(steps, desired.dim(), grip);
    let deg = T::lit(std::f64::consts::PI / 180.0);
    let fault_tick = fault.map(|f| f.start_tick(cfg.low_rate));
    let push_end = fault.and_then(|f| match f.kind {
        FaultKind::TransientPush => {
            Some(((f.time_s + f.duration_s) * T::from_u32(cfg.low_rate).expect("rate")).round().to_usize().unwrap_or(0))
        }
        FaultKind::JointLock => None,
    });
    let mut lock_angle: Option<T> = None;

    let mut commanded = Matrix::zeros(ticks, j);
    let mut actual = Matrix::zeros(ticks, j);
    let mut ee_path = Matrix::zeros(ticks, 2);
    let mut observed = desired.data().clone();
    let mut q = targets[0].clone();

    for tick in 0..ticks {
        let mu = tick / per_step;
        let target = &targets[mu];
        let mut servo_target = target.clone();
        if let (Some(f), Some(start)) = (fault, fault_tick) {
            if tick >= start && f.kind == FaultKind::JointLock {
                let angle = *lock_angle.get_or_insert(target[f.joint] + f.magnitude * deg);
                servo_target[f.joint] = angle;
            }
        }
        q = servo_step(&q, &servo_target, cfg);
        if let (Some(f), Some(start), Some(end)) = (fault, fault_tick, push_end) {
            if (start..end).contains(&tick) {
                q[f.joint] = target[f.joint] + f.magnitude;
            }
        }
        commanded.set_row(tick, target);
        actual.set_row(tick, &q);
        let p = arm.forward_kinematics(&q);
        ee_path.set_row(tick, &p);

        if (tick + 1) % per_step == 0 {
            let row = observed.row_mut(mu);
            for (k, &c) in ch.joints.iter().enumerate() {
                row[c] = q[k] + noise[(mu, c)];
            }
            if let Some((cx, cy)) = ch.ee {
                row[cx] = p[0] + noise[(mu, cx)];
                row[cy] = p[1] + noise[(mu, cy)];
            }
            let closed = ch.gripper.map(|g| {
                let v = desired.step(mu)[g] >= T::lit(0.5);
                row[g] = if v { T::one() } else { T::zero() };
                v
            });
            for &c in &ch.forces {
                let level = if closed.unwrap_or(false) { grip.grip_force } else { T::zero() };
                row[c] = level + noise[(mu, c)];
            }
        }
    }

    let mut observed_seq = desired.with_data(observed).map_err(|e| KinematicsError::Invalid(e.to_string()))?;
    observed_seq.normalized = false;
    Ok(TrialTrace { commanded, actual, ee_path, observed: observed_seq, low_rate: cfg.low_rate })
}

fn draw_noise<T: Real>(steps: usize, dim: usize, grip: &GripModel<T>) -> Matrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(grip.seed);
    let std = grip.noise_std.as_f64();
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("finite noise std");
        Matrix::from_fn(steps, dim, |_, _| T::lit(normal.sample(&mut rng)))
    } else {
        Matrix::zeros(steps, dim)
    }
}

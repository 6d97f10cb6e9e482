use super::MonitorError;
use crate::arm::FaultSpec;
use crate::data::{joint_index, Channel, ChannelKind};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Sum of squared differences between an observation and its prediction.
pub fn fault_score<T: Real>(observed: &[T], predicted: &[T]) -> T {
    crate::linalg::sq_dist(observed, predicted)
}

/// Alarm level set from scores recorded during normal operation.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionThreshold<T> {
    pub value: T,
    pub percentile_q: T,
    pub calibration_n: usize,
    /// Calibration scores, ascending.
    pub calibration: Vec<T>,
}

impl<T: Real> DetectionThreshold<T> {
    pub fn exceeded_by(&self, score: T) -> bool {
        score > self.value
    }
}

/// Nearest-rank percentile: the `⌈q·n⌉`-th smallest calibration score.
pub fn calibrate_threshold<T: Real>(energies: &[T], q: T) -> Result<DetectionThreshold<T>, MonitorError> {
    if energies.is_empty() {
        return Err(MonitorError::EmptyCalibration);
    }
    if !(q > T::zero() && q <= T::one()) {
        return Err(MonitorError::Percentile(q.as_f64()));
    }
    let mut sorted = energies.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite calibration energies"));
    let n = sorted.len();
    // guard against q·n landing a hair above an integer
    let rank = ((q.as_f64() * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(DetectionThreshold { value: sorted[rank.min(n) - 1], percentile_q: q, calibration_n: n, calibration: sorted })
}

/// Which channels isolation ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolationScope {
    /// Joint-angle channels only.
    #[default]
    Joints,
    /// Every proprioceptive channel, joints and end-effector.
    Proprioceptive,
    /// All channels, for effect analysis.
    All,
}

impl IsolationScope {
    fn admits(self, ch: &Channel) -> bool {
        match self {
            IsolationScope::Joints => ch.kind == ChannelKind::Proprioceptive && joint_index(&ch.label).is_some(),
            IsolationScope::Proprioceptive => ch.kind == ChannelKind::Proprioceptive,
            IsolationScope::All => true,
        }
    }
}

/// Channel with the largest absolute error among those in scope, and the
/// joint it measures if any. Ties go to the lowest channel index.
pub fn isolate<T: Real>(errors: &[T], channels: &[Channel], scope: IsolationScope) -> Option<(usize, Option<usize>)> {
    let mut best: Option<(usize, T)> = None;
    for (i, (e, ch)) in errors.iter().zip(channels).enumerate() {
        if !scope.admits(ch) {
            continue;
        }
        let mag = e.abs();
        if best.is_none_or(|(_, b)| mag > b) {
            best = Some((i, mag));
        }
    }
    best.map(|(i, _)| (i, joint_index(&channels[i].label).filter(|_| channels[i].kind == ChannelKind::Proprioceptive)))
}

/// Verdict of the monitor on one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport<T> {
    /// Fault score per step.
    pub energy_trace: Vec<T>,
    pub detected: bool,
    /// First step, at or after the scan start, whose score exceeds the threshold.
    pub detect_step: Option<usize>,
    pub isolated_channel: Option<usize>,
    pub isolated_joint: Option<usize>,
    pub truth: Option<FaultSpec<T>>,
}

/// Scores every step of `observed` against `predicted`, flags the first step
/// at or after `scan_from` that exceeds the threshold, and isolates at that step.
pub fn detect<T: Real>(
    predicted: &Matrix<T>,
    observed: &Matrix<T>,
    channels: &[Channel],
    threshold: &DetectionThreshold<T>,
    scan_from: usize,
    scope: IsolationScope,
) -> Result<DetectionReport<T>, MonitorError> {
    if predicted.shape() != observed.shape() {
        return Err(MonitorError::Length { context: "trial steps", expected: predicted.rows(), found: observed.rows() });
    }
    if channels.len() != observed.cols() {
        return Err(MonitorError::Length { context: "channels", expected: observed.cols(), found: channels.len() });
    }
    let energy_trace: Vec<T> =
        (0..observed.rows()).map(|t| fault_score(observed.row(t), predicted.row(t))).collect();
    Ok(report_from_scores(energy_trace, predicted, observed, channels, threshold, scan_from, scope))
}

/// Builds a report from precomputed per-step scores; isolation uses raw
/// `observed − predicted` differences at the detection step.
pub(crate) fn report_from_scores<T: Real>(
    energy_trace: Vec<T>,
    predicted: &Matrix<T>,
    observed: &Matrix<T>,
    channels: &[Channel],
    threshold: &DetectionThreshold<T>,
    scan_from: usize,
    scope: IsolationScope,
) -> DetectionReport<T> {
    let detect_step = energy_trace.iter().enumerate().skip(scan_from).find(|(_, &e)| threshold.exceeded_by(e)).map(|(t, _)| t);
    let isolation = detect_step.and_then(|t| {
        let diff = crate::linalg::sub(observed.row(t), predicted.row(t));
        isolate(&diff, channels, scope)
    });
    DetectionReport {
        energy_trace,
        detected: detect_step.is_some(),
        detect_step,
        isolated_channel: isolation.map(|(c, _)| c),
        isolated_joint: isolation.and_then(|(_, j)| j),
        truth: None,
    }
}

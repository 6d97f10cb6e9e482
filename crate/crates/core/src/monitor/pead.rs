use super::MonitorError;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Largest perpendicular deviation of a path from the start→target line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pead<T> {
    /// Absolute deviation, metres.
    pub magnitude: T,
    /// Deviation with the sign of the side it lies on; positive to the left of start→target.
    pub signed: T,
}

/// Post-exposure absolute deviation of an end-effector path (`steps x 2`).
///
/// The path is truncated at its closest approach to `target`, so any
/// follow-through beyond the target is ignored.
pub fn pead<T: Real>(path: &Matrix<T>, start: [T; 2], target: [T; 2]) -> Result<Pead<T>, MonitorError> {
    if path.rows() == 0 {
        return Err(MonitorError::EmptyPath);
    }
    if path.cols() != 2 {
        return Err(MonitorError::Length { context: "path columns", expected: 2, found: path.cols() });
    }
    let (dx, dy) = (target[0] - start[0], target[1] - start[1]);
    let len = (dx * dx + dy * dy).sqrt();
    if !(len > T::zero()) {
        return Err(MonitorError::DegenerateLine);
    }
    let dist_to_target = |r: &[T]| (r[0] - target[0]).powi(2) + (r[1] - target[1]).powi(2);
    let mut closest = 0;
    for t in 1..path.rows() {
        if dist_to_target(path.row(t)) < dist_to_target(path.row(closest)) {
            closest = t;
        }
    }
    let mut best = Pead { magnitude: T::zero(), signed: T::zero() };
    for t in 0..=closest {
        let r = path.row(t);
        // 2D cross product of (target − start) with (point − start)
        let signed = (dx * (r[1] - start[1]) - dy * (r[0] - start[0])) / len;
        if signed.abs() > best.magnitude {
            best = Pead { magnitude: signed.abs(), signed };
        }
    }
    Ok(best)
}

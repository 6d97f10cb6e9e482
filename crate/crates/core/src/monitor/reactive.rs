use super::grid::{Execution, Plan, SkillMonitor};
use super::MonitorError;
use crate::arm::{FaultSpec, GripModel};
use crate::data::SensorimotorSequence;
use crate::scalar::Real;

/// Recalled plan and the trial that executed it.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactiveOutcome<T> {
    pub plan: Plan<T>,
    pub execution: Execution<T>,
}

impl<T: Real> ReactiveOutcome<T> {
    /// Distance between the final end-effector positions of two trials, metres.
    pub fn final_ee_distance(&self, other: &ReactiveOutcome<T>) -> T {
        let a = self.execution.trace.final_ee();
        let b = other.execution.trace.final_ee();
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    }
}

/// Recalls a plan offline from `cue` and lets the joint servo track its
/// proprioceptive targets at the low rate while `fault` disturbs the arm.
/// Once a push is released the servo pulls the joint back onto the plan.
pub fn reactive_correct<T: Real>(
    monitor: &SkillMonitor<'_, T>,
    cue: &[T],
    template: &SensorimotorSequence<T>,
    fault: Option<&FaultSpec<T>>,
    grip: &GripModel<T>,
) -> Result<ReactiveOutcome<T>, MonitorError> {
    let plan = monitor.plan(cue, template)?;
    let execution = monitor.execute(&plan, fault, grip)?;
    Ok(ReactiveOutcome { plan, execution })
}

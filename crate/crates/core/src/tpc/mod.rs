//! Two-layer temporal predictive coding network.
//!
//! The hidden layer `z` carries the sequence context; at step `μ` the model
//! predicts its own hidden state from the previous one through `W_H` and the
//! observation from the hidden state through `W_F`. Per-step energy is
//!
//! ```text
//! F = ‖z − W_H f(ẑ_prev)‖² + ‖x − W_F f(z)‖²
//! ```
//!
//! Inference relaxes `z` with `x` clamped; learning is a local outer-product
//! update of each weight matrix from the error at its output and the activity
//! at its input. Recall either infers the hidden state from a cue prefix and
//! then rolls forward (offline), or re-infers at every step from the incoming
//! stream (online).

mod memorize;
mod model;
mod recall;

pub use memorize::{MemorizeReport, UpdateMode};
pub use model::{kaiming_bound, ErrorPair, TpcModel};
pub use recall::RecallResult;

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::str::FromStr;

use thiserror::Error;

use crate::optim::Optimizer;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TpcError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },
    #[error("inference diverged at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("cue length {cue} must be at least 1 and below the recall horizon {horizon}")]
    CueLength { cue: usize, horizon: usize },
    #[error("non-finite weights")]
    NonFiniteWeights,
}

/// Hidden-unit nonlinearity `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    #[inline]
    pub fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                T::one() - t * t
            }
            Activation::Linear => T::one(),
        }
    }

    pub fn apply_into<T: Real>(self, x: &[T], out: &mut [T]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.apply(v);
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// Hidden value-neuron activities.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState<T>(pub Vec<T>);

impl<T: Real> HiddenState<T> {
    pub fn zeros(h: usize) -> Self {
        Self(vec![T::zero(); h])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl<T> Deref for HiddenState<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for HiddenState<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for HiddenState<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

/// Where each step's hidden relaxation starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmStart {
    /// Start from the temporal prediction `W_H f(ẑ_prev)`, so `ε_z` is zero initially.
    #[default]
    Prediction,
    /// Start from the zero vector.
    Zero,
}

/// Schedule of the hidden-state relaxation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InferenceConfig<T> {
    /// Euler step size of the relaxation.
    pub inference_lr: T,
    /// Fixed iteration budget; there is no early stopping.
    pub n_iters: usize,
    pub warm_start: WarmStart,
}

impl<T: Real> Default for InferenceConfig<T> {
    fn default() -> Self {
        Self { inference_lr: T::lit(1e-2), n_iters: 100, warm_start: WarmStart::Prediction }
    }
}

impl<T: Real> InferenceConfig<T> {
    pub fn validate(&self) -> Result<(), TpcError> {
        if !(self.inference_lr > T::zero()) || !self.inference_lr.is_finite() {
            return Err(TpcError::InvalidConfig(format!("inference_lr must be positive, got {}", self.inference_lr)));
        }
        if self.n_iters == 0 {
            return Err(TpcError::InvalidConfig("n_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_iters(mut self, n_iters: usize) -> Self {
        self.n_iters = n_iters;
        self
    }
}

/// Memorization schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<T> {
    pub weight_lr: T,
    /// Sweeps over the whole training set per distinct skill in it.
    pub epochs_per_skill: usize,
    /// Sequences whose updates are summed before being applied.
    pub batch_size: usize,
    /// Seeds the per-epoch presentation order.
    pub seed: u64,
    pub update_mode: UpdateMode,
    pub optimizer: Optimizer,
}

impl<T: Real> Default for TrainConfig<T> {
    fn default() -> Self {
        Self {
            weight_lr: T::lit(1e-4),
            epochs_per_skill: 1000,
            batch_size: 1,
            seed: 0,
            update_mode: UpdateMode::PerStep,
            optimizer: Optimizer::Adam,
        }
    }
}

impl<T: Real> TrainConfig<T> {
    pub fn validate(&self) -> Result<(), TpcError> {
        if !(self.weight_lr > T::zero()) || !self.weight_lr.is_finite() {
            return Err(TpcError::InvalidConfig(format!("weight_lr must be positive, got {}", self.weight_lr)));
        }
        if self.epochs_per_skill == 0 {
            return Err(TpcError::InvalidConfig("epochs_per_skill must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(TpcError::InvalidConfig("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

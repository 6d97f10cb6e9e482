//! Parameter update rules shared by the predictive coding network and the
//! recurrent baselines.

use std::fmt;
use std::str::FromStr;

use crate::scalar::Real;

/// How a raw weight change is turned into a parameter step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    /// `w += lr · Δ`
    Sgd,
    /// Per-parameter Adam moments (β₁ = 0.9, β₂ = 0.999, ε = 1e-8) on `Δ`.
    #[default]
    Adam,
}

impl Optimizer {
    pub fn tag(self) -> &'static str {
        match self {
            Optimizer::Sgd => "sgd",
            Optimizer::Adam => "adam",
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(format!("unknown optimizer `{other}`")),
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Optimizer state for one parameter block.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamState<T> {
    kind: Optimizer,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> ParamState<T> {
    pub fn new(kind: Optimizer, len: usize) -> Self {
        let n = if kind == Optimizer::Adam { len } else { 0 };
        Self { kind, m: vec![T::zero(); n], v: vec![T::zero(); n], t: 0 }
    }

    /// Moves `params` along `delta`, the descent direction (minus the gradient).
    pub fn step(&mut self, lr: T, params: &mut [T], delta: &[T]) {
        debug_assert_eq!(params.len(), delta.len());
        match self.kind {
            Optimizer::Sgd => {
                for (p, &d) in params.iter_mut().zip(delta) {
                    *p = *p + lr * d;
                }
            }
            Optimizer::Adam => {
                self.t += 1;
                let (b1, b2, eps) = (T::lit(BETA1), T::lit(BETA2), T::lit(EPS));
                let c1 = T::one() - b1.powi(self.t);
                let c2 = T::one() - b2.powi(self.t);
                let step = lr * c2.sqrt() / c1;
                let eps_hat = eps * c2.sqrt();
                for (((p, &d), m), v) in params.iter_mut().zip(delta).zip(&mut self.m).zip(&mut self.v) {
                    *m = b1 * *m + (T::one() - b1) * d;
                    *v = b2 * *v + (T::one() - b2) * d * d;
                    *p = *p + step * *m / (v.sqrt() + eps_hat);
                }
            }
        }
    }
}

use super::model::Workspace;
use super::{HiddenState, InferenceConfig, TpcError, TpcModel};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

/// Trajectory produced by a recall.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallResult<T> {
    /// Recalled observations, `T x D`.
    pub x_hat: Matrix<T>,
    /// `x − x̂` where ground truth was available, zero elsewhere.
    pub eps_x_trace: Matrix<T>,
    /// Per-step sum of squared observation errors.
    pub energy_trace: Vec<T>,
    /// Hidden state at every step, `T x H`.
    pub z_trace: Matrix<T>,
}

impl<T: Real> RecallResult<T> {
    fn new(horizon: usize, d: usize, h: usize) -> Self {
        Self {
            x_hat: Matrix::zeros(horizon, d),
            eps_x_trace: Matrix::zeros(horizon, d),
            energy_trace: vec![T::zero(); horizon],
            z_trace: Matrix::zeros(horizon, h),
        }
    }

    pub fn horizon(&self) -> usize {
        self.x_hat.rows()
    }

    fn record(&mut self, mu: usize, z: &[T], x_hat: &[T], truth: Option<&[T]>) {
        self.z_trace.set_row(mu, z);
        self.x_hat.set_row(mu, x_hat);
        if let Some(x) = truth {
            let eps = linalg::sub(x, x_hat);
            self.energy_trace[mu] = linalg::sq_norm(&eps);
            self.eps_x_trace.set_row(mu, &eps);
        }
    }
}

impl<T: Real> TpcModel<T> {
    /// Offline recall: cued inference on the `T_n` cue rows, then pure forward
    /// rollout to `horizon` steps with no further inference.
    ///
    /// Cue rows of `x_hat` hold the model's reconstruction `W_F f(ẑ^μ)` and
    /// carry their observation error; rolled-out rows have zero error, which
    /// is the exact fixed point of the unclamped energy.
    pub fn recall_offline(
        &self,
        cue: &Matrix<T>,
        horizon: usize,
        cfg: &InferenceConfig<T>,
    ) -> Result<RecallResult<T>, TpcError> {
        cfg.validate()?;
        let t_n = cue.rows();
        if t_n == 0 || t_n >= horizon {
            return Err(TpcError::CueLength { cue: t_n, horizon });
        }
        if cue.cols() != self.obs_dim() {
            return Err(TpcError::DimensionMismatch { context: "cue channels", expected: self.obs_dim(), found: cue.cols() });
        }
        let (h, d) = (self.hidden_dim(), self.obs_dim());
        let mut out = RecallResult::new(horizon, d, h);
        let mut ws = Workspace::new(h, d);
        let mut z_prev = HiddenState::zeros(h);
        for mu in 0..t_n {
            let x = cue.row(mu);
            let z = self.relax_step(&z_prev, x, cfg, &mut ws)?;
            let x_hat = self.observation(&z);
            out.record(mu, &z, &x_hat, Some(x));
            z_prev = z;
        }
        for mu in t_n..horizon {
            let (z, x_hat) = self.forward_predict(&z_prev)?;
            out.record(mu, &z, &x_hat, None);
            z_prev = z;
        }
        Ok(out)
    }

    /// Online recall: at every step infer `ẑ^μ` from the observed `x^μ` and
    /// predict `x̂^{μ+1}` by one forward step. Row 0 of `x_hat` is the
    /// reconstruction of `x^0`; row `μ+1` is the one-step-ahead prediction.
    pub fn recall_online(
        &self,
        observations: &Matrix<T>,
        cfg: &InferenceConfig<T>,
    ) -> Result<RecallResult<T>, TpcError> {
        cfg.validate()?;
        let horizon = observations.rows();
        if horizon < 2 {
            return Err(TpcError::Empty("online recall needs at least two observations"));
        }
        if observations.cols() != self.obs_dim() {
            return Err(TpcError::DimensionMismatch {
                context: "observation channels",
                expected: self.obs_dim(),
                found: observations.cols(),
            });
        }
        let (h, d) = (self.hidden_dim(), self.obs_dim());
        let mut out = RecallResult::new(horizon, d, h);
        let mut ws = Workspace::new(h, d);
        let mut z_prev = HiddenState::zeros(h);
        let first = self.relax_step(&z_prev, observations.row(0), cfg, &mut ws)?;
        out.record(0, &first, &self.observation(&first), Some(observations.row(0)));
        z_prev = first;
        for mu in 1..horizon {
            let (_, x_pred) = self.forward_predict(&z_prev)?;
            let x = observations.row(mu);
            let z = self.relax_step(&z_prev, x, cfg, &mut ws)?;
            out.record(mu, &z, &x_pred, Some(x));
            z_prev = z;
        }
        Ok(out)
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use super::{Activation, HiddenState, InferenceConfig, TpcError};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

/// The learned repertoire: hidden transition weights `W_H` (H x H) and
/// observation weights `W_F` (D x H).
#[derive(Debug, Clone, PartialEq)]
pub struct TpcModel<T> {
    w_h: Matrix<T>,
    w_f: Matrix<T>,
    activation: Activation,
}

/// Prediction errors at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorPair<T> {
    /// `z − W_H f(ẑ_prev)`
    pub eps_z: Vec<T>,
    /// `x − W_F f(z)`
    pub eps_x: Vec<T>,
}

impl<T: Real> ErrorPair<T> {
    pub fn energy(&self) -> T {
        linalg::sq_norm(&self.eps_z) + linalg::sq_norm(&self.eps_x)
    }

    pub fn is_zero(&self) -> bool {
        self.eps_z.iter().chain(&self.eps_x).all(|e| e.is_zero())
    }
}

/// Scratch buffers for the relaxation loop.
pub(crate) struct Workspace<T> {
    prior: Vec<T>,
    fz: Vec<T>,
    pred_x: Vec<T>,
    eps_x: Vec<T>,
    back: Vec<T>,
}

impl<T: Real> Workspace<T> {
    pub(crate) fn new(h: usize, d: usize) -> Self {
        Self {
            prior: vec![T::zero(); h],
            fz: vec![T::zero(); h],
            pred_x: vec![T::zero(); d],
            eps_x: vec![T::zero(); d],
            back: vec![T::zero(); h],
        }
    }
}

impl<T: Real> TpcModel<T> {
    pub fn new(w_h: Matrix<T>, w_f: Matrix<T>, activation: Activation) -> Result<Self, TpcError> {
        let h = w_h.rows();
        if w_h.cols() != h {
            return Err(TpcError::DimensionMismatch { context: "W_H columns", expected: h, found: w_h.cols() });
        }
        if w_f.cols() != h {
            return Err(TpcError::DimensionMismatch { context: "W_F columns", expected: h, found: w_f.cols() });
        }
        if h == 0 || w_f.rows() == 0 {
            return Err(TpcError::Empty("model dimensions must be positive"));
        }
        if !w_h.is_finite() || !w_f.is_finite() {
            return Err(TpcError::NonFiniteWeights);
        }
        Ok(Self { w_h, w_f, activation })
    }

    pub fn zeros(hidden: usize, obs: usize, activation: Activation) -> Self {
        Self { w_h: Matrix::zeros(hidden, hidden), w_f: Matrix::zeros(obs, hidden), activation }
    }

    /// Kaiming-uniform initialisation: every entry of both matrices is drawn
    /// from `U(−√(6/H), √(6/H))`, `W_H` first, then `W_F`.
    pub fn init(hidden: usize, obs: usize, activation: Activation, seed: u64) -> Self {
        assert!(hidden >= 1 && obs >= 1, "model dimensions must be positive");
        let bound = kaiming_bound(hidden);
        let dist = Uniform::new_inclusive(-bound, bound);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w_h = Matrix::from_fn(hidden, hidden, |_, _| T::lit(dist.sample(&mut rng)));
        let w_f = Matrix::from_fn(obs, hidden, |_, _| T::lit(dist.sample(&mut rng)));
        Self { w_h, w_f, activation }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_h.rows()
    }

    pub fn obs_dim(&self) -> usize {
        self.w_f.rows()
    }

    pub fn w_h(&self) -> &Matrix<T> {
        &self.w_h
    }

    pub fn w_f(&self) -> &Matrix<T> {
        &self.w_f
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check_hidden(&self, v: &[T], context: &'static str) -> Result<(), TpcError> {
        if v.len() != self.hidden_dim() {
            return Err(TpcError::DimensionMismatch { context, expected: self.hidden_dim(), found: v.len() });
        }
        Ok(())
    }

    fn check_obs(&self, v: &[T], context: &'static str) -> Result<(), TpcError> {
        if v.len() != self.obs_dim() {
            return Err(TpcError::DimensionMismatch { context, expected: self.obs_dim(), found: v.len() });
        }
        Ok(())
    }

    fn activate(&self, v: &[T]) -> Vec<T> {
        v.iter().map(|&x| self.activation.apply(x)).collect()
    }

    /// Temporal prior on the next hidden state, `W_H f(ẑ_prev)`.
    pub fn hidden_prior(&self, z_prev: &[T]) -> Vec<T> {
        self.w_h.mul_vec(&self.activate(z_prev))
    }

    /// Observation predicted from a hidden state, `W_F f(z)`.
    pub fn observation(&self, z: &[T]) -> Vec<T> {
        self.w_f.mul_vec(&self.activate(z))
    }

    pub fn errors(&self, z: &[T], z_prev: &[T], x: &[T]) -> Result<ErrorPair<T>, TpcError> {
        self.check_hidden(z, "z")?;
        self.check_hidden(z_prev, "z_prev")?;
        self.check_obs(x, "x")?;
        Ok(ErrorPair {
            eps_z: linalg::sub(z, &self.hidden_prior(z_prev)),
            eps_x: linalg::sub(x, &self.observation(z)),
        })
    }

    /// `‖z − W_H f(z_prev)‖² + ‖x − W_F f(z)‖²`
    pub fn step_energy(&self, z: &[T], z_prev: &[T], x: &[T]) -> Result<T, TpcError> {
        Ok(self.errors(z, z_prev, x)?.energy())
    }

    /// Right-hand side of the hidden dynamics, `−ε_z + f′(z) ⊙ W_Fᵀ ε_x`.
    /// This is `−½ ∂F/∂z`.
    pub fn hidden_drive(&self, z: &[T], z_prev: &[T], x: &[T]) -> Result<Vec<T>, TpcError> {
        let err = self.errors(z, z_prev, x)?;
        let back = self.w_f.tr_mul_vec(&err.eps_x);
        Ok(z.iter()
            .zip(&err.eps_z)
            .zip(&back)
            .map(|((&zi, &ez), &b)| -ez + self.activation.derivative(zi) * b)
            .collect())
    }

    /// `(W_H f(z_prev), W_F f(W_H f(z_prev)))`: one step of pure forward rollout.
    pub fn forward_predict(&self, z_prev: &HiddenState<T>) -> Result<(HiddenState<T>, Vec<T>), TpcError> {
        self.check_hidden(z_prev, "z_prev")?;
        let z_next = self.hidden_prior(z_prev);
        let x_hat = self.observation(&z_next);
        Ok((HiddenState(z_next), x_hat))
    }

    /// Relaxes the hidden state with `x` clamped, running exactly
    /// `cfg.n_iters` explicit Euler steps of `z ← z + lr (−ε_z + f′(z) ⊙ W_Fᵀ ε_x)`.
    pub fn infer_hidden(
        &self,
        z_init: &HiddenState<T>,
        z_prev: &HiddenState<T>,
        x: &[T],
        cfg: &InferenceConfig<T>,
    ) -> Result<HiddenState<T>, TpcError> {
        cfg.validate()?;
        self.check_hidden(z_init, "z_init")?;
        self.check_hidden(z_prev, "z_prev")?;
        self.check_obs(x, "x")?;
        let mut ws = Workspace::new(self.hidden_dim(), self.obs_dim());
        let prior = self.hidden_prior(z_prev);
        ws.prior.copy_from_slice(&prior);
        let mut z = z_init.0.clone();
        self.relax(&mut z, x, cfg, &mut ws)?;
        Ok(HiddenState(z))
    }

    /// Inner relaxation loop; `ws.prior` must already hold `W_H f(ẑ_prev)`.
    pub(crate) fn relax(
        &self,
        z: &mut [T],
        x: &[T],
        cfg: &InferenceConfig<T>,
        ws: &mut Workspace<T>,
    ) -> Result<(), TpcError> {
        let lr = cfg.inference_lr;
        for iteration in 0..cfg.n_iters {
            self.activation.apply_into(z, &mut ws.fz);
            self.w_f.mul_vec_into(&ws.fz, &mut ws.pred_x);
            for ((e, &xi), &p) in ws.eps_x.iter_mut().zip(x).zip(&ws.pred_x) {
                *e = xi - p;
            }
            self.w_f.tr_mul_vec_into(&ws.eps_x, &mut ws.back);
            let mut finite = true;
            for (((zi, &fi), &b), &mu) in z.iter_mut().zip(&ws.fz).zip(&ws.back).zip(&ws.prior) {
                let slope = match self.activation {
                    Activation::Tanh => T::one() - fi * fi,
                    Activation::Linear => T::one(),
                };
                *zi = *zi + lr * (slope * b - (*zi - mu));
                finite &= zi.is_finite();
            }
            if !finite {
                return Err(TpcError::Divergence { iteration });
            }
        }
        Ok(())
    }

    /// Prior `W_H f(ẑ_prev)` written into the workspace and returned as the warm start.
    pub(crate) fn load_prior(&self, z_prev: &[T], ws: &mut Workspace<T>) {
        self.activation.apply_into(z_prev, &mut ws.fz);
        self.w_h.mul_vec_into(&ws.fz, &mut ws.prior);
    }

    pub(crate) fn prior_of(ws: &Workspace<T>) -> &[T] {
        &ws.prior
    }

    /// Applies one local update from the errors at `(z, z_prev, x)`:
    /// `W_H += lr ε_z f(z_prev)ᵀ`, `W_F += lr ε_x f(z)ᵀ`, both errors taken
    /// before either matrix changes. Returns the errors used.
    pub fn update_weights(
        &mut self,
        z: &HiddenState<T>,
        z_prev: &HiddenState<T>,
        x: &[T],
        weight_lr: T,
    ) -> Result<ErrorPair<T>, TpcError> {
        let (err, d_h, d_f) = self.weight_deltas(z, z_prev, x)?;
        self.apply_deltas(weight_lr, &d_h, &d_f);
        Ok(err)
    }

    /// Unscaled weight changes `(ε_z f(z_prev)ᵀ, ε_x f(z)ᵀ)`, i.e. `−½ ∂F/∂W`.
    pub fn weight_deltas(
        &self,
        z: &[T],
        z_prev: &[T],
        x: &[T],
    ) -> Result<(ErrorPair<T>, Matrix<T>, Matrix<T>), TpcError> {
        let err = self.errors(z, z_prev, x)?;
        let mut d_h = Matrix::zeros(self.hidden_dim(), self.hidden_dim());
        let mut d_f = Matrix::zeros(self.obs_dim(), self.hidden_dim());
        d_h.add_outer(T::one(), &err.eps_z, &self.activate(z_prev));
        d_f.add_outer(T::one(), &err.eps_x, &self.activate(z));
        Ok((err, d_h, d_f))
    }

    pub(crate) fn apply_deltas(&mut self, weight_lr: T, d_h: &Matrix<T>, d_f: &Matrix<T>) {
        self.w_h.add_scaled(weight_lr, d_h);
        self.w_f.add_scaled(weight_lr, d_f);
    }

    /// Accumulates the unscaled deltas for one step into `acc_h`/`acc_f`
    /// without allocating full matrices. Returns the step energy.
    pub(crate) fn accumulate_step(
        &self,
        z: &[T],
        z_prev: &[T],
        x: &[T],
        acc_h: &mut Matrix<T>,
        acc_f: &mut Matrix<T>,
    ) -> T {
        let f_prev = self.activate(z_prev);
        let f_z = self.activate(z);
        let eps_z = linalg::sub(z, &self.w_h.mul_vec(&f_prev));
        let eps_x = linalg::sub(x, &self.w_f.mul_vec(&f_z));
        acc_h.add_outer(T::one(), &eps_z, &f_prev);
        acc_f.add_outer(T::one(), &eps_x, &f_z);
        linalg::sq_norm(&eps_z) + linalg::sq_norm(&eps_x)
    }

    pub(crate) fn w_h_mut(&mut self) -> &mut Matrix<T> {
        &mut self.w_h
    }

    pub(crate) fn w_f_mut(&mut self) -> &mut Matrix<T> {
        &mut self.w_f
    }
}

/// Half-width of the Kaiming-uniform support for a layer with `fan_in` inputs.
pub fn kaiming_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}

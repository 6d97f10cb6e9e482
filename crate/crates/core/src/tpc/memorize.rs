use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::Workspace;
use super::{HiddenState, InferenceConfig, TpcError, TpcModel, TrainConfig, WarmStart};
use crate::data::SensorimotorSequence;
use crate::linalg::{self, Matrix};
use crate::optim::{Optimizer, ParamState};
use crate::scalar::Real;

/// When accumulated weight changes are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateMode {
    /// After every time step's relaxation converges.
    #[default]
    PerStep,
    /// Once per presentation of each (batch of) full sequence(s).
    PerSequence,
}

impl UpdateMode {
    pub fn tag(self) -> &'static str {
        match self {
            UpdateMode::PerStep => "per-step",
            UpdateMode::PerSequence => "per-sequence",
        }
    }
}

impl std::str::FromStr for UpdateMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-step" => Ok(UpdateMode::PerStep),
            "per-sequence" => Ok(UpdateMode::PerSequence),
            other => Err(format!("unknown update mode `{other}`")),
        }
    }
}

/// Outcome of [`TpcModel::memorize`].
#[derive(Debug, Clone, PartialEq)]
pub struct MemorizeReport<T> {
    /// Total converged energy of every epoch, summed over sequences and steps.
    pub energy_curve: Vec<T>,
    pub epochs: usize,
    pub skills: usize,
}

impl<T: Real> MemorizeReport<T> {
    /// First epoch whose energy is at most `fraction` of the epoch-0 energy.
    pub fn epochs_to_fraction(&self, fraction: T) -> Option<usize> {
        let first = *self.energy_curve.first()?;
        self.energy_curve.iter().position(|&e| e <= fraction * first)
    }
}

impl<T: Real> TpcModel<T> {
    /// Trains on a set of z-scored sequences.
    ///
    /// Runs `epochs_per_skill × (distinct skill ids)` epochs. Each epoch visits
    /// the sequences in a seeded shuffled order; within a sequence every step
    /// relaxes `z^μ` with `x^μ` clamped, then the converged `z^μ` becomes
    /// `ẑ^μ` for the next step. `ẑ^{-1}` is the zero vector.
    pub fn memorize(
        &mut self,
        sequences: &[SensorimotorSequence<T>],
        train: &TrainConfig<T>,
        inference: &InferenceConfig<T>,
    ) -> Result<MemorizeReport<T>, TpcError> {
        train.validate()?;
        inference.validate()?;
        if sequences.is_empty() {
            return Err(TpcError::Empty("no training sequences"));
        }
        for seq in sequences {
            if seq.dim() != self.obs_dim() {
                return Err(TpcError::DimensionMismatch {
                    context: "training sequence channels",
                    expected: self.obs_dim(),
                    found: seq.dim(),
                });
            }
        }
        let skills = sequences.iter().map(|s| s.skill_id.as_str()).collect::<BTreeSet<_>>().len();
        let epochs = train.epochs_per_skill * skills;
        let data: Vec<&Matrix<T>> = sequences.iter().map(|s| s.data()).collect();
        let energy_curve = self.memorize_matrices(&data, epochs, train, inference)?;
        Ok(MemorizeReport { energy_curve, epochs, skills })
    }

    /// Training loop over raw observation matrices for a fixed number of epochs.
    pub fn memorize_matrices(
        &mut self,
        data: &[&Matrix<T>],
        epochs: usize,
        train: &TrainConfig<T>,
        inference: &InferenceConfig<T>,
    ) -> Result<Vec<T>, TpcError> {
        train.validate()?;
        inference.validate()?;
        let (h, d) = (self.hidden_dim(), self.obs_dim());
        let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut ws = Workspace::new(h, d);
        let direct =
            train.batch_size == 1 && train.update_mode == UpdateMode::PerStep && train.optimizer == Optimizer::Sgd;
        let mut opt_h = ParamState::new(train.optimizer, if direct { 0 } else { h * h });
        let mut opt_f = ParamState::new(train.optimizer, if direct { 0 } else { d * h });
        let mut acc_h = Matrix::zeros(if direct { 0 } else { h }, h);
        let mut acc_f = Matrix::zeros(if direct { 0 } else { d }, h);
        let mut curve = Vec::with_capacity(epochs);

        for _ in 0..epochs {
            order.shuffle(&mut rng);
            let mut epoch_energy = T::zero();
            for batch in order.chunks(train.batch_size) {
                let mut z_prev: Vec<HiddenState<T>> = vec![HiddenState::zeros(h); batch.len()];
                let steps = batch.iter().map(|&i| data[i].rows()).max().unwrap_or(0);
                for mu in 0..steps {
                    for (slot, &i) in batch.iter().enumerate() {
                        let seq = data[i];
                        if mu >= seq.rows() {
                            continue;
                        }
                        let x = seq.row(mu);
                        let z = self.relax_step(&z_prev[slot], x, inference, &mut ws)?;
                        epoch_energy = epoch_energy
                            + if direct {
                                self.local_update(&z, &z_prev[slot], x, train.weight_lr)
                            } else {
                                self.accumulate_step(&z, &z_prev[slot], x, &mut acc_h, &mut acc_f)
                            };
                        z_prev[slot] = z;
                    }
                    if !direct && train.update_mode == UpdateMode::PerStep {
                        self.flush(train.weight_lr, &mut acc_h, &mut acc_f, &mut opt_h, &mut opt_f);
                    }
                }
                if !direct && train.update_mode == UpdateMode::PerSequence {
                    self.flush(train.weight_lr, &mut acc_h, &mut acc_f, &mut opt_h, &mut opt_f);
                }
            }
            if !epoch_energy.is_finite() || !self.w_h().is_finite() || !self.w_f().is_finite() {
                return Err(TpcError::NonFiniteWeights);
            }
            curve.push(epoch_energy);
        }
        Ok(curve)
    }

    /// Relaxes one step from the configured warm start.
    pub(crate) fn relax_step(
        &self,
        z_prev: &HiddenState<T>,
        x: &[T],
        inference: &InferenceConfig<T>,
        ws: &mut Workspace<T>,
    ) -> Result<HiddenState<T>, TpcError> {
        self.load_prior(z_prev, ws);
        let mut z = match inference.warm_start {
            WarmStart::Prediction => Self::prior_of(ws).to_vec(),
            WarmStart::Zero => vec![T::zero(); self.hidden_dim()],
        };
        self.relax(&mut z, x, inference, ws)?;
        Ok(HiddenState(z))
    }

    /// In-place update for batch size 1; returns the pre-update step energy.
    fn local_update(&mut self, z: &[T], z_prev: &[T], x: &[T], lr: T) -> T {
        let act = self.activation();
        let f_prev: Vec<T> = z_prev.iter().map(|&v| act.apply(v)).collect();
        let f_z: Vec<T> = z.iter().map(|&v| act.apply(v)).collect();
        let eps_z = linalg::sub(z, &self.w_h().mul_vec(&f_prev));
        let eps_x = linalg::sub(x, &self.w_f().mul_vec(&f_z));
        self.w_h_mut().add_outer(lr, &eps_z, &f_prev);
        self.w_f_mut().add_outer(lr, &eps_x, &f_z);
        linalg::sq_norm(&eps_z) + linalg::sq_norm(&eps_x)
    }

    fn flush(
        &mut self,
        lr: T,
        acc_h: &mut Matrix<T>,
        acc_f: &mut Matrix<T>,
        opt_h: &mut ParamState<T>,
        opt_f: &mut ParamState<T>,
    ) {
        opt_h.step(lr, self.w_h_mut().as_mut_slice(), acc_h.as_slice());
        opt_f.step(lr, self.w_f_mut().as_mut_slice(), acc_f.as_slice());
        acc_h.fill(T::zero());
        acc_f.fill(T::zero());
    }
}

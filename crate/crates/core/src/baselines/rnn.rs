use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use thiserror::Error;

use crate::data::{ChannelKind, SensorimotorSequence};
use crate::linalg::{self, Matrix};
use crate::optim::ParamState;
use crate::scalar::Real;
use crate::tpc::{kaiming_bound, TrainConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RnnError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Which channels feed the network and which it predicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnnVariant {
    /// Exteroceptive and cue channels in, proprioceptive channels out.
    SensoryToMotor,
    /// Every channel in and out.
    SensorimotorToSensorimotor,
}

impl RnnVariant {
    pub const ALL: [RnnVariant; 2] = [RnnVariant::SensoryToMotor, RnnVariant::SensorimotorToSensorimotor];

    pub fn tag(self) -> &'static str {
        match self {
            RnnVariant::SensoryToMotor => "s-to-m",
            RnnVariant::SensorimotorToSensorimotor => "sm-to-sm",
        }
    }

    /// Channel indices used as network inputs.
    pub fn input_channels<T: Real>(self, seq: &SensorimotorSequence<T>) -> Vec<usize> {
        match self {
            RnnVariant::SensoryToMotor => (0..seq.dim())
                .filter(|&i| seq.channels()[i].kind != ChannelKind::Proprioceptive)
                .collect(),
            RnnVariant::SensorimotorToSensorimotor => (0..seq.dim()).collect(),
        }
    }

    /// Channel indices the network predicts.
    pub fn output_channels<T: Real>(self, seq: &SensorimotorSequence<T>) -> Vec<usize> {
        match self {
            RnnVariant::SensoryToMotor => seq.channels_of_kind(ChannelKind::Proprioceptive),
            RnnVariant::SensorimotorToSensorimotor => (0..seq.dim()).collect(),
        }
    }

    /// Builds a training pair: inputs are rows `0..T−1`, targets rows `1..T`,
    /// so output `t` predicts observation `t + 1`. With `first_only` every
    /// input row after the first is zero.
    pub fn training_pair<T: Real>(self, seq: &SensorimotorSequence<T>, first_only: bool) -> (Matrix<T>, Matrix<T>) {
        let ins = self.input_channels(seq);
        let outs = self.output_channels(seq);
        let steps = seq.len().saturating_sub(1);
        let inputs = Matrix::from_fn(steps, ins.len(), |t, j| {
            if first_only && t > 0 {
                T::zero()
            } else {
                seq.step(t)[ins[j]]
            }
        });
        let targets = Matrix::from_fn(steps, outs.len(), |t, j| seq.step(t + 1)[outs[j]]);
        (inputs, targets)
    }
}

impl fmt::Display for RnnVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for RnnVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "s-to-m" => Ok(RnnVariant::SensoryToMotor),
            "sm-to-sm" => Ok(RnnVariant::SensorimotorToSensorimotor),
            other => Err(format!("unknown rnn variant `{other}`")),
        }
    }
}

/// Discrete-time tanh RNN with a linear readout.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel<T> {
    pub w_in: Matrix<T>,
    pub w_rec: Matrix<T>,
    pub w_out: Matrix<T>,
    pub b_h: Vec<T>,
    pub b_o: Vec<T>,
    pub variant: RnnVariant,
}

/// Loss gradients for the five parameter groups.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnGradients<T> {
    pub w_in: Matrix<T>,
    pub w_rec: Matrix<T>,
    pub w_out: Matrix<T>,
    pub b_h: Vec<T>,
    pub b_o: Vec<T>,
}

impl<T: Real> RnnGradients<T> {
    fn zeros_like(m: &RnnModel<T>) -> Self {
        Self {
            w_in: Matrix::zeros(m.w_in.rows(), m.w_in.cols()),
            w_rec: Matrix::zeros(m.w_rec.rows(), m.w_rec.cols()),
            w_out: Matrix::zeros(m.w_out.rows(), m.w_out.cols()),
            b_h: vec![T::zero(); m.b_h.len()],
            b_o: vec![T::zero(); m.b_o.len()],
        }
    }

    fn scale(&mut self, alpha: T) {
        for v in self.blocks_mut() {
            for x in v.iter_mut() {
                *x = *x * alpha;
            }
        }
    }

    fn add(&mut self, other: &Self) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + y;
            }
        }
    }

    /// `[W_in, W_rec, W_out, b_h, b_o]` as flat slices.
    pub fn blocks(&self) -> [&[T]; 5] {
        [self.w_in.as_slice(), self.w_rec.as_slice(), self.w_out.as_slice(), &self.b_h, &self.b_o]
    }

    fn blocks_mut(&mut self) -> [&mut [T]; 5] {
        [
            self.w_in.as_mut_slice(),
            self.w_rec.as_mut_slice(),
            self.w_out.as_mut_slice(),
            &mut self.b_h,
            &mut self.b_o,
        ]
    }

    pub fn is_zero(&self) -> bool {
        self.blocks().iter().all(|b| b.iter().all(|x| x.is_zero()))
    }
}

impl<T: Real> RnnModel<T> {
    /// Kaiming-uniform weights (bound `√(6/fan_in)` per matrix, drawn in the
    /// order `W_in`, `W_rec`, `W_out`) and zero biases.
    pub fn init(hidden: usize, d_in: usize, d_out: usize, variant: RnnVariant, seed: u64) -> Self {
        assert!(hidden >= 1 && d_in >= 1 && d_out >= 1, "model dimensions must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize, fan_in: usize| {
            let b = kaiming_bound(fan_in);
            let dist = Uniform::new_inclusive(-b, b);
            Matrix::from_fn(rows, cols, |_, _| T::lit(dist.sample(&mut rng)))
        };
        let w_in = draw(hidden, d_in, d_in);
        let w_rec = draw(hidden, hidden, hidden);
        let w_out = draw(d_out, hidden, hidden);
        Self { w_in, w_rec, w_out, b_h: vec![T::zero(); hidden], b_o: vec![T::zero(); d_out], variant }
    }

    /// Sized from a sequence's channel layout.
    pub fn for_sequence(hidden: usize, variant: RnnVariant, seq: &SensorimotorSequence<T>, seed: u64) -> Self {
        let d_in = variant.input_channels(seq).len();
        let d_out = variant.output_channels(seq).len();
        Self::init(hidden, d_in, d_out, variant, seed)
    }

    pub fn new(
        w_in: Matrix<T>,
        w_rec: Matrix<T>,
        w_out: Matrix<T>,
        b_h: Vec<T>,
        b_o: Vec<T>,
        variant: RnnVariant,
    ) -> Result<Self, RnnError> {
        let h = w_rec.rows();
        let checks = [
            ("W_rec columns", h, w_rec.cols()),
            ("W_in rows", h, w_in.rows()),
            ("W_out columns", h, w_out.cols()),
            ("b_h length", h, b_h.len()),
            ("b_o length", w_out.rows(), b_o.len()),
        ];
        for (context, expected, found) in checks {
            if expected != found {
                return Err(RnnError::DimensionMismatch { context, expected, found });
            }
        }
        if h == 0 || w_in.cols() == 0 || w_out.rows() == 0 {
            return Err(RnnError::Empty("model dimensions must be positive"));
        }
        Ok(Self { w_in, w_rec, w_out, b_h, b_o, variant })
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_rec.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.w_in.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.w_out.rows()
    }

    /// `h_t = tanh(W_in u_t + W_rec h_{t−1} + b_h)` from `h_{−1} = 0`,
    /// `y_t = W_out h_t + b_o`. Returns `(outputs, hidden)`.
    pub fn forward(&self, inputs: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>), RnnError> {
        if inputs.cols() != self.input_dim() {
            return Err(RnnError::DimensionMismatch {
                context: "input columns",
                expected: self.input_dim(),
                found: inputs.cols(),
            });
        }
        let (steps, h) = (inputs.rows(), self.hidden_dim());
        let mut hidden = Matrix::zeros(steps, h);
        let mut outputs = Matrix::zeros(steps, self.output_dim());
        let mut prev = vec![T::zero(); h];
        let mut a = vec![T::zero(); h];
        let mut rec = vec![T::zero(); h];
        for t in 0..steps {
            self.w_in.mul_vec_into(inputs.row(t), &mut a);
            self.w_rec.mul_vec_into(&prev, &mut rec);
            for ((ai, &ri), &bi) in a.iter_mut().zip(&rec).zip(&self.b_h) {
                *ai = (*ai + ri + bi).tanh();
            }
            hidden.set_row(t, &a);
            self.w_out.mul_vec_into(&a, outputs.row_mut(t));
            for (y, &b) in outputs.row_mut(t).iter_mut().zip(&self.b_o) {
                *y = *y + b;
            }
            prev.copy_from_slice(&a);
        }
        Ok((outputs, hidden))
    }

    /// Mean squared error over every output element.
    pub fn loss(&self, inputs: &Matrix<T>, targets: &Matrix<T>) -> Result<T, RnnError> {
        let (outputs, _) = self.forward(inputs)?;
        self.check_targets(&outputs, targets)?;
        Ok(mse(&outputs, targets))
    }

    fn check_targets(&self, outputs: &Matrix<T>, targets: &Matrix<T>) -> Result<(), RnnError> {
        if targets.shape() != outputs.shape() {
            return Err(RnnError::DimensionMismatch {
                context: "target shape",
                expected: outputs.rows() * outputs.cols(),
                found: targets.rows() * targets.cols(),
            });
        }
        Ok(())
    }

    /// Full-length backpropagation through time of the mean squared error.
    /// Returns `(loss, ∂loss/∂θ)`.
    pub fn bptt(&self, inputs: &Matrix<T>, targets: &Matrix<T>) -> Result<(T, RnnGradients<T>), RnnError> {
        let (outputs, hidden) = self.forward(inputs)?;
        self.check_targets(&outputs, targets)?;
        let mut g = RnnGradients::zeros_like(self);
        let steps = outputs.rows();
        if steps == 0 {
            return Ok((T::zero(), g));
        }
        let n = T::from_usize(steps * self.output_dim()).expect("element count");
        let two_over_n = T::lit(2.0) / n;
        let h = self.hidden_dim();
        let mut da_next = vec![T::zero(); h];
        let mut dh = vec![T::zero(); h];
        let mut tmp = vec![T::zero(); h];
        let zero_h = vec![T::zero(); h];
        for t in (0..steps).rev() {
            let dy: Vec<T> = linalg::sub(outputs.row(t), targets.row(t)).into_iter().map(|e| e * two_over_n).collect();
            let h_t = hidden.row(t);
            g.w_out.add_outer(T::one(), &dy, h_t);
            linalg::axpy(T::one(), &dy, &mut g.b_o);
            self.w_out.tr_mul_vec_into(&dy, &mut dh);
            self.w_rec.tr_mul_vec_into(&da_next, &mut tmp);
            for (((d, &r), &ht), dn) in dh.iter().zip(&tmp).zip(h_t).zip(da_next.iter_mut()) {
                *dn = (*d + r) * (T::one() - ht * ht);
            }
            let da = &da_next;
            g.w_in.add_outer(T::one(), da, inputs.row(t));
            let h_prev = if t == 0 { &zero_h[..] } else { hidden.row(t - 1) };
            g.w_rec.add_outer(T::one(), da, h_prev);
            linalg::axpy(T::one(), da, &mut g.b_h);
        }
        Ok((mse(&outputs, targets), g))
    }

    /// Output sequence for a single first-step input with all later inputs zero.
    pub fn rollout_from_first(&self, first: &[T], steps: usize) -> Result<Matrix<T>, RnnError> {
        let mut inputs = Matrix::zeros(steps, self.input_dim());
        if steps > 0 {
            if first.len() != self.input_dim() {
                return Err(RnnError::DimensionMismatch {
                    context: "first input",
                    expected: self.input_dim(),
                    found: first.len(),
                });
            }
            inputs.set_row(0, first);
        }
        Ok(self.forward(&inputs)?.0)
    }

    fn params_mut(&mut self) -> [&mut [T]; 5] {
        [
            self.w_in.as_mut_slice(),
            self.w_rec.as_mut_slice(),
            self.w_out.as_mut_slice(),
            &mut self.b_h,
            &mut self.b_o,
        ]
    }

    fn is_finite(&self) -> bool {
        self.w_in.is_finite()
            && self.w_rec.is_finite()
            && self.w_out.is_finite()
            && self.b_h.iter().chain(&self.b_o).all(|v| v.is_finite())
    }

    /// Trains on `(inputs, targets)` pairs for `epochs` sweeps with the shared
    /// training hyperparameters. Each epoch visits the pairs in a seeded
    /// shuffled order; gradients of a batch are averaged before one step.
    /// Returns the mean per-pair loss of every epoch.
    pub fn train(
        &mut self,
        pairs: &[(Matrix<T>, Matrix<T>)],
        epochs: usize,
        cfg: &TrainConfig<T>,
    ) -> Result<Vec<T>, RnnError> {
        cfg.validate().map_err(|e| RnnError::InvalidConfig(e.to_string()))?;
        if pairs.is_empty() {
            return Err(RnnError::Empty("no training pairs"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        let sizes = RnnGradients::zeros_like(self).blocks().map(|b| b.len());
        let mut states = sizes.map(|n| ParamState::new(cfg.optimizer, n));
        let mut curve = Vec::with_capacity(epochs);
        let count = T::from_usize(pairs.len()).expect("pair count");
        for epoch in 0..epochs {
            order.shuffle(&mut rng);
            let mut total = T::zero();
            for batch in order.chunks(cfg.batch_size) {
                let mut acc = RnnGradients::zeros_like(self);
                for &i in batch {
                    let (loss, g) = self.bptt(&pairs[i].0, &pairs[i].1)?;
                    total = total + loss;
                    acc.add(&g);
                }
                acc.scale(-T::one() / T::from_usize(batch.len()).expect("batch size"));
                for ((state, p), d) in states.iter_mut().zip(self.params_mut()).zip(acc.blocks()) {
                    state.step(cfg.weight_lr, p, d);
                }
            }
            if !total.is_finite() || !self.is_finite() {
                return Err(RnnError::Divergence { epoch });
            }
            curve.push(total / count);
        }
        Ok(curve)
    }
}

fn mse<T: Real>(outputs: &Matrix<T>, targets: &Matrix<T>) -> T {
    let n = outputs.rows() * outputs.cols();
    if n == 0 {
        return T::zero();
    }
    linalg::sq_dist(outputs.as_slice(), targets.as_slice()) / T::from_usize(n).expect("element count")
}

use std::fmt;
use std::str::FromStr;

use crate::data::DataError;
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Role of an observation channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    /// Joint angles and end-effector coordinates.
    Proprioceptive,
    /// Sensed forces, gripper state and other external signals.
    Exteroceptive,
    /// One-hot contextual cue, 0 or 1 in raw units.
    Cue,
}

impl ChannelKind {
    pub fn tag(self) -> &'static str {
        match self {
            ChannelKind::Proprioceptive => "proprio",
            ChannelKind::Exteroceptive => "extero",
            ChannelKind::Cue => "cue",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ChannelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proprio" => Ok(ChannelKind::Proprioceptive),
            "extero" => Ok(ChannelKind::Exteroceptive),
            "cue" => Ok(ChannelKind::Cue),
            other => Err(format!("unknown channel kind `{other}`")),
        }
    }
}

/// Name and role of one observation channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Channel {
    pub label: String,
    pub kind: ChannelKind,
}

impl Channel {
    pub fn new(label: impl Into<String>, kind: ChannelKind) -> Self {
        Self { label: label.into(), kind }
    }
}

/// Label used for the joint-angle channel of joint `k` (0-based).
pub fn joint_label(k: usize) -> String {
    format!("q{}", k + 1)
}

/// Parses a joint-angle label back into its 0-based joint index.
pub fn joint_index(label: &str) -> Option<usize> {
    label.strip_prefix('q')?.parse::<usize>().ok()?.checked_sub(1)
}

/// One repetition of one skill: a `T x D` time series of labelled channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorimotorSequence<T> {
    data: Matrix<T>,
    channels: Vec<Channel>,
    pub skill_id: String,
    pub rep_id: String,
    pub rate_hz: T,
    /// `true` once the data has been z-scored.
    pub normalized: bool,
}

impl<T: Real> SensorimotorSequence<T> {
    pub fn new(
        data: Matrix<T>,
        channels: Vec<Channel>,
        skill_id: impl Into<String>,
        rep_id: impl Into<String>,
        rate_hz: T,
    ) -> Result<Self, DataError> {
        let seq = Self::new_unchecked(data, channels, skill_id, rep_id, rate_hz);
        seq.validate()?;
        Ok(seq)
    }

    pub(crate) fn new_unchecked(
        data: Matrix<T>,
        channels: Vec<Channel>,
        skill_id: impl Into<String>,
        rep_id: impl Into<String>,
        rate_hz: T,
    ) -> Self {
        Self { data, channels, skill_id: skill_id.into(), rep_id: rep_id.into(), rate_hz, normalized: false }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.data.rows() == 0 {
            return Err(DataError::Empty("sequence has no time steps"));
        }
        if self.channels.len() != self.data.cols() {
            return Err(DataError::ChannelCount { expected: self.data.cols(), found: self.channels.len() });
        }
        if !self.data.is_finite() {
            return Err(DataError::NonFinite);
        }
        if let Some(ch) = self
            .channels
            .iter()
            .find(|c| c.label.is_empty() || c.label.contains(|ch: char| ch == ',' || ch.is_whitespace()))
        {
            return Err(DataError::Invalid(format!("channel label `{}` must be non-empty without commas or spaces", ch.label)));
        }
        if self.skill_id.contains('\n') || self.rep_id.contains('\n') {
            return Err(DataError::Invalid("skill and repetition ids must be single-line".into()));
        }
        if !(self.rate_hz > T::zero()) {
            return Err(DataError::Invalid(format!("rate_hz must be positive, got {}", self.rate_hz)));
        }
        if !self.normalized {
            for (j, ch) in self.channels.iter().enumerate() {
                if ch.kind == ChannelKind::Cue
                    && (0..self.len()).any(|t| {
                        let v = self.data[(t, j)];
                        v != T::zero() && v != T::one()
                    })
                {
                    return Err(DataError::Invalid(format!("cue channel `{}` holds non-binary values", ch.label)));
                }
            }
        }
        Ok(())
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.data.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.rows() == 0
    }

    /// Number of channels.
    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix<T> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Matrix<T> {
        &mut self.data
    }

    pub fn step(&self, t: usize) -> &[T] {
        self.data.row(t)
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|c| c.label.as_str())
    }

    pub fn channel_index(&self, label: &str) -> Option<usize> {
        self.channels.iter().position(|c| c.label == label)
    }

    pub fn channels_of_kind(&self, kind: ChannelKind) -> Vec<usize> {
        self.channels.iter().enumerate().filter(|(_, c)| c.kind == kind).map(|(i, _)| i).collect()
    }

    /// Channel indices of the joint angles, ordered by joint.
    pub fn joint_channels(&self) -> Vec<usize> {
        let mut joints: Vec<(usize, usize)> = self
            .channels
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ChannelKind::Proprioceptive)
            .filter_map(|(i, c)| joint_index(&c.label).map(|k| (k, i)))
            .collect();
        joints.sort_unstable();
        joints.into_iter().map(|(_, i)| i).collect()
    }

    /// Returns a copy with the data replaced; shape must match.
    pub fn with_data(&self, data: Matrix<T>) -> Result<Self, DataError> {
        if data.cols() != self.dim() {
            return Err(DataError::ChannelCount { expected: self.dim(), found: data.cols() });
        }
        let mut out = self.clone();
        out.data = data;
        out.validate()?;
        Ok(out)
    }

    /// First `n` time steps.
    pub fn prefix(&self, n: usize) -> Matrix<T> {
        let n = n.min(self.len());
        Matrix::from_vec(n, self.dim(), self.data.as_slice()[..n * self.dim()].to_vec())
            .expect("prefix shape")
    }
}

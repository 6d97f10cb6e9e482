use super::{DataError, SensorimotorSequence};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Smallest standard deviation a channel is given; keeps constant channels finite.
pub const STD_FLOOR: f64 = 1e-6;

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Real> ChannelStats<T> {
    /// Pools every row of every sequence.
    pub fn fit(sequences: &[SensorimotorSequence<T>]) -> Result<Self, DataError> {
        let first = sequences.first().ok_or(DataError::Empty("no sequences to fit statistics on"))?;
        let d = first.dim();
        let mut rows: Vec<&[T]> = Vec::new();
        for seq in sequences {
            if seq.dim() != d {
                return Err(DataError::ChannelCount { expected: d, found: seq.dim() });
            }
            rows.extend((0..seq.len()).map(|t| seq.step(t)));
        }
        Self::fit_rows(&rows, d)
    }

    /// Statistics over a set of equally long observation rows.
    pub fn fit_rows(rows: &[&[T]], d: usize) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::Empty("no rows to fit statistics on"));
        }
        let n = T::from_usize(rows.len()).expect("row count");
        let mut mean = vec![T::zero(); d];
        for row in rows {
            if row.len() != d {
                return Err(DataError::ChannelCount { expected: d, found: row.len() });
            }
            for (m, &v) in mean.iter_mut().zip(row.iter()) {
                *m = *m + v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::zero(); d];
        for row in rows {
            for ((s, &v), &m) in var.iter_mut().zip(row.iter()).zip(&mean) {
                *s = *s + (v - m) * (v - m);
            }
        }
        let floor = T::lit(STD_FLOOR);
        let std = var.into_iter().map(|s| (s / n).sqrt().max(floor)).collect();
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, d: usize) -> Result<(), DataError> {
        if d != self.dim() {
            return Err(DataError::ChannelCount { expected: self.dim(), found: d });
        }
        Ok(())
    }

    pub fn normalize_row(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((&v, &m), &s)| (v - m) / s).collect()
    }

    pub fn denormalize_row(&self, x: &[T]) -> Vec<T> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((&v, &m), &s)| v * s + m).collect()
    }

    pub fn normalize_matrix(&self, m: &Matrix<T>) -> Result<Matrix<T>, DataError> {
        self.check(m.cols())?;
        let rows: Vec<Vec<T>> = m.row_iter().map(|r| self.normalize_row(r)).collect();
        Ok(Matrix::from_rows(&rows).unwrap_or_else(|| Matrix::zeros(0, m.cols())))
    }

    pub fn denormalize_matrix(&self, m: &Matrix<T>) -> Result<Matrix<T>, DataError> {
        self.check(m.cols())?;
        let rows: Vec<Vec<T>> = m.row_iter().map(|r| self.denormalize_row(r)).collect();
        Ok(Matrix::from_rows(&rows).unwrap_or_else(|| Matrix::zeros(0, m.cols())))
    }

    /// `(x − mean) / std` per channel.
    pub fn apply(&self, seq: &SensorimotorSequence<T>) -> Result<SensorimotorSequence<T>, DataError> {
        let data = self.normalize_matrix(seq.data())?;
        let mut out = seq.clone();
        out.normalized = true;
        *out.data_mut() = data;
        Ok(out)
    }

    /// Exact inverse of [`ChannelStats::apply`].
    pub fn invert(&self, seq: &SensorimotorSequence<T>) -> Result<SensorimotorSequence<T>, DataError> {
        let data = self.denormalize_matrix(seq.data())?;
        let mut out = seq.clone();
        out.normalized = false;
        *out.data_mut() = data;
        Ok(out)
    }

    pub fn apply_all(&self, seqs: &[SensorimotorSequence<T>]) -> Result<Vec<SensorimotorSequence<T>>, DataError> {
        seqs.iter().map(|s| self.apply(s)).collect()
    }
}

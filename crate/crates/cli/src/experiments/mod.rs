//! Experiment drivers. Each returns a [`ReportBundle`] whose summary holds
//! every number the acceptance checks read.

pub mod capacity;
pub mod fault_grid;
pub mod follow_through;
pub mod pick_place;
pub mod recall;
pub mod speed_accuracy;

use std::fmt::Write as _;

use skillmem::data::SensorimotorSequence;
use skillmem::linalg::Matrix;
use skillmem::tpc::{MemorizeReport, TpcModel};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{context}: {source}")]
    Module { context: &'static str, source: Box<dyn std::error::Error + Send + Sync> },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("missing model file {0}")]
    MissingModel(String),
    #[error("{0}")]
    Invalid(String),
}

/// Attaches experiment context to a module error.
pub trait Context<V> {
    fn ctx(self, context: &'static str) -> Result<V, ExperimentError>;
}

impl<V, E: std::error::Error + Send + Sync + 'static> Context<V> for Result<V, E> {
    fn ctx(self, context: &'static str) -> Result<V, ExperimentError> {
        self.map_err(|e| ExperimentError::Module { context, source: Box::new(e) })
    }
}

/// Fresh tPC model for a seed, trained on normalized sequences.
pub(crate) fn train_tpc(
    cfg: &ExperimentConfig,
    seed: u64,
    normalized: &[SensorimotorSequence<f64>],
) -> Result<(TpcModel<f64>, MemorizeReport<f64>), ExperimentError> {
    let d = normalized.first().ok_or_else(|| ExperimentError::Invalid("no training data".into()))?.dim();
    let mut model = TpcModel::init(cfg.hidden, d, cfg.activation, seed);
    let report = model.memorize(normalized, &cfg.train_config(seed), &cfg.inference_config()).ctx("tpc training")?;
    Ok((model, report))
}

/// `epoch,<name>` rows.
pub(crate) fn curve_csv(name: &str, curve: &[f64]) -> String {
    let mut out = format!("epoch,{name}\n");
    for (i, v) in curve.iter().enumerate() {
        let _ = writeln!(out, "{i},{v}");
    }
    out
}

/// Per-step mean of a set of equally shaped sequences.
pub(crate) fn mean_matrix(seqs: &[&SensorimotorSequence<f64>]) -> Matrix<f64> {
    let (t, d) = seqs[0].data().shape();
    let n = seqs.len() as f64;
    Matrix::from_fn(t, d, |i, j| seqs.iter().map(|s| s.data()[(i, j)]).sum::<f64>() / n)
}

/// Root-mean-square difference per column, pooled over all rows of all pairs.
pub(crate) fn per_channel_rmse(pairs: &[(&Matrix<f64>, &Matrix<f64>)]) -> Vec<f64> {
    let d = pairs[0].0.cols();
    let mut se = vec![0.0; d];
    let mut n = 0usize;
    for (a, b) in pairs {
        for t in 0..a.rows() {
            for (j, s) in se.iter_mut().enumerate() {
                *s += (a[(t, j)] - b[(t, j)]).powi(2);
            }
        }
        n += a.rows();
    }
    se.into_iter().map(|s| (s / n as f64).sqrt()).collect()
}

pub(crate) fn rmse(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    (skillmem::linalg::sq_dist(a.as_slice(), b.as_slice()) / a.as_slice().len() as f64).sqrt()
}

pub(crate) fn matrix_csv(header: &[&str], m: &Matrix<f64>) -> String {
    let mut out = format!("step,{}\n", header.join(","));
    for (t, row) in m.row_iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{t},{}", cells.join(","));
    }
    out
}

//! Demonstration data: sequences, normalization, synthetic generators and file I/O.

pub mod demo;
mod io;
mod normalize;
mod sequence;

pub use io::{load_dataset, read_dataset, save_dataset, write_dataset, DatasetFileError, DATASET_MAGIC};
pub use normalize::{ChannelStats, STD_FLOOR};
pub use sequence::{joint_index, joint_label, Channel, ChannelKind, SensorimotorSequence};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("empty data: {0}")]
    Empty(&'static str),
    #[error("channel count mismatch: expected {expected}, found {found}")]
    ChannelCount { expected: usize, found: usize },
    #[error("non-finite value in sequence")]
    NonFinite,
    #[error("{0}")]
    Invalid(String),
}

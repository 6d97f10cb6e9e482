//! Comparison models: a per-channel Z-score detector built from demonstration
//! statistics, and discrete-time RNNs trained with backpropagation through time.

pub mod rnn;
pub mod zscore;

pub use rnn::{RnnError, RnnGradients, RnnModel, RnnVariant};
pub use zscore::{zscore_errors, StatsMode, ZscoreDetector};

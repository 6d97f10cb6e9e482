//! Temporal predictive coding sequence memory for sensorimotor skills, with a
//! redundant planar arm to demonstrate and execute them, an energy-based fault
//! monitor, and the Z-score and RNN baselines it is compared against.
//!
//! Everything numeric is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`, which the experiments use.

pub mod arm;
pub mod baselines;
pub mod data;
pub mod linalg;
pub mod model_file;
pub mod monitor;
pub mod optim;
pub mod scalar;
pub mod textio;
pub mod tpc;

pub type Matrix = linalg::Matrix<f64>;
pub type TpcModel = tpc::TpcModel<f64>;
pub type HiddenState = tpc::HiddenState<f64>;
pub type ErrorPair = tpc::ErrorPair<f64>;
pub type RecallResult = tpc::RecallResult<f64>;
pub type InferenceConfig = tpc::InferenceConfig<f64>;
pub type TrainConfig = tpc::TrainConfig<f64>;
pub type SensorimotorSequence = data::SensorimotorSequence<f64>;
pub type ChannelStats = data::ChannelStats<f64>;
pub type ArmModel = arm::ArmModel<f64>;
pub type FaultSpec = arm::FaultSpec<f64>;
pub type RnnModel = baselines::RnnModel<f64>;
pub type ZscoreDetector = baselines::ZscoreDetector<f64>;
pub type DetectionReport = monitor::DetectionReport<f64>;
pub type DetectionThreshold = monitor::DetectionThreshold<f64>;

//! Experiment runner behind the `san` binary: run configuration, dataset
//! resolution, training, evaluation, gradient checking and the reports each
//! subcommand prints.

mod commands;
mod config;
mod dataset;
mod gradcheck;
mod protocol;
mod train;

pub use commands::{
    cmd_decompose, cmd_eval, cmd_gen, cmd_gradcheck, cmd_inspect, cmd_train, evaluate, inspect_complex,
    DecomposeReport, EvalReport, InspectReport, OrderReport, TrainSummary, CHECKPOINT_FILE, METRICS_FILE,
    METRICS_SCHEMA_VERSION, RUN_MANIFEST_FILE,
};
pub use config::{DataConfig, MdiParams, OptimConfig, RunConfig, Task};
pub use dataset::{Dataset, COMPLEX_FILE, MANIFEST_FILE, MDI_FILE, TEST_FILE, TRAIN_FILE};
pub use gradcheck::{gradcheck, gradcheck_complex, group_names, GradcheckReport, GroupReport, MAX_GRADCHECK_EDGES};
pub use protocol::{mdi_mask_study, mean_accuracy, MaskResult};
pub use train::{
    mdi_predictions, metrics_csv, parse_metrics_csv, train, trajectory_accuracy, Checkpoint, EpochMetrics, StopReason,
    TensorRecord, TrainOutcome, CHECKPOINT_VERSION, DIVERGENCE_EPOCHS, DIVERGENCE_RATIO, METRICS_HEADER,
};

use thiserror::Error;

use crate::complex::ComplexError;
use crate::data::DataError;
use crate::hodge::HodgeError;
use crate::nn::NnError;
use crate::san::SanError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(#[from] DataError),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("checkpoint was trained on complex {expected}, dataset complex is {actual}")]
    FingerprintMismatch { expected: String, actual: String },
    #[error("diverged loss: {0}")]
    DivergedLoss(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl ExperimentError {
    /// Process exit status: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) | Self::Io(_) | Self::FingerprintMismatch { .. } => 3,
            Self::DivergedLoss(_) | Self::Numeric(_) => 4,
        }
    }
}

impl From<ComplexError> for ExperimentError {
    fn from(e: ComplexError) -> Self {
        Self::Data(DataError::Complex(e))
    }
}

impl From<HodgeError> for ExperimentError {
    fn from(e: HodgeError) -> Self {
        match e {
            HodgeError::EpsilonOutOfRange { .. } => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<NnError> for ExperimentError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::InvalidControl(_) | NnError::InvalidLabel { .. } => Self::Config(e.to_string()),
            _ => Self::Numeric(e.to_string()),
        }
    }
}

impl From<SanError> for ExperimentError {
    fn from(e: SanError) -> Self {
        match e {
            SanError::InvalidConfig(m) => Self::Config(m),
            SanError::Complex(c) => c.into(),
            SanError::Hodge(h) => h.into(),
            SanError::Nn(n) => n.into(),
        }
    }
}

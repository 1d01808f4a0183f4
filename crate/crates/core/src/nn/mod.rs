//! Training machinery: the differentiation tape, initialisers, ADAM and the
//! plateau/early-stopping controls.

mod init;
mod optim;
mod schedule;
mod tape;

pub use init::xavier_uniform;
pub use optim::{AdamConfig, AdamState};
pub use schedule::{EarlyStopping, PlateauScheduler, TrainControl};
pub use tape::{Activation, Fault, Gradients, Tape, Var};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("loss must be a 1x1 scalar, got {0:?}")]
    NonScalarLoss((usize, usize)),
    #[error("mask selects no entries")]
    EmptyMask,
    #[error("{0} needs at least one input")]
    EmptyInput(&'static str),
    #[error("row {0} has an empty neighbourhood")]
    EmptyNeighborhood(usize),
    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("invalid training control: {0}")]
    InvalidControl(String),
}

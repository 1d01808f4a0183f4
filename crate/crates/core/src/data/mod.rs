//! Datasets: Delaunay-based synthetic flow trajectories, missing-data
//! imputation instances on co-authorship style complexes, random complexes
//! and the plain-text file formats.

pub mod delaunay;
mod flow;
mod io;
mod mdi;
mod random;

pub use delaunay::{circumcenter, delaunay, Point};
pub use flow::{generate_synthetic_flow, FlowParams, SyntheticFlow, TrajectoryInstance};
pub use io::{
    load_complex, load_mdi, load_signals, load_trajectories, save_complex, save_mdi, save_signals,
    save_trajectories, write_manifest,
};
pub use mdi::{
    coauthorship_complex, generate_mdi_instance, mdi_masks, within_tolerance, CoauthorshipParams, MdiInstance,
    ValueDistribution, RELATIVE_TOLERANCE,
};
pub use random::random_complex;

use thiserror::Error;

use crate::complex::ComplexError;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point set is degenerate (all points collinear or coincident)")]
    DegenerateTriangulation,
    #[error("1-skeleton is disconnected after punching the holes")]
    DisconnectedAfterHolePunch,
    #[error("punched mesh has {0} independent cycles instead of 2; a hole reaches the boundary (use more points or another seed)")]
    HolesNotEnclosed(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dimension mismatch: expected {expected}, found {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("input contains no data")]
    EmptyInput,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

//! Simplicial attention networks.
//!
//! The crate is organised bottom-up:
//!
//! - [`complex`]: simplicial complexes, incidence matrices, Hodge Laplacians
//!   and neighbourhoods.
//! - [`hodge`]: Hodge decomposition, exact and sparse harmonic projectors.
//! - [`nn`]: a small reverse-mode tape, initialisers, ADAM, plateau
//!   scheduling and early stopping.
//! - [`san`]: simplicial convolutional and attentional layers, multi-head
//!   composition, readouts and reductions to earlier architectures.
//! - [`data`]: Delaunay-based synthetic flow trajectories, missing-data
//!   imputation instances and the text file formats.
//! - [`experiment`]: the training, evaluation, inspection and gradient-check
//!   drivers behind the `san` binary.

pub mod complex;
pub mod data;
pub mod dense;
pub mod experiment;
pub mod hodge;
pub mod nn;
pub mod san;
pub mod sparse;

pub use complex::{ComplexError, Laplacians, NeighborhoodTable, Simplex, SimplicialComplex};
pub use dense::Matrix;
pub use sparse::{LinearOperator, SparseMatrix, SparsityPattern};

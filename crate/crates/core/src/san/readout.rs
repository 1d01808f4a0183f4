use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SanError;
use crate::dense::Matrix;
use crate::nn::{xavier_uniform, NnError, Tape, Var};

/// Head placed after the last layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ReadoutConfig {
    /// Column mean over simplices, then `tanh(x W1 + b1) W2 + b2`.
    MeanPoolMlp { hidden: usize, classes: usize },
    /// The single final feature of each simplex, passed through.
    PerSimplexLinear,
}

impl ReadoutConfig {
    pub(crate) fn validate(&self, width: usize) -> Result<(), SanError> {
        match *self {
            Self::MeanPoolMlp { hidden, classes } if hidden == 0 || classes < 2 => {
                Err(SanError::InvalidConfig("readout needs hidden >= 1 and classes >= 2".into()))
            }
            Self::PerSimplexLinear if width != 1 => {
                Err(SanError::InvalidConfig(format!("per-simplex readout needs one final feature, got {width}")))
            }
            _ => Ok(()),
        }
    }

    /// Readout tensors in order `W1, b1, W2, b2`; biases start at zero.
    pub(crate) fn init<R: Rng + ?Sized>(&self, width: usize, gain: f64, rng: &mut R) -> Vec<Matrix> {
        match *self {
            Self::MeanPoolMlp { hidden, classes } => vec![
                xavier_uniform(width, hidden, gain, rng),
                Matrix::zeros(1, hidden),
                xavier_uniform(hidden, classes, gain, rng),
                Matrix::zeros(1, classes),
            ],
            Self::PerSimplexLinear => Vec::new(),
        }
    }

    pub(crate) fn shapes(&self, width: usize) -> Vec<(usize, usize)> {
        match *self {
            Self::MeanPoolMlp { hidden, classes } => vec![(width, hidden), (1, hidden), (hidden, classes), (1, classes)],
            Self::PerSimplexLinear => Vec::new(),
        }
    }

    pub fn param_count(&self, width: usize) -> usize {
        self.shapes(width).iter().map(|(r, c)| r * c).sum()
    }

    pub(crate) fn forward(&self, tape: &Tape, z: Var, vars: &[Var]) -> Result<Var, NnError> {
        match *self {
            Self::MeanPoolMlp { .. } => {
                let pooled = tape.mean_rows(z)?;
                let h = tape.matmul(pooled, vars[0])?;
                let h = tape.tanh(tape.add_row(h, vars[1])?);
                let logits = tape.matmul(h, vars[2])?;
                tape.add_row(logits, vars[3])
            }
            Self::PerSimplexLinear => Ok(z),
        }
    }
}

/// Column means of `z` as a `1 × F` row.
pub fn mean_pool(z: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, z.cols());
    for r in 0..z.rows() {
        for (o, x) in out.row_mut(0).iter_mut().zip(z.row(r)) {
            *o += x;
        }
    }
    out.scale(1.0 / z.rows().max(1) as f64)
}

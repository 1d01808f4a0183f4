//! Simplicial convolutional and attentional layers.
//!
//! A layer maps an `N_k × F_in` feature block to `N_k × F_out` by filtering
//! over lower and upper neighbourhoods plus a harmonic term:
//!
//! ```text
//! Z' = σ( Σ_p L_d^p Z W_d,p + Σ_p L_u^p Z W_u,p + P̂ Z W_h )
//! ```
//!
//! With attention enabled `L_d` and `L_u` are replaced by attentional
//! Laplacians whose entries are softmax-normalised scores on the Laplacian
//! supports. Turning individual pieces off yields the earlier simplicial
//! architectures, see [`Architecture`].

mod config;
mod layer;
mod model;
mod params;
mod readout;

pub use config::{param_count, reduction_config, Architecture, HarmonicMode, HeadCombine, SanLayerConfig};
pub use layer::{
    attention_coefficients, multi_head, san_layer_forward, scn_layer_forward, transform_features,
    AttentionalLaplacians, LayerOperators, LEAKY_SLOPE,
};
pub use model::{ModelConfig, ModelOperators, ModelVars, SanModel};
pub use params::{HeadParams, HeadVars, LayerVars, SanLayerParams};
pub use readout::{mean_pool, ReadoutConfig};

use thiserror::Error;

use crate::complex::ComplexError;
use crate::hodge::HodgeError;
use crate::nn::NnError;

#[derive(Debug, Error, PartialEq)]
pub enum SanError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Hodge(#[from] HodgeError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[cfg(test)]
mod tests;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layer::layer_forward;
use super::{param_count, HarmonicMode, LayerOperators, LayerVars, ReadoutConfig, SanError, SanLayerConfig, SanLayerParams};
use crate::complex::SimplicialComplex;
use crate::dense::Matrix;
use crate::hodge::ProjectorSpec;
use crate::nn::{Tape, Var};

/// A stack of layers on signals of one simplex order, plus a readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub order: usize,
    pub layers: Vec<SanLayerConfig>,
    pub readout: ReadoutConfig,
}

impl ModelConfig {
    pub fn input_width(&self) -> usize {
        self.layers.first().map_or(0, |l| l.f_in)
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, SanLayerConfig::out_width)
    }

    pub fn validate(&self) -> Result<(), SanError> {
        if self.layers.is_empty() {
            return Err(SanError::InvalidConfig("model needs at least one layer".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate()?;
            if i > 0 && layer.f_in != self.layers[i - 1].out_width() {
                return Err(SanError::InvalidConfig(format!(
                    "layer {i} expects {} input features, previous layer emits {}",
                    layer.f_in,
                    self.layers[i - 1].out_width()
                )));
            }
        }
        self.readout.validate(self.output_width())
    }

    /// Registered scalars over all layers and the readout.
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(param_count).sum::<usize>() + self.readout.param_count(self.output_width())
    }
}

/// Per-layer operators on one complex. Layers share the Laplacians and
/// neighbourhoods; projectors are built once per distinct setting.
#[derive(Clone, Debug)]
pub struct ModelOperators {
    pub layers: Vec<LayerOperators>,
}

impl ModelOperators {
    pub fn new(complex: &SimplicialComplex, config: &ModelConfig) -> Result<Self, SanError> {
        let base = LayerOperators::new(complex, config.order, &HarmonicMode::Off)?;
        let mut built: Vec<(ProjectorSpec, LayerOperators)> = Vec::new();
        let mut full = None;
        let mut layers = Vec::with_capacity(config.layers.len());
        for layer in &config.layers {
            let ops = match layer.harmonic {
                HarmonicMode::Projector(spec) => match built.iter().find(|(s, _)| *s == spec) {
                    Some((_, ops)) => ops.clone(),
                    None => {
                        if full.is_none() {
                            full = Some(complex.laplacian(config.order)?.full);
                        }
                        let mut ops = base.clone();
                        ops.set_projector(full.as_ref().expect("set above"), &spec)?;
                        built.push((spec, ops.clone()));
                        ops
                    }
                },
                HarmonicMode::Skip | HarmonicMode::Off => base.clone(),
            };
            layers.push(ops);
        }
        Ok(Self { layers })
    }

    pub fn len(&self) -> usize {
        self.layers.first().map_or(0, LayerOperators::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reoriented(&self, signs: &[f64]) -> Self {
        Self { layers: self.layers.iter().map(|l| l.reoriented(signs)).collect() }
    }
}

/// Tape handles of a whole model.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub layers: Vec<LayerVars>,
    pub readout: Vec<Var>,
}

impl ModelVars {
    /// Handles in the canonical tensor order of [`SanModel::tensors`].
    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.layers.iter().flat_map(LayerVars::vars).collect();
        out.extend(&self.readout);
        out
    }
}

/// Model parameters together with their configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct SanModel {
    pub config: ModelConfig,
    pub layers: Vec<SanLayerParams>,
    pub readout: Vec<Matrix>,
}

impl SanModel {
    /// Xavier-uniform initialisation with the given gain, layer by layer,
    /// then the readout.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, gain: f64, rng: &mut R) -> Result<Self, SanError> {
        config.validate()?;
        let layers = config.layers.iter().map(|l| SanLayerParams::init(l, gain, rng)).collect();
        let readout = config.readout.init(config.output_width(), gain, rng);
        Ok(Self { config, layers, readout })
    }

    /// Rebuilds a model from tensors listed in canonical order.
    pub fn from_tensors(config: ModelConfig, tensors: Vec<Matrix>) -> Result<Self, SanError> {
        let mut model = Self {
            layers: config.layers.iter().map(SanLayerParams::zeros).collect(),
            readout: config.readout.shapes(config.output_width()).iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            config,
        };
        model.config.validate()?;
        let mut slots = model.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(SanError::InvalidConfig(format!("expected {} tensors, got {}", slots.len(), tensors.len())));
        }
        for (slot, t) in slots.iter_mut().zip(tensors) {
            if slot.shape() != t.shape() {
                return Err(SanError::InvalidConfig(format!(
                    "tensor shape {:?} does not match expected {:?}",
                    t.shape(),
                    slot.shape()
                )));
            }
            **slot = t;
        }
        Ok(model)
    }

    /// Every tensor: layers in order (heads in order within each), then
    /// the readout.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = self.layers.iter().flat_map(SanLayerParams::tensors).collect();
        out.extend(&self.readout);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = self.layers.iter_mut().flat_map(SanLayerParams::tensors_mut).collect();
        out.extend(self.readout.iter_mut());
        out
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.tensors().iter().map(|m| m.shape()).collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }

    pub fn bind(&self, tape: &Tape, trainable: bool) -> ModelVars {
        let readout = self
            .readout
            .iter()
            .map(|m| if trainable { tape.param(m.clone()) } else { tape.constant(m.clone()) })
            .collect();
        ModelVars { layers: self.layers.iter().map(|l| l.bind(tape, trainable)).collect(), readout }
    }

    /// Forward pass. With `dropout = Some((p, rng))` inverted dropout is
    /// applied to every layer output that feeds learnable weights.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        tape: &Tape,
        vars: &ModelVars,
        ops: &ModelOperators,
        x: Var,
        mut dropout: Option<(f64, &mut R)>,
    ) -> Result<Var, SanError> {
        let n_layers = self.config.layers.len();
        let mlp = matches!(self.config.readout, ReadoutConfig::MeanPoolMlp { .. });
        let mut z = x;
        for (i, ((cfg, lv), lops)) in self.config.layers.iter().zip(&vars.layers).zip(&ops.layers).enumerate() {
            z = layer_forward(tape, z, lops, cfg, lv)?;
            if let Some((p, rng)) = dropout.as_mut() {
                if i + 1 < n_layers || mlp {
                    z = tape.dropout(z, *p, true, &mut **rng);
                }
            }
        }
        Ok(self.config.readout.forward(tape, z, &vars.readout)?)
    }

    /// Evaluation-mode output: class logits (`1 × C`) or per-simplex
    /// predictions (`N × 1`).
    pub fn predict(&self, ops: &ModelOperators, x: &Matrix) -> Result<Matrix, SanError> {
        let tape = Tape::new();
        let vars = self.bind(&tape, false);
        let xv = tape.constant(x.clone());
        let out = self.forward::<rand_chacha::ChaCha8Rng>(&tape, &vars, ops, xv, None)?;
        Ok(tape.value(out).as_ref().clone())
    }
}

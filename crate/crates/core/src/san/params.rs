use rand::Rng;

use super::{SanError, SanLayerConfig};
use crate::dense::Matrix;
use crate::nn::{xavier_uniform, Tape, Var};

/// Learnable tensors of one attention head.
///
/// With tied weights `w_down` is empty and the lower branch uses `w_up`;
/// with shared attention `a_down` is `None` and both branches use `a_up`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams {
    pub w_down: Vec<Matrix>,
    pub w_up: Vec<Matrix>,
    pub w_h: Option<Matrix>,
    /// `2 J_u F' × 1`.
    pub a_up: Option<Matrix>,
    /// `2 J_d F' × 1`.
    pub a_down: Option<Matrix>,
}

impl HeadParams {
    fn init<R: Rng + ?Sized>(config: &SanLayerConfig, gain: f64, rng: &mut R) -> Self {
        let (f, g) = (config.f_in, config.f_out);
        let w_down = (0..config.stored_down()).map(|_| xavier_uniform(f, g, gain, rng)).collect();
        let w_up = (0..config.j_up).map(|_| xavier_uniform(f, g, gain, rng)).collect();
        let w_h = config.harmonic.has_weight().then(|| xavier_uniform(f, g, gain, rng));
        let a_up = config.has_up_attention().then(|| xavier_uniform(2 * config.j_up * g, 1, gain, rng));
        let a_down = config.has_down_attention().then(|| xavier_uniform(2 * config.j_down * g, 1, gain, rng));
        Self { w_down, w_up, w_h, a_up, a_down }
    }

    /// All-zero tensors with the registered shapes.
    pub fn zeros(config: &SanLayerConfig) -> Self {
        let (f, g) = (config.f_in, config.f_out);
        Self {
            w_down: vec![Matrix::zeros(f, g); config.stored_down()],
            w_up: vec![Matrix::zeros(f, g); config.j_up],
            w_h: config.harmonic.has_weight().then(|| Matrix::zeros(f, g)),
            a_up: config.has_up_attention().then(|| Matrix::zeros(2 * config.j_up * g, 1)),
            a_down: config.has_down_attention().then(|| Matrix::zeros(2 * config.j_down * g, 1)),
        }
    }

    /// Tensors in canonical order: lower weights, upper weights, harmonic
    /// weight, upper attention, lower attention.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut out: Vec<&Matrix> = self.w_down.iter().chain(&self.w_up).collect();
        out.extend(self.w_h.iter().chain(&self.a_up).chain(&self.a_down));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut out: Vec<&mut Matrix> = self.w_down.iter_mut().chain(self.w_up.iter_mut()).collect();
        out.extend(self.w_h.iter_mut().chain(self.a_up.iter_mut()).chain(self.a_down.iter_mut()));
        out
    }

    fn check(&self, config: &SanLayerConfig) -> Result<(), SanError> {
        let expected = Self::zeros(config);
        let same = self.tensors().len() == expected.tensors().len()
            && self.w_down.len() == expected.w_down.len()
            && self.w_up.len() == expected.w_up.len()
            && self.tensors().iter().zip(expected.tensors()).all(|(a, b)| a.shape() == b.shape());
        if same {
            Ok(())
        } else {
            Err(SanError::InvalidConfig("parameter shapes do not match the layer configuration".into()))
        }
    }
}

/// Parameters of one layer, one entry per head.
#[derive(Clone, Debug, PartialEq)]
pub struct SanLayerParams {
    pub heads: Vec<HeadParams>,
}

impl SanLayerParams {
    /// Xavier-uniform initialisation of every tensor, heads in order.
    pub fn init<R: Rng + ?Sized>(config: &SanLayerConfig, gain: f64, rng: &mut R) -> Self {
        Self { heads: (0..config.heads).map(|_| HeadParams::init(config, gain, rng)).collect() }
    }

    pub fn zeros(config: &SanLayerConfig) -> Self {
        Self { heads: (0..config.heads).map(|_| HeadParams::zeros(config)).collect() }
    }

    pub fn tensors(&self) -> Vec<&Matrix> {
        self.heads.iter().flat_map(HeadParams::tensors).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.heads.iter_mut().flat_map(HeadParams::tensors_mut).collect()
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors().iter().map(|m| m.len()).sum()
    }

    /// Checks head count and every tensor shape against `config`.
    pub fn check(&self, config: &SanLayerConfig) -> Result<(), SanError> {
        if self.heads.len() != config.heads {
            return Err(SanError::InvalidConfig(format!(
                "expected {} heads, got {}",
                config.heads,
                self.heads.len()
            )));
        }
        self.heads.iter().try_for_each(|h| h.check(config))
    }

    /// Registers every tensor on the tape, trainable when `trainable`.
    pub fn bind(&self, tape: &Tape, trainable: bool) -> LayerVars {
        let put = |m: &Matrix| if trainable { tape.param(m.clone()) } else { tape.constant(m.clone()) };
        LayerVars {
            heads: self
                .heads
                .iter()
                .map(|h| HeadVars {
                    w_down: h.w_down.iter().map(put).collect(),
                    w_up: h.w_up.iter().map(put).collect(),
                    w_h: h.w_h.as_ref().map(put),
                    a_up: h.a_up.as_ref().map(put),
                    a_down: h.a_down.as_ref().map(put),
                })
                .collect(),
        }
    }
}

/// Tape handles mirroring [`HeadParams`].
#[derive(Clone, Debug)]
pub struct HeadVars {
    pub w_down: Vec<Var>,
    pub w_up: Vec<Var>,
    pub w_h: Option<Var>,
    pub a_up: Option<Var>,
    pub a_down: Option<Var>,
}

impl HeadVars {
    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = self.w_down.iter().chain(&self.w_up).copied().collect();
        out.extend(self.w_h.iter().chain(&self.a_up).chain(&self.a_down));
        out
    }
}

#[derive(Clone, Debug)]
pub struct LayerVars {
    pub heads: Vec<HeadVars>,
}

impl LayerVars {
    /// Handles in the same canonical order as [`SanLayerParams::tensors`].
    pub fn vars(&self) -> Vec<Var> {
        self.heads.iter().flat_map(HeadVars::vars).collect()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::san::{param_count, reduction_config, Architecture, HarmonicMode, HeadCombine};

    #[test]
    fn registered_scalars_match_param_count() {
        let base = SanLayerConfig::new(3, 2, 2)
            .with_harmonic(HarmonicMode::from_order(0.5, 3))
            .with_heads(2, HeadCombine::Average);
        for arch in Architecture::ALL {
            let c = reduction_config(arch, &base);
            let p = SanLayerParams::init(&c, 1.0, &mut ChaCha8Rng::seed_from_u64(1));
            assert_eq!(p.scalar_count(), param_count(&c), "{arch}");
            assert!(p.check(&c).is_ok());
        }
    }

    #[test]
    fn check_rejects_wrong_shapes() {
        let c = SanLayerConfig::new(2, 2, 1);
        let mut p = SanLayerParams::zeros(&c);
        p.heads[0].w_up[0] = Matrix::zeros(3, 2);
        assert!(p.check(&c).is_err());
    }
}

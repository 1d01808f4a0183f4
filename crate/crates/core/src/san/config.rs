use serde::{Deserialize, Serialize};

use super::SanError;
use crate::hodge::ProjectorSpec;
use crate::nn::Activation;

/// How the harmonic term `P̂ Z W_h` is formed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HarmonicMode {
    /// `P̂ = (I - εL)^J`.
    Projector(ProjectorSpec),
    /// `P̂ = I`: the projector of order zero, a plain skip connection.
    Skip,
    /// No harmonic term and no `W_h`.
    Off,
}

impl HarmonicMode {
    /// Order `0` gives [`HarmonicMode::Skip`].
    pub fn from_order(epsilon: f64, order: usize) -> Self {
        if order == 0 {
            Self::Skip
        } else {
            Self::Projector(ProjectorSpec::new(epsilon, order))
        }
    }

    pub fn has_weight(&self) -> bool {
        !matches!(self, Self::Off)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadCombine {
    Concat,
    Average,
}

/// Hyperparameters of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SanLayerConfig {
    pub f_in: usize,
    pub f_out: usize,
    pub j_down: usize,
    pub j_up: usize,
    pub harmonic: HarmonicMode,
    pub activation: Activation,
    pub heads: usize,
    pub head_combine: HeadCombine,
    pub attention_enabled: bool,
    /// One attention vector serves both branches.
    pub shared_attention: bool,
    /// The lower branch reuses the upper filter weights.
    pub tie_weights: bool,
}

impl SanLayerConfig {
    /// Single-head attentional layer with equal filter orders, identity
    /// activation and a skip connection.
    pub fn new(f_in: usize, f_out: usize, j: usize) -> Self {
        Self {
            f_in,
            f_out,
            j_down: j,
            j_up: j,
            harmonic: HarmonicMode::Skip,
            activation: Activation::Identity,
            heads: 1,
            head_combine: HeadCombine::Concat,
            attention_enabled: true,
            shared_attention: false,
            tie_weights: false,
        }
    }

    pub fn with_harmonic(mut self, harmonic: HarmonicMode) -> Self {
        self.harmonic = harmonic;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_heads(mut self, heads: usize, combine: HeadCombine) -> Self {
        self.heads = heads;
        self.head_combine = combine;
        self
    }

    pub fn without_attention(mut self) -> Self {
        self.attention_enabled = false;
        self
    }

    /// Width of the layer output after head combination.
    pub fn out_width(&self) -> usize {
        match self.head_combine {
            HeadCombine::Concat => self.heads * self.f_out,
            HeadCombine::Average => self.f_out,
        }
    }

    /// Number of lower-branch weight matrices actually stored.
    pub(crate) fn stored_down(&self) -> usize {
        if self.tie_weights {
            0
        } else {
            self.j_down
        }
    }

    pub(crate) fn has_up_attention(&self) -> bool {
        self.attention_enabled && self.j_up > 0
    }

    pub(crate) fn has_down_attention(&self) -> bool {
        self.attention_enabled && !self.shared_attention && self.j_down > 0
    }

    pub fn validate(&self) -> Result<(), SanError> {
        let fail = |m: &str| Err(SanError::InvalidConfig(m.to_string()));
        if self.f_in == 0 || self.f_out == 0 {
            return fail("feature widths must be at least 1");
        }
        if self.heads == 0 {
            return fail("at least one head is required");
        }
        if self.j_down == 0 && self.j_up == 0 && !self.harmonic.has_weight() {
            return fail("layer has no terms");
        }
        if self.tie_weights && self.j_down != self.j_up {
            return fail("tied weights need j_down == j_up");
        }
        if self.attention_enabled && self.shared_attention && self.j_down != self.j_up {
            return fail("shared attention needs j_down == j_up");
        }
        if let HarmonicMode::Projector(spec) = self.harmonic {
            if spec.order == 0 || !(spec.epsilon > 0.0) {
                return fail("projector needs epsilon > 0 and order >= 1");
            }
        }
        Ok(())
    }
}

/// Number of scalars registered for one layer.
///
/// For an untied, attentional, single-head layer this is
/// `2 J_d F' + 2 J_u F' + (J_d + J_u) F F' + F F'`; tying, sharing,
/// disabling attention or dropping the harmonic term remove the
/// corresponding blocks. Multiplied by the number of heads.
pub fn param_count(config: &SanLayerConfig) -> usize {
    let (f, g) = (config.f_in, config.f_out);
    let mut per_head = (config.stored_down() + config.j_up) * f * g;
    if config.harmonic.has_weight() {
        per_head += f * g;
    }
    if config.has_up_attention() {
        per_head += 2 * config.j_up * g;
    }
    if config.has_down_attention() {
        per_head += 2 * config.j_down * g;
    }
    per_head * config.heads
}

/// Named layer families expressible as configurations of the general layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    San,
    SanNoHarmonic,
    Scnn,
    Snn,
    Sat,
    Gat,
}

impl Architecture {
    pub const ALL: [Architecture; 6] =
        [Self::San, Self::SanNoHarmonic, Self::Scnn, Self::Snn, Self::Sat, Self::Gat];

    pub fn name(self) -> &'static str {
        match self {
            Self::San => "san",
            Self::SanNoHarmonic => "san-no-harmonic",
            Self::Scnn => "scnn",
            Self::Snn => "snn",
            Self::Sat => "sat",
            Self::Gat => "gat",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Rewrites `base` into the given family, keeping widths, activation and
/// head settings.
pub fn reduction_config(target: Architecture, base: &SanLayerConfig) -> SanLayerConfig {
    let mut c = base.clone();
    c.shared_attention = false;
    c.tie_weights = false;
    match target {
        Architecture::San => c.attention_enabled = true,
        Architecture::SanNoHarmonic => {
            c.attention_enabled = true;
            c.harmonic = HarmonicMode::Skip;
        }
        Architecture::Scnn => {
            c.attention_enabled = false;
            c.harmonic = HarmonicMode::Skip;
        }
        Architecture::Snn => {
            c.attention_enabled = false;
            c.harmonic = HarmonicMode::Off;
            c.tie_weights = true;
            c.j_down = 1;
            c.j_up = 1;
        }
        Architecture::Sat => {
            c.attention_enabled = true;
            c.shared_attention = true;
            c.harmonic = HarmonicMode::Off;
            c.j_down = 1;
            c.j_up = 1;
        }
        Architecture::Gat => {
            c.attention_enabled = true;
            c.harmonic = HarmonicMode::Off;
            c.j_down = 0;
            c.j_up = 1;
        }
    }
    c
}

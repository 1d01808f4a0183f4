use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::data::{CoauthorshipParams, FlowParams, ValueDistribution};
use crate::hodge::ProjectorSpec;
use crate::nn::{Activation, TrainControl};
use crate::san::{reduction_config, Architecture, HarmonicMode, ModelConfig, ReadoutConfig, SanLayerConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Trajectory,
    Mdi,
}

impl Task {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "trajectory" => Some(Self::Trajectory),
            "mdi" => Some(Self::Mdi),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimConfig {
    pub lr: f64,
    pub l2: f64,
    pub dropout: f64,
    pub factor: f64,
    pub scheduler_patience: usize,
    pub stop_patience: usize,
    pub max_epochs: usize,
    /// Trajectories per ADAM step; the imputation task is full batch.
    pub batch_size: usize,
    pub init_gain: f64,
}

impl OptimConfig {
    pub fn control(&self) -> TrainControl {
        TrainControl::new(self.factor, self.scheduler_patience, self.stop_patience, self.l2, self.dropout)
    }
}

/// Imputation dataset generator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdiParams {
    pub complex: CoauthorshipParams,
    pub order: usize,
    pub distribution: ValueDistribution,
    pub missing_fraction: f64,
    pub seed: u64,
}

impl MdiParams {
    pub fn desk_scale(seed: u64) -> Self {
        Self {
            complex: CoauthorshipParams::desk_scale(seed),
            order: 1,
            distribution: ValueDistribution::default(),
            missing_fraction: 0.3,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Directory written by `gen`; when absent the generator settings below
    /// are used in memory.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    pub flow: FlowParams,
    pub mdi: MdiParams,
    /// Random per-edge orientation flips on every test trajectory.
    #[serde(default)]
    pub test_orientation_flips: bool,
}

/// A fully specified run. Serialized verbatim into manifests and
/// checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    pub arch: Architecture,
    pub model: ModelConfig,
    pub optim: OptimConfig,
    pub data: DataConfig,
    pub seed: u64,
}

impl RunConfig {
    /// Single-layer SAN on edge flows: 4 features, `J = 3` both ways,
    /// harmonic filter `(I - 0.9 L)^5`, mean-pool MLP readout.
    pub fn trajectory(seed: u64) -> Self {
        let layer = SanLayerConfig::new(1, 4, 3)
            .with_harmonic(HarmonicMode::Projector(ProjectorSpec::new(0.9, 5)))
            .with_activation(Activation::Tanh);
        Self {
            task: Task::Trajectory,
            arch: Architecture::San,
            model: ModelConfig { order: 1, layers: vec![layer], readout: ReadoutConfig::MeanPoolMlp { hidden: 4, classes: 2 } },
            optim: OptimConfig {
                lr: 0.01,
                l2: 0.003,
                dropout: 0.6,
                factor: 0.77,
                scheduler_patience: 10,
                stop_patience: 100,
                max_epochs: 1000,
                batch_size: 32,
                init_gain: 1.0,
            },
            data: DataConfig {
                dir: None,
                flow: FlowParams::desk_scale(seed),
                mdi: MdiParams::desk_scale(seed),
                test_orientation_flips: false,
            },
            seed,
        }
    }

    /// Four layers `1 → 256 → 256 → 256 → 1` with `J = 2` and a skip
    /// connection in place of the harmonic filter; ReLU on the hidden
    /// layers, the last one is linear.
    pub fn mdi(seed: u64) -> Self {
        let widths = [1, 256, 256, 256, 1];
        let mut layers: Vec<SanLayerConfig> = widths
            .windows(2)
            .map(|w| {
                SanLayerConfig::new(w[0], w[1], 2).with_harmonic(HarmonicMode::Skip).with_activation(Activation::Relu)
            })
            .collect();
        if let Some(last) = layers.last_mut() {
            last.activation = Activation::Identity;
        }
        Self {
            task: Task::Mdi,
            arch: Architecture::San,
            model: ModelConfig { order: 1, layers, readout: ReadoutConfig::PerSimplexLinear },
            optim: OptimConfig {
                lr: 0.1,
                l2: 0.0,
                dropout: 0.0,
                factor: 0.77,
                scheduler_patience: 100,
                stop_patience: 500,
                max_epochs: 300,
                batch_size: 1,
                init_gain: std::f64::consts::SQRT_2,
            },
            data: DataConfig {
                dir: None,
                flow: FlowParams::desk_scale(seed),
                mdi: MdiParams::desk_scale(seed),
                test_orientation_flips: false,
            },
            seed,
        }
    }

    pub fn default_for(task: Task, seed: u64) -> Self {
        match task {
            Task::Trajectory => Self::trajectory(seed),
            Task::Mdi => Self::mdi(seed),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Sets the run seed and every generator seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.data.flow.seed = seed;
        self.data.mdi.seed = seed;
        self.data.mdi.complex.seed = seed;
    }

    /// The model actually trained: every layer mapped through the
    /// reduction for `arch`.
    pub fn resolved_model(&self) -> ModelConfig {
        let mut m = self.model.clone();
        m.layers = m.layers.iter().map(|l| reduction_config(self.arch, l)).collect();
        m
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let model = self.resolved_model();
        model.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if model.order != self.data_order() {
            return Err(ExperimentError::Config(format!(
                "model works on order {} but the {:?} data lives on order {}",
                model.order,
                self.task,
                self.data_order()
            )));
        }
        let readout_ok = match (self.task, model.readout) {
            (Task::Trajectory, ReadoutConfig::MeanPoolMlp { classes, .. }) => classes >= 2,
            (Task::Mdi, ReadoutConfig::PerSimplexLinear) => model.output_width() == 1,
            _ => false,
        };
        if !readout_ok {
            return Err(ExperimentError::Config(
                "trajectory runs need a mean-pool readout with >= 2 classes; imputation runs a per-simplex readout \
                 with one output feature"
                    .into(),
            ));
        }
        if model.input_width() != 1 {
            return Err(ExperimentError::Config("both tasks feed one input feature per simplex".into()));
        }
        let o = &self.optim;
        o.control().validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if !(o.lr > 0.0 && o.lr.is_finite()) {
            return Err(ExperimentError::Config(format!("learning rate {} must be positive", o.lr)));
        }
        if o.max_epochs == 0 || o.batch_size == 0 {
            return Err(ExperimentError::Config("max_epochs and batch_size must be positive".into()));
        }
        if !(o.init_gain >= 0.0 && o.init_gain.is_finite()) {
            return Err(ExperimentError::Config(format!("init gain {} must be non-negative", o.init_gain)));
        }
        match self.task {
            Task::Trajectory => self.data.flow.validate()?,
            Task::Mdi => {
                let f = self.data.mdi.missing_fraction;
                if !(f > 0.0 && f < 1.0) {
                    return Err(ExperimentError::Config(format!("missing fraction {f} outside (0, 1)")));
                }
            }
        }
        if let Some(dir) = &self.data.dir {
            if !dir.is_dir() {
                return Err(ExperimentError::Config(format!("data directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }

    fn data_order(&self) -> usize {
        match self.task {
            Task::Trajectory => 1,
            Task::Mdi => self.data.mdi.order,
        }
    }
}

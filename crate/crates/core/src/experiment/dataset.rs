use std::path::Path;

use serde_json::json;

use super::{ExperimentError, RunConfig, Task};
use crate::complex::SimplicialComplex;
use crate::data::{
    coauthorship_complex, generate_mdi_instance, generate_synthetic_flow, load_complex, load_mdi, load_trajectories,
    save_complex, save_mdi, save_trajectories, write_manifest, DataError, MdiInstance, TrajectoryInstance,
};

pub const COMPLEX_FILE: &str = "complex.txt";
pub const TRAIN_FILE: &str = "train.txt";
pub const TEST_FILE: &str = "test.txt";
pub const MDI_FILE: &str = "mdi.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug)]
pub enum Dataset {
    Trajectory { complex: SimplicialComplex, train: Vec<TrajectoryInstance>, test: Vec<TrajectoryInstance> },
    Mdi { complex: SimplicialComplex, instance: MdiInstance },
}

impl Dataset {
    pub fn task(&self) -> Task {
        match self {
            Self::Trajectory { .. } => Task::Trajectory,
            Self::Mdi { .. } => Task::Mdi,
        }
    }

    pub fn complex(&self) -> &SimplicialComplex {
        match self {
            Self::Trajectory { complex, .. } | Self::Mdi { complex, .. } => complex,
        }
    }

    /// Runs the generator named by `config.task`.
    pub fn generate(config: &RunConfig) -> Result<Self, ExperimentError> {
        Ok(match config.task {
            Task::Trajectory => {
                let flow = generate_synthetic_flow(&config.data.flow)?;
                Self::Trajectory { complex: flow.complex, train: flow.train, test: flow.test }
            }
            Task::Mdi => {
                let p = &config.data.mdi;
                let complex = coauthorship_complex(&p.complex)?;
                let instance = generate_mdi_instance(&complex, p.order, &p.distribution, p.missing_fraction, p.seed)?;
                Self::Mdi { complex, instance }
            }
        })
    }

    /// Loads `config.data.dir` when set, otherwise generates.
    pub fn resolve(config: &RunConfig) -> Result<Self, ExperimentError> {
        match &config.data.dir {
            Some(dir) => {
                let data = Self::load(dir, config.task)?;
                if let Self::Mdi { instance, .. } = &data {
                    if instance.order != config.model.order {
                        return Err(ExperimentError::Config(format!(
                            "data lives on order {}, model on order {}",
                            instance.order, config.model.order
                        )));
                    }
                }
                Ok(data)
            }
            None => Self::generate(config),
        }
    }

    pub fn load(dir: &Path, task: Task) -> Result<Self, ExperimentError> {
        let complex = load_complex(&dir.join(COMPLEX_FILE))?;
        Ok(match task {
            Task::Trajectory => {
                let e = complex.count(1);
                let train = load_trajectories(&dir.join(TRAIN_FILE), e)?;
                let test = load_trajectories(&dir.join(TEST_FILE), e)?;
                Self::Trajectory { complex, train, test }
            }
            Task::Mdi => {
                let instance = load_mdi(&dir.join(MDI_FILE))?;
                let n = complex.count(instance.order);
                if n != instance.len() {
                    return Err(DataError::DimensionMismatch { expected: n, actual: instance.len() }.into());
                }
                Self::Mdi { complex, instance }
            }
        })
    }

    /// Writes the dataset files plus a manifest holding `params`, the
    /// simplex counts and the complex fingerprint.
    pub fn save(&self, dir: &Path, params: serde_json::Value) -> Result<serde_json::Value, ExperimentError> {
        let complex = self.complex();
        save_complex(&dir.join(COMPLEX_FILE), complex)?;
        let files: Vec<&str> = match self {
            Self::Trajectory { train, test, .. } => {
                save_trajectories(&dir.join(TRAIN_FILE), train)?;
                save_trajectories(&dir.join(TEST_FILE), test)?;
                vec![COMPLEX_FILE, TRAIN_FILE, TEST_FILE]
            }
            Self::Mdi { instance, .. } => {
                save_mdi(&dir.join(MDI_FILE), instance)?;
                vec![COMPLEX_FILE, MDI_FILE]
            }
        };
        let mut manifest = json!({
            "task": self.task(),
            "params": params,
            "counts": complex.counts(),
            "fingerprint": complex.fingerprint(),
            "files": files,
        });
        match self {
            Self::Trajectory { train, test, .. } => {
                manifest["n_train"] = json!(train.len());
                manifest["n_test"] = json!(test.len());
            }
            Self::Mdi { instance, .. } => {
                manifest["order"] = json!(instance.order);
                manifest["missing"] = json!(instance.missing_count());
            }
        }
        write_manifest(&dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mdi_predictions, train, Dataset, ExperimentError, RunConfig, Task};
use crate::data::{coauthorship_complex, generate_mdi_instance, mdi_masks};
use crate::san::{Architecture, ModelOperators};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskResult {
    pub arch: Architecture,
    pub mask: usize,
    /// ±5 % rate over the hidden entries.
    pub accuracy: f64,
    pub accuracy_all: f64,
    pub epochs: usize,
}

/// Trains every architecture on `n_masks` masks over one set of values.
/// Run `i` of every architecture uses seed `config.seed + i`. Runs are
/// spread over the rayon pool; results come back in (mask, arch) order.
pub fn mdi_mask_study(config: &RunConfig, archs: &[Architecture], n_masks: usize) -> Result<Vec<MaskResult>, ExperimentError> {
    if config.task != Task::Mdi {
        return Err(ExperimentError::Config("mask study needs an imputation config".into()));
    }
    let p = &config.data.mdi;
    let complex = coauthorship_complex(&p.complex)?;
    let base = generate_mdi_instance(&complex, p.order, &p.distribution, p.missing_fraction, p.seed)?;
    let masks = mdi_masks(&base, p.missing_fraction, n_masks, p.seed)?;
    let jobs: Vec<(usize, Architecture)> =
        (0..n_masks).flat_map(|m| archs.iter().map(move |&a| (m, a))).collect();
    jobs.par_iter()
        .map(|&(m, arch)| {
            let mut cfg = config.clone();
            cfg.arch = arch;
            cfg.seed = config.seed + m as u64;
            let data = Dataset::Mdi { complex: complex.clone(), instance: masks[m].clone() };
            let outcome = train(&cfg, &data)?;
            let ops = ModelOperators::new(&complex, &outcome.model.config)?;
            let pred = mdi_predictions(&outcome.model, &ops, &masks[m])?;
            Ok(MaskResult {
                arch,
                mask: m,
                accuracy: masks[m].accuracy(&pred, true),
                accuracy_all: masks[m].accuracy(&pred, false),
                epochs: outcome.metrics.len(),
            })
        })
        .collect()
}

/// Mean hidden-entry accuracy of one architecture.
pub fn mean_accuracy(results: &[MaskResult], arch: Architecture) -> f64 {
    let v: Vec<f64> = results.iter().filter(|r| r.arch == arch).map(|r| r.accuracy).collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

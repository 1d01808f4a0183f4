use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::train::{accuracy_where, trajectory_test_accuracy, TrajectoryEval};
use super::{
    gradcheck, gradcheck_complex, mdi_predictions, metrics_csv, train, trajectory_accuracy, Checkpoint, Dataset,
    ExperimentError, GradcheckReport, RunConfig, Task,
};
use crate::complex::SimplicialComplex;
use crate::data::{load_complex, load_signals, save_signals, write_manifest};
use crate::dense::Matrix;
use crate::hodge::{estimate_lambda_max, hodge_decompose, spectral_basis, ProjectorSpec};
use crate::nn::Fault;
use crate::san::{HarmonicMode, ModelOperators};

pub const METRICS_FILE: &str = "metrics.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const RUN_MANIFEST_FILE: &str = "run.json";
pub const METRICS_SCHEMA_VERSION: u32 = 1;

fn io_err(path: &Path, e: std::io::Error) -> ExperimentError {
    ExperimentError::Io(format!("{}: {e}", path.display()))
}

/// Generates the dataset for `config.task` and writes it with a manifest.
/// Nothing is written if generation fails.
pub fn cmd_gen(config: &RunConfig, out_dir: &Path) -> Result<serde_json::Value, ExperimentError> {
    let data = Dataset::generate(config)?;
    let params = match config.task {
        Task::Trajectory => json!({ "flow": config.data.flow }),
        Task::Mdi => json!({ "mdi": config.data.mdi }),
    };
    data.save(out_dir, params)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub order: usize,
    pub count: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_mean: f64,
    /// Power-iteration estimate used to clamp the projector step.
    pub lambda_max_estimate: f64,
    pub harmonic_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InspectReport {
    pub counts: Vec<usize>,
    pub fingerprint: String,
    pub components: usize,
    pub orders: Vec<OrderReport>,
}

/// Counts, Hodge Laplacian spectra and harmonic dimensions per order.
pub fn inspect_complex(complex: &SimplicialComplex) -> Result<InspectReport, ExperimentError> {
    let mut orders = Vec::new();
    for k in 0..=complex.max_order() {
        let l = complex.laplacian(k)?.full;
        let basis = spectral_basis(&l, None)?;
        let ev = &basis.eigenvalues;
        orders.push(OrderReport {
            order: k,
            count: complex.count(k),
            lambda_min: ev.first().copied().unwrap_or(0.0),
            lambda_max: ev.last().copied().unwrap_or(0.0),
            lambda_mean: ev.iter().sum::<f64>() / ev.len().max(1) as f64,
            lambda_max_estimate: estimate_lambda_max(&l),
            harmonic_dim: basis.harmonic_dim,
        });
    }
    Ok(InspectReport {
        counts: complex.counts(),
        fingerprint: complex.fingerprint(),
        components: complex.connected_components(),
        orders,
    })
}

pub fn cmd_inspect(complex_path: &Path) -> Result<InspectReport, ExperimentError> {
    inspect_complex(&load_complex(complex_path)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub epochs: usize,
    pub final_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub param_count: usize,
}

fn warn_on_clamped_epsilon(config: &RunConfig, complex: &SimplicialComplex) -> Result<(), ExperimentError> {
    let model = config.resolved_model();
    for (i, layer) in model.layers.iter().enumerate() {
        if let HarmonicMode::Projector(spec) = layer.harmonic {
            let bound = ProjectorSpec::admissible_bound(&complex.laplacian(model.order)?.full);
            if spec.epsilon > bound {
                eprintln!("warning: layer {i}: epsilon {} exceeds 2/lambda_max = {bound:.4}; clamped", spec.epsilon);
            }
        }
    }
    Ok(())
}

/// Trains and writes `metrics.csv`, `checkpoint.json` and `run.json` (the
/// resolved configuration) into `out_dir`.
pub fn cmd_train(config: &RunConfig, out_dir: &Path) -> Result<TrainSummary, ExperimentError> {
    config.validate()?;
    let data = Dataset::resolve(config)?;
    warn_on_clamped_epsilon(config, data.complex())?;
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    write_manifest(
        &out_dir.join(RUN_MANIFEST_FILE),
        &json!({
            "metrics_schema": METRICS_SCHEMA_VERSION,
            "metrics_columns": super::METRICS_HEADER,
            "config": config,
            "resolved_model": config.resolved_model(),
            "fingerprint": data.complex().fingerprint(),
        }),
    )?;
    let outcome = train(config, &data)?;
    let metrics_path = out_dir.join(METRICS_FILE);
    std::fs::write(&metrics_path, metrics_csv(&outcome.metrics)).map_err(|e| io_err(&metrics_path, e))?;
    let ckpt = Checkpoint::new(config, &outcome, data.complex().fingerprint());
    write_manifest(&out_dir.join(CHECKPOINT_FILE), &ckpt)?;
    let last = outcome.last();
    Ok(TrainSummary {
        epochs: outcome.metrics.len(),
        final_loss: last.loss,
        train_acc: last.train_acc,
        test_acc: last.test_acc,
        param_count: outcome.model.scalar_count(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub arch: crate::san::Architecture,
    /// Test classification accuracy, or the ±5 % rate over hidden entries.
    pub accuracy: f64,
    pub train_accuracy: f64,
    /// Imputation only: the ±5 % rate over every entry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_all: Option<f64>,
    pub evaluated: usize,
}

/// Scores a checkpoint on a dataset built on the same complex.
pub fn evaluate(ckpt: &Checkpoint, data: &Dataset) -> Result<EvalReport, ExperimentError> {
    let actual = data.complex().fingerprint();
    if actual != ckpt.fingerprint {
        return Err(ExperimentError::FingerprintMismatch { expected: ckpt.fingerprint.clone(), actual });
    }
    let model = ckpt.to_model()?;
    let ops = ModelOperators::new(data.complex(), &model.config)?;
    Ok(match data {
        Dataset::Trajectory { train, test, .. } => {
            let eval = TrajectoryEval::new(&ops, test, ckpt.config.data.test_orientation_flips, ckpt.config.seed);
            EvalReport {
                task: Task::Trajectory,
                arch: ckpt.arch,
                accuracy: trajectory_test_accuracy(&model, &ops, &eval, test)?,
                train_accuracy: trajectory_accuracy(&model, &ops, train)?,
                accuracy_all: None,
                evaluated: test.len(),
            }
        }
        Dataset::Mdi { instance, .. } => {
            let pred = mdi_predictions(&model, &ops, instance)?;
            EvalReport {
                task: Task::Mdi,
                arch: ckpt.arch,
                accuracy: instance.accuracy(&pred, true),
                train_accuracy: accuracy_where(instance, &pred, true),
                accuracy_all: Some(instance.accuracy(&pred, false)),
                evaluated: instance.missing_count(),
            }
        }
    })
}

/// Loads a checkpoint and scores it on `data_dir`, or on the dataset its
/// configuration regenerates.
pub fn cmd_eval(checkpoint_path: &Path, data_dir: Option<&Path>) -> Result<EvalReport, ExperimentError> {
    let text = std::fs::read_to_string(checkpoint_path).map_err(|e| io_err(checkpoint_path, e))?;
    let ckpt: Checkpoint =
        serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("checkpoint: {e}")))?;
    let data = match data_dir {
        Some(dir) => Dataset::load(dir, ckpt.config.task)?,
        None => Dataset::resolve(&ckpt.config)?,
    };
    evaluate(&ckpt, &data)
}

/// Gradient check of the configured (reduced) model on `complex_path` or
/// the built-in small complex.
pub fn cmd_gradcheck(
    config: &RunConfig,
    complex_path: Option<&Path>,
    tolerance: f64,
    fault: Option<Fault>,
) -> Result<GradcheckReport, ExperimentError> {
    let complex = match complex_path {
        Some(p) => load_complex(p)?,
        None => gradcheck_complex(),
    };
    gradcheck(&config.resolved_model(), &complex, config.seed, tolerance, fault)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecomposeReport {
    pub order: usize,
    pub norm: f64,
    pub irrotational_norm: f64,
    pub solenoidal_norm: f64,
    pub harmonic_norm: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Hodge decomposition of a one-column signal; the three parts are written
/// to `out_dir` as signal files.
pub fn cmd_decompose(
    complex_path: &Path,
    signal_path: &Path,
    order: usize,
    out_dir: &Path,
) -> Result<DecomposeReport, ExperimentError> {
    let complex = load_complex(complex_path)?;
    let lap = complex.laplacian(order)?;
    let x = load_signals(signal_path, Some(complex.count(order)))?;
    if x.cols() != 1 {
        return Err(ExperimentError::Config(format!("decompose expects one value per simplex, got {}", x.cols())));
    }
    let parts = hodge_decompose(x.as_slice(), &lap.down, &lap.up)?;
    for (name, v) in [
        ("irrotational.txt", &parts.irrotational),
        ("solenoidal.txt", &parts.solenoidal),
        ("harmonic.txt", &parts.harmonic),
    ] {
        save_signals(&out_dir.join(name), &Matrix::column(v))?;
    }
    Ok(DecomposeReport {
        order,
        norm: norm(x.as_slice()),
        irrotational_norm: norm(&parts.irrotational),
        solenoidal_norm: norm(&parts.solenoidal),
        harmonic_norm: norm(&parts.harmonic),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{MdiInstance, RELATIVE_TOLERANCE};

    #[test]
    fn inspect_harmonic_dimensions() {
        let hollow = SimplicialComplex::build(&[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        assert_eq!(inspect_complex(&hollow).unwrap().orders[1].harmonic_dim, 1);
        let filled = SimplicialComplex::build(&[vec![0, 1, 2]]).unwrap();
        let r = inspect_complex(&filled).unwrap();
        assert_eq!(r.orders[1].harmonic_dim, 0);
        assert_eq!(r.orders[2].harmonic_dim, 0);
        assert_eq!(r.orders[0].harmonic_dim, 1);
    }

    #[test]
    fn gen_is_byte_identical_and_validates_first() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = RunConfig::trajectory(7);
        cmd_gen(&cfg, a.path()).unwrap();
        cmd_gen(&cfg, b.path()).unwrap();
        for f in ["complex.txt", "train.txt", "test.txt", "manifest.json"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        let mut bad = cfg.clone();
        bad.data.flow.hole_centers = [[0.3, 0.3], [0.35, 0.35]];
        let c = tempfile::tempdir().unwrap();
        let out = c.path().join("never");
        assert!(cmd_gen(&bad, &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn mdi_gen_hides_thirty_percent() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::mdi(3);
        let manifest = cmd_gen(&cfg, dir.path()).unwrap();
        let data = Dataset::load(dir.path(), Task::Mdi).unwrap();
        let Dataset::Mdi { instance, .. } = data else { panic!() };
        assert_eq!(instance.missing_count(), (0.3 * instance.len() as f64).ceil() as usize);
        assert_eq!(manifest["missing"], instance.missing_count());
    }

    #[test]
    fn eval_checks_fingerprint_and_tolerance() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::trajectory(5);
        cfg.data.flow.n_train = 8;
        cfg.data.flow.n_test = 4;
        cfg.optim.max_epochs = 2;
        cmd_train(&cfg, dir.path()).unwrap();
        let ckpt_path = dir.path().join(CHECKPOINT_FILE);
        let report = cmd_eval(&ckpt_path, None).unwrap();
        assert_eq!(report.evaluated, 4);
        let mut other = cfg.clone();
        other.set_seed(6);
        let data = Dataset::generate(&other).unwrap();
        let ckpt: Checkpoint = serde_json::from_str(&std::fs::read_to_string(&ckpt_path).unwrap()).unwrap();
        assert!(matches!(evaluate(&ckpt, &data), Err(ExperimentError::FingerprintMismatch { .. })));

        let inst = MdiInstance::new(1, vec![100.0, 200.0, 300.0], vec![true, false, false]).unwrap();
        assert_eq!(inst.accuracy(&[100.0, 200.0, 300.0], true), 1.0);
        assert_eq!(inst.accuracy(&[0.0, 1.049 * 200.0, 1.051 * 300.0], true), 0.5);
        assert_eq!(RELATIVE_TOLERANCE, 0.05);
    }

    #[test]
    fn decompose_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cpath = dir.path().join("c.txt");
        std::fs::write(&cpath, "2 0 1 2\n1 2 3\n1 1 3\n").unwrap();
        let spath = dir.path().join("x.txt");
        std::fs::write(&spath, "1\n-2\n0.5\n3\n1\n").unwrap();
        let r = cmd_decompose(&cpath, &spath, 1, dir.path()).unwrap();
        let sq = r.irrotational_norm.powi(2) + r.solenoidal_norm.powi(2) + r.harmonic_norm.powi(2);
        assert!((sq - r.norm.powi(2)).abs() < 1e-10);
        assert!(r.harmonic_norm > 0.0);
        let short = dir.path().join("short.txt");
        std::fs::write(&short, "1\n2\n").unwrap();
        assert!(matches!(cmd_decompose(&cpath, &short, 1, dir.path()), Err(ExperimentError::Data(_))));
    }
}

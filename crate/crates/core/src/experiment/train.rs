use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, ExperimentError, RunConfig};
use crate::data::{MdiInstance, TrajectoryInstance};
use crate::dense::Matrix;
use crate::nn::{AdamConfig, AdamState, Tape};
use crate::san::{Architecture, ModelConfig, ModelOperators, SanModel};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const METRICS_HEADER: &str = "epoch,loss,lr,train_acc,test_acc";
/// Loss ratio over the first epoch that counts as divergence.
pub const DIVERGENCE_RATIO: f64 = 1e6;
/// Consecutive epochs above the ratio before aborting.
pub const DIVERGENCE_EPOCHS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    /// Rate used during the epoch.
    pub lr: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStopping,
    MaxEpochs,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SanModel,
    pub metrics: Vec<EpochMetrics>,
    pub stop: StopReason,
}

impl TrainOutcome {
    pub fn last(&self) -> &EpochMetrics {
        self.metrics.last().expect("at least one epoch")
    }
}

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.epoch, r.loss, r.lr, r.train_acc, r.test_acc);
    }
    out
}

/// Inverse of [`metrics_csv`]; floats round-trip exactly.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<EpochMetrics>, ExperimentError> {
    let mut lines = text.lines();
    if lines.next() != Some(METRICS_HEADER) {
        return Err(ExperimentError::Config(format!("metrics header must be `{METRICS_HEADER}`")));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let bad = || ExperimentError::Config(format!("metrics line {}: {l:?}", i + 2));
            let f: Vec<&str> = l.split(',').collect();
            let [e, loss, lr, tr, te] = f[..] else { return Err(bad()) };
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
            Ok(EpochMetrics {
                epoch: e.parse().map_err(|_| bad())?,
                loss: num(loss)?,
                lr: num(lr)?,
                train_acc: num(tr)?,
                test_acc: num(te)?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Trained parameters plus everything needed to rebuild and check them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub arch: Architecture,
    pub config: RunConfig,
    pub model: ModelConfig,
    pub fingerprint: String,
    pub epochs: usize,
    pub stop: StopReason,
    pub tensors: Vec<TensorRecord>,
}

impl Checkpoint {
    pub fn new(config: &RunConfig, outcome: &TrainOutcome, fingerprint: String) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            arch: config.arch,
            config: config.clone(),
            model: outcome.model.config.clone(),
            fingerprint,
            epochs: outcome.metrics.len(),
            stop: outcome.stop,
            tensors: outcome
                .model
                .tensors()
                .iter()
                .map(|m| TensorRecord { rows: m.rows(), cols: m.cols(), data: m.as_slice().to_vec() })
                .collect(),
        }
    }

    pub fn to_model(&self) -> Result<SanModel, ExperimentError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(ExperimentError::Config(format!("unsupported checkpoint version {}", self.version)));
        }
        let tensors = self
            .tensors
            .iter()
            .map(|t| {
                if t.data.len() != t.rows * t.cols {
                    return Err(ExperimentError::Config("tensor data does not match its shape".into()));
                }
                Ok(Matrix::from_vec(t.rows, t.cols, t.data.clone()))
            })
            .collect::<Result<_, _>>()?;
        SanModel::from_tensors(self.model.clone(), tensors).map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

/// A trajectory input with the operators it is evaluated on.
struct Sample<'a> {
    ops: &'a ModelOperators,
    x: Matrix,
    label: usize,
}

/// Test trajectories, optionally on independently reoriented complexes.
pub(crate) struct TrajectoryEval {
    flipped: Option<Vec<(ModelOperators, Matrix)>>,
}

impl TrajectoryEval {
    pub(crate) fn new(ops: &ModelOperators, test: &[TrajectoryInstance], flips: bool, seed: u64) -> Self {
        if !flips {
            return Self { flipped: None };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(7);
        let flipped = test
            .iter()
            .map(|t| {
                let signs: Vec<f64> = (0..t.signal.len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
                let x: Vec<f64> = t.signal.iter().zip(&signs).map(|(v, s)| v * s).collect();
                (ops.reoriented(&signs), Matrix::column(&x))
            })
            .collect();
        Self { flipped: Some(flipped) }
    }

    fn samples<'a>(&'a self, ops: &'a ModelOperators, test: &[TrajectoryInstance]) -> Vec<Sample<'a>> {
        match &self.flipped {
            None => test.iter().map(|t| Sample { ops, x: Matrix::column(&t.signal), label: t.label }).collect(),
            Some(f) => f.iter().zip(test).map(|((o, x), t)| Sample { ops: o, x: x.clone(), label: t.label }).collect(),
        }
    }
}

fn argmax(row: &[f64]) -> usize {
    row.iter().enumerate().fold(0, |best, (i, v)| if *v > row[best] { i } else { best })
}

fn classify(model: &SanModel, samples: &[Sample<'_>]) -> Result<f64, ExperimentError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for s in samples {
        let logits = model.predict(s.ops, &s.x)?;
        hits += usize::from(argmax(logits.row(0)) == s.label);
    }
    Ok(hits as f64 / samples.len() as f64)
}

/// Classification accuracy on plain (unflipped) trajectories.
pub fn trajectory_accuracy(
    model: &SanModel,
    ops: &ModelOperators,
    instances: &[TrajectoryInstance],
) -> Result<f64, ExperimentError> {
    classify(model, &TrajectoryEval { flipped: None }.samples(ops, instances))
}

pub(crate) fn trajectory_test_accuracy(
    model: &SanModel,
    ops: &ModelOperators,
    eval: &TrajectoryEval,
    test: &[TrajectoryInstance],
) -> Result<f64, ExperimentError> {
    classify(model, &eval.samples(ops, test))
}

/// Inputs scaled by the median of the known values.
fn mdi_scaled(instance: &MdiInstance) -> (f64, Matrix, Matrix) {
    let scale = instance.known_median().abs().max(f64::MIN_POSITIVE);
    let x = Matrix::column(&instance.input.iter().map(|v| v / scale).collect::<Vec<_>>());
    let y = Matrix::column(&instance.values.iter().map(|v| v / scale).collect::<Vec<_>>());
    (scale, x, y)
}

/// Imputed values on the original scale.
pub fn mdi_predictions(model: &SanModel, ops: &ModelOperators, instance: &MdiInstance) -> Result<Vec<f64>, ExperimentError> {
    let (scale, x, _) = mdi_scaled(instance);
    Ok(model.predict(ops, &x)?.as_slice().iter().map(|v| v * scale).collect())
}

struct Divergence {
    initial: Option<f64>,
    above: usize,
}

impl Divergence {
    fn check(&mut self, epoch: usize, loss: f64) -> Result<(), ExperimentError> {
        if !loss.is_finite() {
            return Err(ExperimentError::DivergedLoss(format!("loss became {loss} at epoch {epoch}")));
        }
        let initial = *self.initial.get_or_insert(loss);
        if loss > DIVERGENCE_RATIO * initial.abs() {
            self.above += 1;
            if self.above >= DIVERGENCE_EPOCHS {
                return Err(ExperimentError::DivergedLoss(format!(
                    "loss {loss} above {DIVERGENCE_RATIO}x the initial {initial} for {DIVERGENCE_EPOCHS} epochs"
                )));
            }
        } else {
            self.above = 0;
        }
        Ok(())
    }
}

/// Number of leading tensors (filter and attention weights of every layer)
/// that carry the L2 penalty; the readout is not regularised.
fn regularized(model: &SanModel) -> usize {
    model.layers.iter().map(|l| l.tensors().len()).sum()
}

fn l2_penalty(model: &SanModel, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let n = regularized(model);
    lambda * model.tensors().iter().take(n).map(|m| m.as_slice().iter().map(|v| v * v).sum::<f64>()).sum::<f64>()
}

/// Adds `2λW` to the regularised gradients and takes one ADAM step.
fn apply_step(model: &mut SanModel, adam: &mut AdamState, mut grads: Vec<Matrix>, lambda: f64) -> Result<(), ExperimentError> {
    if lambda != 0.0 {
        let n = regularized(model);
        for (g, w) in grads.iter_mut().zip(model.tensors()).take(n) {
            g.axpy(2.0 * lambda, w);
        }
    }
    adam.step(&mut model.tensors_mut(), &grads)?;
    Ok(())
}

/// Trains the configured model on `data`. Deterministic given the config.
pub fn train(config: &RunConfig, data: &Dataset) -> Result<TrainOutcome, ExperimentError> {
    config.validate()?;
    if data.task() != config.task {
        return Err(ExperimentError::Config(format!("dataset is {:?}, config is {:?}", data.task(), config.task)));
    }
    let model_config = config.resolved_model();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = SanModel::init(model_config.clone(), config.optim.init_gain, &mut rng)?;
    let ops = ModelOperators::new(data.complex(), &model_config)?;
    match data {
        Dataset::Trajectory { train, test, .. } => train_trajectory(config, model, &ops, train, test, rng),
        Dataset::Mdi { instance, .. } => train_mdi(config, model, &ops, instance, rng),
    }
}

struct Loop {
    adam: AdamState,
    control: crate::nn::TrainControl,
    divergence: Divergence,
    metrics: Vec<EpochMetrics>,
}

impl Loop {
    fn new(config: &RunConfig, model: &SanModel) -> Self {
        let adam = AdamState::new(AdamConfig { lr: config.optim.lr, ..AdamConfig::default() }, &model.shapes());
        Self { adam, control: config.optim.control(), divergence: Divergence { initial: None, above: 0 }, metrics: vec![] }
    }

    /// Records an epoch; true when early stopping fires.
    fn finish_epoch(&mut self, m: EpochMetrics) -> Result<bool, ExperimentError> {
        self.divergence.check(m.epoch, m.loss)?;
        self.metrics.push(m);
        let lr = self.control.scheduler.step(m.loss, m.lr);
        self.adam.set_lr(lr);
        Ok(self.control.early_stopping.update(m.loss))
    }
}

fn train_trajectory(
    config: &RunConfig,
    mut model: SanModel,
    ops: &ModelOperators,
    train: &[TrajectoryInstance],
    test: &[TrajectoryInstance],
    mut rng: ChaCha8Rng,
) -> Result<TrainOutcome, ExperimentError> {
    if train.is_empty() {
        return Err(ExperimentError::Config("no training trajectories".into()));
    }
    let eval = TrajectoryEval::new(ops, test, config.data.test_orientation_flips, config.seed);
    let mut lp = Loop::new(config, &model);
    let p = config.optim.dropout;
    let lambda = config.optim.l2;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=config.optim.max_epochs {
        order.shuffle(&mut rng);
        let mut ce_total = 0.0;
        for batch in order.chunks(config.optim.batch_size) {
            let mut acc: Vec<Matrix> = model.shapes().iter().map(|&(r, c)| Matrix::zeros(r, c)).collect();
            for &i in batch {
                let t = &train[i];
                let tape = Tape::new();
                let vars = model.bind(&tape, true);
                let x = tape.constant(Matrix::column(&t.signal));
                let out = model.forward(&tape, &vars, ops, x, (p > 0.0).then_some((p, &mut rng)))?;
                let ce = tape.cross_entropy(out, t.label)?;
                ce_total += tape.scalar(ce);
                let loss = tape.scale(ce, 1.0 / batch.len() as f64);
                let grads = tape.backward(loss)?;
                for (a, v) in acc.iter_mut().zip(vars.vars()) {
                    if let Some(g) = grads.get(v) {
                        a.add_assign(g);
                    }
                }
            }
            apply_step(&mut model, &mut lp.adam, acc, lambda)?;
        }
        let loss = ce_total / train.len() as f64 + l2_penalty(&model, lambda);
        let m = EpochMetrics {
            epoch,
            loss,
            lr: lp.adam.lr(),
            train_acc: trajectory_accuracy(&model, ops, train)?,
            test_acc: trajectory_test_accuracy(&model, ops, &eval, test)?,
        };
        if lp.finish_epoch(m)? {
            stop = StopReason::EarlyStopping;
            break;
        }
    }
    Ok(TrainOutcome { model, metrics: lp.metrics, stop })
}

fn train_mdi(
    config: &RunConfig,
    mut model: SanModel,
    ops: &ModelOperators,
    instance: &MdiInstance,
    mut rng: ChaCha8Rng,
) -> Result<TrainOutcome, ExperimentError> {
    let (_, x, y) = mdi_scaled(instance);
    let mut lp = Loop::new(config, &model);
    let p = config.optim.dropout;
    let lambda = config.optim.l2;
    let mut stop = StopReason::MaxEpochs;
    for epoch in 1..=config.optim.max_epochs {
        let tape = Tape::new();
        let vars = model.bind(&tape, true);
        let xv = tape.constant(x.clone());
        let out = model.forward(&tape, &vars, ops, xv, (p > 0.0).then_some((p, &mut rng)))?;
        let l1 = tape.masked_l1(out, &y, &instance.known)?;
        let data_loss = tape.scalar(l1);
        let grads = tape.backward(l1)?;
        let grads: Vec<Matrix> = vars
            .vars()
            .into_iter()
            .zip(model.shapes())
            .map(|(v, (r, c))| grads.get(v).cloned().unwrap_or_else(|| Matrix::zeros(r, c)))
            .collect();
        let lr = lp.adam.lr();
        let penalty = l2_penalty(&model, lambda);
        apply_step(&mut model, &mut lp.adam, grads, lambda)?;
        let pred = mdi_predictions(&model, ops, instance)?;
        let m = EpochMetrics {
            epoch,
            loss: data_loss + penalty,
            lr,
            train_acc: accuracy_where(instance, &pred, true),
            test_acc: instance.accuracy(&pred, true),
        };
        if lp.finish_epoch(m)? {
            stop = StopReason::EarlyStopping;
            break;
        }
    }
    Ok(TrainOutcome { model, metrics: lp.metrics, stop })
}

/// ±5 % accuracy over the known (`known = true`) or hidden entries.
pub(crate) fn accuracy_where(instance: &MdiInstance, pred: &[f64], known: bool) -> f64 {
    if !known {
        return instance.accuracy(pred, true);
    }
    let idx: Vec<usize> = (0..instance.len()).filter(|&i| instance.known[i]).collect();
    let hits = idx.iter().filter(|&&i| crate::data::within_tolerance(pred[i], instance.values[i])).count();
    hits as f64 / idx.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_round_trip_exactly() {
        let rows = vec![
            EpochMetrics { epoch: 1, loss: 0.1 + 0.2, lr: 0.01 * 0.77, train_acc: 2.0 / 3.0, test_acc: 1.0 },
            EpochMetrics { epoch: 2, loss: 1e-300, lr: 7.7e-3, train_acc: 0.0, test_acc: 0.5 },
        ];
        assert_eq!(parse_metrics_csv(&metrics_csv(&rows)).unwrap(), rows);
        assert!(parse_metrics_csv("epoch,loss\n").is_err());
    }

    #[test]
    fn divergence_rule() {
        let mut d = Divergence { initial: None, above: 0 };
        d.check(1, 1.0).unwrap();
        for e in 2..6 {
            d.check(e, 2e6).unwrap();
        }
        assert!(d.check(6, 2e6).is_err());
        let mut d = Divergence { initial: None, above: 0 };
        d.check(1, 1.0).unwrap();
        for e in 2..20 {
            d.check(e, if e % 4 == 0 { 1.0 } else { 2e6 }).unwrap();
        }
        assert!(matches!(d.check(1, f64::NAN), Err(ExperimentError::DivergedLoss(_))));
    }

    #[test]
    fn short_trajectory_run_is_deterministic_and_learns() {
        let mut cfg = RunConfig::trajectory(2);
        cfg.data.flow.n_train = 60;
        cfg.data.flow.n_test = 20;
        cfg.optim.max_epochs = 12;
        let data = Dataset::generate(&cfg).unwrap();
        let a = train(&cfg, &data).unwrap();
        let b = train(&cfg, &data).unwrap();
        assert_eq!(metrics_csv(&a.metrics), metrics_csv(&b.metrics));
        assert!(a.last().loss < a.metrics[0].loss);
        let ckpt = Checkpoint::new(&cfg, &a, data.complex().fingerprint());
        let text = serde_json::to_string(&ckpt).unwrap();
        let back: Checkpoint = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_model().unwrap(), a.model);
    }

    #[test]
    fn flat_loss_steps_rate_after_patience() {
        let cfg = RunConfig::trajectory(4);
        let model = SanModel::init(cfg.resolved_model(), 1.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let mut lp = Loop::new(&cfg, &model);
        let mut lrs = vec![];
        for epoch in 1..=12 {
            let lr = lp.adam.lr();
            lrs.push(lr);
            lp.finish_epoch(EpochMetrics { epoch, loss: 0.5, lr, train_acc: 0.0, test_acc: 0.0 }).unwrap();
        }
        assert!(lrs[..11].iter().all(|&lr| lr == 0.01));
        assert_eq!(lrs[11], 0.01 * 0.77);
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::complex::SimplicialComplex;
use crate::dense::Matrix;
use crate::nn::{Fault, Tape, Var};
use crate::san::{ModelConfig, ModelOperators, ReadoutConfig, SanModel};

/// Largest complex (in edges) the finite-difference check accepts.
pub const MAX_GRADCHECK_EDGES: usize = 30;
const STEP: f64 = 1e-5;
/// Gradients below this magnitude are compared absolutely.
const DENOMINATOR_FLOOR: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub name: String,
    pub scalars: usize,
    pub max_relative_error: f64,
    /// Largest analytic gradient entry; zero means the group was not exercised.
    pub max_abs_gradient: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub tolerance: f64,
    pub passed: bool,
    pub max_relative_error: f64,
    pub groups: Vec<GroupReport>,
}

/// Two filled triangles sharing an edge plus a hollow square.
pub fn gradcheck_complex() -> SimplicialComplex {
    SimplicialComplex::build(&[vec![0, 1, 2], vec![1, 2, 3], vec![3, 4], vec![4, 5], vec![2, 5]])
        .expect("fixed complex is valid")
}

/// Tensor names in canonical order.
pub fn group_names(model: &SanModel) -> Vec<String> {
    let mut names = Vec::new();
    for (l, layer) in model.layers.iter().enumerate() {
        for (h, head) in layer.heads.iter().enumerate() {
            let p = format!("layer{l}.head{h}");
            names.extend((0..head.w_down.len()).map(|i| format!("{p}.w_down{}", i + 1)));
            names.extend((0..head.w_up.len()).map(|i| format!("{p}.w_up{}", i + 1)));
            if head.w_h.is_some() {
                names.push(format!("{p}.w_h"));
            }
            if head.a_up.is_some() {
                names.push(format!("{p}.a_up"));
            }
            if head.a_down.is_some() {
                names.push(format!("{p}.a_down"));
            }
        }
    }
    if let ReadoutConfig::MeanPoolMlp { .. } = model.config.readout {
        names.extend(["readout.w1", "readout.b1", "readout.w2", "readout.b2"].map(String::from));
    }
    names
}

struct Problem {
    x: Matrix,
    target: Matrix,
    mask: Vec<bool>,
}

fn loss(model: &SanModel, ops: &ModelOperators, p: &Problem, tape: &Tape) -> Result<(Var, Vec<Var>), ExperimentError> {
    let vars = model.bind(tape, true);
    let x = tape.constant(p.x.clone());
    let out = model.forward::<ChaCha8Rng>(tape, &vars, ops, x, None)?;
    let l = match model.config.readout {
        ReadoutConfig::MeanPoolMlp { .. } => tape.cross_entropy(out, 1)?,
        ReadoutConfig::PerSimplexLinear => tape.masked_l1(out, &p.target, &p.mask)?,
    };
    Ok((l, vars.vars()))
}

fn loss_value(model: &SanModel, ops: &ModelOperators, p: &Problem) -> Result<f64, ExperimentError> {
    let tape = Tape::new();
    let (l, _) = loss(model, ops, p, &tape)?;
    Ok(tape.scalar(l))
}

/// Central differences against the tape for every parameter. Weights are
/// drawn uniformly from `[-0.5, 0.5]` and readout biases from
/// `[0.25, 0.75]`, so hidden ReLU units start active. `fault` corrupts one
/// backward rule.
pub fn gradcheck(
    config: &ModelConfig,
    complex: &SimplicialComplex,
    seed: u64,
    tolerance: f64,
    fault: Option<Fault>,
) -> Result<GradcheckReport, ExperimentError> {
    let n_edges = complex.count(1);
    if n_edges > MAX_GRADCHECK_EDGES {
        return Err(ExperimentError::Config(format!(
            "gradient check needs at most {MAX_GRADCHECK_EDGES} edges, complex has {n_edges}"
        )));
    }
    config.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = SanModel::init(config.clone(), 1.0, &mut rng)?;
    for t in model.tensors_mut() {
        t.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
    }
    for b in model.readout.iter_mut().skip(1).step_by(2) {
        b.as_mut_slice().iter_mut().for_each(|v| *v = rng.random_range(0.25..0.75));
    }
    let ops = ModelOperators::new(complex, config)?;
    let n = ops.len();
    let f = config.input_width();
    let rand_matrix =
        |rows, cols, rng: &mut ChaCha8Rng| Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect());
    let x = rand_matrix(n, f, &mut rng);
    let target = rand_matrix(n, config.output_width(), &mut rng);
    let mut mask: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    mask[0] = true;
    let problem = Problem { x, target, mask };

    let tape = fault.map_or_else(Tape::new, Tape::with_fault);
    let (l, vars) = loss(&model, &ops, &problem, &tape)?;
    let grads = tape.backward(l)?;
    let analytic: Vec<Matrix> = vars
        .iter()
        .zip(model.shapes())
        .map(|(v, (r, c))| grads.get(*v).cloned().unwrap_or_else(|| Matrix::zeros(r, c)))
        .collect();

    let names = group_names(&model);
    let mut groups = Vec::with_capacity(names.len());
    for (t, name) in names.into_iter().enumerate() {
        let len = analytic[t].len();
        let mut worst: f64 = 0.0;
        for i in 0..len {
            let orig = model.tensors()[t].as_slice()[i];
            model.tensors_mut()[t].as_mut_slice()[i] = orig + STEP;
            let plus = loss_value(&model, &ops, &problem)?;
            model.tensors_mut()[t].as_mut_slice()[i] = orig - STEP;
            let minus = loss_value(&model, &ops, &problem)?;
            model.tensors_mut()[t].as_mut_slice()[i] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            let a = analytic[t].as_slice()[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR);
            worst = worst.max(rel);
        }
        groups.push(GroupReport {
            name,
            scalars: len,
            max_relative_error: worst,
            max_abs_gradient: analytic[t].max_abs(),
            passed: worst <= tolerance,
        });
    }
    let max_relative_error = groups.iter().map(|g| g.max_relative_error).fold(0.0, f64::max);
    Ok(GradcheckReport { tolerance, passed: groups.iter().all(|g| g.passed), max_relative_error, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Activation;
    use crate::san::{HarmonicMode, SanLayerConfig};

    fn config(act: Activation) -> ModelConfig {
        let layer = SanLayerConfig::new(2, 3, 2)
            .with_harmonic(HarmonicMode::Projector(crate::hodge::ProjectorSpec::new(0.3, 3)))
            .with_activation(act);
        ModelConfig { order: 1, layers: vec![layer], readout: ReadoutConfig::MeanPoolMlp { hidden: 3, classes: 2 } }
    }

    #[test]
    fn hollow_triangle_passes() {
        let c = SimplicialComplex::build(&[vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap();
        for act in [Activation::Identity, Activation::Tanh] {
            let r = gradcheck(&config(act), &c, 1, 1e-4, None).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.groups.len(), 2 + 2 + 1 + 2 + 4);
        }
    }

    #[test]
    fn every_group_is_exercised() {
        for act in [Activation::Identity, Activation::Relu, Activation::Tanh] {
            let r = gradcheck(&config(act), &gradcheck_complex(), 3, 1e-4, None).unwrap();
            assert!(r.passed, "{r:?}");
            assert!(r.groups.iter().all(|g| g.max_abs_gradient > 0.0), "{r:?}");
        }
    }

    #[test]
    fn corrupted_backward_rule_is_reported() {
        let fault = Fault { op: "softmax_over_sets", factor: 1.5 };
        let r = gradcheck(&config(Activation::Tanh), &gradcheck_complex(), 2, 1e-4, Some(fault)).unwrap();
        assert!(!r.passed, "{r:?}");
        assert!(r.groups.iter().any(|g| g.name.contains("a_up") && !g.passed));
    }

    #[test]
    fn rejects_large_complexes() {
        let edges: Vec<Vec<usize>> = (0..31).map(|i| vec![i, i + 1]).collect();
        let c = SimplicialComplex::build(&edges).unwrap();
        assert!(matches!(gradcheck(&config(Activation::Relu), &c, 0, 1e-4, None), Err(ExperimentError::Config(_))));
    }
}

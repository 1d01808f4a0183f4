use std::rc::Rc;

use super::{HarmonicMode, HeadCombine, HeadVars, LayerVars, SanError, SanLayerConfig, SanLayerParams};
use crate::complex::{NeighborhoodTable, SimplicialComplex};
use crate::dense::Matrix;
use crate::hodge::{sparse_harmonic_projector, ProjectorSpec};
use crate::nn::{Activation, NnError, Tape, Var};
use crate::sparse::{LinearOperator, SparseMatrix, SparsityPattern};

/// Negative slope of the LeakyReLU inside the attention scores.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Fixed operators a layer needs on one order of one complex.
#[derive(Clone, Debug)]
pub struct LayerOperators {
    pub l_down: Rc<LinearOperator>,
    pub l_up: Rc<LinearOperator>,
    /// Self-inclusive lower neighbourhoods.
    pub lower: Rc<SparsityPattern>,
    /// Self-inclusive upper neighbourhoods.
    pub upper: Rc<SparsityPattern>,
    /// `(I - εL)^J`, present when built for a projector mode.
    pub projector: Option<Rc<LinearOperator>>,
    /// The projector parameters after clamping `ε` to the admissible bound.
    pub projector_spec: Option<ProjectorSpec>,
}

impl LayerOperators {
    /// Laplacians and neighbourhoods of order `k`, plus the projector when
    /// `harmonic` asks for one.
    pub fn new(complex: &SimplicialComplex, k: usize, harmonic: &HarmonicMode) -> Result<Self, SanError> {
        let lap = complex.laplacian(k)?;
        let table = complex.neighborhoods(k)?;
        let mut ops = Self {
            l_down: Rc::new(LinearOperator::Sparse(lap.down)),
            l_up: Rc::new(LinearOperator::Sparse(lap.up)),
            lower: Rc::new(table.lower_pattern()),
            upper: Rc::new(table.upper_pattern()),
            projector: None,
            projector_spec: None,
        };
        if let HarmonicMode::Projector(spec) = harmonic {
            ops.set_projector(&lap.full, spec)?;
        }
        Ok(ops)
    }

    /// Operators from explicit Laplacians; neighbourhoods are their
    /// supports plus the diagonal.
    pub fn from_laplacians(l_down: SparseMatrix, l_up: SparseMatrix, projector: Option<LinearOperator>) -> Self {
        let pattern = |m: &SparseMatrix| {
            let rows: Vec<Vec<usize>> = (0..m.n_rows())
                .map(|i| {
                    let mut r: Vec<usize> = m.row(i).0.to_vec();
                    if !r.contains(&i) {
                        r.push(i);
                        r.sort_unstable();
                    }
                    r
                })
                .collect();
            Rc::new(SparsityPattern::from_rows(&rows))
        };
        Self {
            lower: pattern(&l_down),
            upper: pattern(&l_up),
            l_down: Rc::new(LinearOperator::Sparse(l_down)),
            l_up: Rc::new(LinearOperator::Sparse(l_up)),
            projector: projector.map(Rc::new),
            projector_spec: None,
        }
    }

    /// Builds `(I - εL)^J` from the full Laplacian, clamping `ε`.
    pub fn set_projector(&mut self, full: &SparseMatrix, spec: &ProjectorSpec) -> Result<(), SanError> {
        let spec = spec.clamped(full);
        self.projector = Some(Rc::new(sparse_harmonic_projector(full, &spec)?));
        self.projector_spec = Some(spec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lower.n()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Operators after flipping the orientation of every simplex `i` with
    /// `signs[i] = -1`: each matrix `M` becomes `D M D`.
    pub fn reoriented(&self, signs: &[f64]) -> Self {
        Self {
            l_down: Rc::new(self.l_down.congruence_diag(signs)),
            l_up: Rc::new(self.l_up.congruence_diag(signs)),
            lower: Rc::clone(&self.lower),
            upper: Rc::clone(&self.upper),
            projector: self.projector.as_ref().map(|p| Rc::new(p.congruence_diag(signs))),
            projector_spec: self.projector_spec,
        }
    }
}

/// Learned replacements of the lower and upper Laplacians: row-stochastic
/// matrices on the neighbourhood supports.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionalLaplacians {
    pub l_up_att: SparseMatrix,
    pub l_down_att: SparseMatrix,
}

/// `[Z W_1 | Z W_2 | ... | Z W_J]`, one row per simplex.
pub fn transform_features(z: &Matrix, weights: &[Matrix]) -> Result<Matrix, SanError> {
    let mut blocks = Vec::with_capacity(weights.len());
    for w in weights {
        if w.rows() != z.cols() {
            return Err(NnError::ShapeMismatch { op: "transform_features", left: z.shape(), right: w.shape() }.into());
        }
        blocks.push(z.matmul(w));
    }
    if blocks.is_empty() {
        return Ok(Matrix::zeros(z.rows(), 0));
    }
    Ok(Matrix::hconcat(&blocks.iter().collect::<Vec<_>>()))
}

fn pattern_attention(h: &Matrix, a: &[f64], pattern: &SparsityPattern) -> Result<SparseMatrix, SanError> {
    let d = h.cols();
    if a.len() != 2 * d || h.rows() != pattern.n() {
        return Err(NnError::ShapeMismatch { op: "attention_coefficients", left: h.shape(), right: (a.len(), 1) }.into());
    }
    let dot = |row: &[f64], v: &[f64]| row.iter().zip(v).map(|(x, y)| x * y).sum::<f64>();
    let source: Vec<f64> = (0..h.rows()).map(|i| dot(h.row(i), &a[..d])).collect();
    let target: Vec<f64> = (0..h.rows()).map(|i| dot(h.row(i), &a[d..])).collect();
    let mut values = vec![0.0; pattern.nnz()];
    for i in 0..pattern.n() {
        let span = pattern.row_range(i);
        if span.is_empty() {
            return Err(NnError::EmptyNeighborhood(i).into());
        }
        let cols = &pattern.col_indices()[span.clone()];
        let scores: Vec<f64> = cols
            .iter()
            .map(|&j| {
                let e = source[i] + target[j];
                if e > 0.0 {
                    e
                } else {
                    LEAKY_SLOPE * e
                }
            })
            .collect();
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
        for (slot, s) in values[span].iter_mut().zip(&scores) {
            *slot = (s - m).exp() / z;
        }
    }
    Ok(pattern.with_values(&values))
}

/// Attention coefficients on both neighbourhood systems.
///
/// `h_up` stacks the transformed upper features (`N × J_u F'`), `a_up` has
/// length `2 J_u F'`; likewise for the lower branch. A branch whose `h` has
/// no columns yields the identity.
pub fn attention_coefficients(
    h_up: &Matrix,
    h_down: &Matrix,
    a_up: &[f64],
    a_down: &[f64],
    neighborhoods: &NeighborhoodTable,
) -> Result<AttentionalLaplacians, SanError> {
    let branch = |h: &Matrix, a: &[f64], rows: &[Vec<usize>]| {
        if h.cols() == 0 && a.is_empty() {
            return Ok(SparseMatrix::identity(h.rows()));
        }
        pattern_attention(h, a, &SparsityPattern::from_rows(rows))
    };
    Ok(AttentionalLaplacians {
        l_up_att: branch(h_up, a_up, &neighborhoods.upper)?,
        l_down_att: branch(h_down, a_down, &neighborhoods.lower)?,
    })
}

/// Combines per-head pre-activations: concatenation applies `σ` per head,
/// averaging applies `σ` to the mean.
pub fn multi_head(blocks: &[Matrix], mode: HeadCombine, activation: Activation) -> Result<Matrix, SanError> {
    let first = blocks.first().ok_or(NnError::EmptyInput("multi_head"))?;
    if let Some(b) = blocks.iter().find(|b| b.shape() != first.shape()) {
        return Err(NnError::ShapeMismatch { op: "multi_head", left: first.shape(), right: b.shape() }.into());
    }
    let act = |m: &Matrix| m.map(|x| activation.apply_scalar(x));
    Ok(match mode {
        HeadCombine::Concat => {
            let activated: Vec<Matrix> = blocks.iter().map(act).collect();
            Matrix::hconcat(&activated.iter().collect::<Vec<_>>())
        }
        HeadCombine::Average => {
            let mut sum = Matrix::zeros(first.rows(), first.cols());
            for b in blocks {
                sum.add_assign(b);
            }
            act(&sum.scale(1.0 / blocks.len() as f64))
        }
    })
}

/// `Σ_p S^p Y_p` by Horner's rule, `S` applied through `apply`.
fn polynomial(
    tape: &Tape,
    ys: &[Var],
    apply: impl Fn(Var) -> Result<Var, NnError>,
) -> Result<Var, NnError> {
    let (last, rest) = ys.split_last().expect("non-empty filter");
    let mut acc = apply(*last)?;
    for &y in rest.iter().rev() {
        acc = apply(tape.add(y, acc)?)?;
    }
    Ok(acc)
}

/// Attention values (`nnz × 1`) for one branch.
fn branch_attention(tape: &Tape, ys: &[Var], a: Var, pattern: &Rc<SparsityPattern>) -> Result<Var, NnError> {
    let h = tape.concat_cols(ys)?;
    let d = tape.shape(h).1;
    let a_src = tape.slice_rows(a, 0, d)?;
    let a_dst = tape.slice_rows(a, d, d)?;
    let s_src = tape.matmul(h, a_src)?;
    let s_dst = tape.matmul(h, a_dst)?;
    let e = tape.edge_scores(pattern, s_src, s_dst)?;
    let e = tape.leaky_relu(e, LEAKY_SLOPE);
    tape.softmax_over_sets(pattern, e)
}

/// One filtering branch; `None` when the branch has no taps.
fn branch(
    tape: &Tape,
    z: Var,
    weights: &[Var],
    attention: Option<Var>,
    pattern: &Rc<SparsityPattern>,
    laplacian: &Rc<LinearOperator>,
) -> Result<Option<Var>, NnError> {
    if weights.is_empty() {
        return Ok(None);
    }
    let ys = weights.iter().map(|&w| tape.matmul(z, w)).collect::<Result<Vec<_>, _>>()?;
    let out = match attention {
        Some(a) => {
            let alpha = branch_attention(tape, &ys, a, pattern)?;
            polynomial(tape, &ys, |x| tape.pattern_matmul(pattern, alpha, x))?
        }
        None => polynomial(tape, &ys, |x| tape.operator_matmul(laplacian, x))?,
    };
    Ok(Some(out))
}

/// Pre-activation output of one head.
pub(crate) fn head_forward(
    tape: &Tape,
    z: Var,
    ops: &LayerOperators,
    config: &SanLayerConfig,
    head: &HeadVars,
) -> Result<Var, SanError> {
    let down_w = if config.tie_weights { &head.w_up } else { &head.w_down };
    let (a_up, a_down) = if !config.attention_enabled {
        (None, None)
    } else if config.shared_attention {
        (head.a_up, head.a_up)
    } else {
        (head.a_up, head.a_down)
    };
    let mut terms = Vec::with_capacity(3);
    terms.extend(branch(tape, z, down_w, a_down, &ops.lower, &ops.l_down)?);
    terms.extend(branch(tape, z, &head.w_up, a_up, &ops.upper, &ops.l_up)?);
    if let Some(w_h) = head.w_h {
        let zw = tape.matmul(z, w_h)?;
        let term = match config.harmonic {
            HarmonicMode::Projector(_) => {
                let p = ops
                    .projector
                    .as_ref()
                    .ok_or_else(|| SanError::InvalidConfig("projector mode but no projector was built".into()))?;
                tape.operator_matmul(p, zw)?
            }
            HarmonicMode::Skip | HarmonicMode::Off => zw,
        };
        terms.push(term);
    }
    Ok(tape.add_all(&terms)?)
}

/// Full layer on the tape: every head, activation and head combination.
pub(crate) fn layer_forward(
    tape: &Tape,
    z: Var,
    ops: &LayerOperators,
    config: &SanLayerConfig,
    vars: &LayerVars,
) -> Result<Var, SanError> {
    if vars.heads.len() != config.heads {
        return Err(SanError::InvalidConfig("head count does not match the configuration".into()));
    }
    let pre = vars.heads.iter().map(|h| head_forward(tape, z, ops, config, h)).collect::<Result<Vec<_>, _>>()?;
    Ok(match config.head_combine {
        HeadCombine::Concat => {
            let act: Vec<Var> = pre.iter().map(|&p| tape.activation(p, config.activation)).collect();
            tape.concat_cols(&act)?
        }
        HeadCombine::Average => {
            let sum = tape.add_all(&pre)?;
            let mean = tape.scale(sum, 1.0 / pre.len() as f64);
            tape.activation(mean, config.activation)
        }
    })
}

fn evaluate(
    z: &Matrix,
    ops: &LayerOperators,
    params: &SanLayerParams,
    config: &SanLayerConfig,
) -> Result<Matrix, SanError> {
    config.validate()?;
    params.check(config)?;
    let tape = Tape::new();
    let vars = params.bind(&tape, false);
    let zv = tape.constant(z.clone());
    let out = layer_forward(&tape, zv, ops, config, &vars)?;
    Ok(tape.value(out).as_ref().clone())
}

/// Convolutional layer on the fixed Laplacians.
pub fn scn_layer_forward(
    z: &Matrix,
    ops: &LayerOperators,
    params: &SanLayerParams,
    config: &SanLayerConfig,
) -> Result<Matrix, SanError> {
    if config.attention_enabled {
        return Err(SanError::InvalidConfig("convolutional layer needs attention disabled".into()));
    }
    evaluate(z, ops, params, config)
}

/// Attentional layer.
pub fn san_layer_forward(
    z: &Matrix,
    ops: &LayerOperators,
    params: &SanLayerParams,
    config: &SanLayerConfig,
) -> Result<Matrix, SanError> {
    if !config.attention_enabled {
        return Err(SanError::InvalidConfig("attentional layer needs attention enabled".into()));
    }
    evaluate(z, ops, params, config)
}

impl SanLayerParams {
    /// Attentional Laplacians each head would use on input `z`. Branches
    /// without attention report the identity.
    pub fn attention(
        &self,
        z: &Matrix,
        ops: &LayerOperators,
        config: &SanLayerConfig,
    ) -> Result<Vec<AttentionalLaplacians>, SanError> {
        params_check(self, config)?;
        let n = z.rows();
        self.heads
            .iter()
            .map(|h| {
                let down_w = if config.tie_weights { &h.w_up } else { &h.w_down };
                let a_down = if config.shared_attention { h.a_up.as_ref() } else { h.a_down.as_ref() };
                let side = |w: &[Matrix], a: Option<&Matrix>, pattern: &SparsityPattern| match a {
                    Some(a) if config.attention_enabled => {
                        pattern_attention(&transform_features(z, w)?, a.as_slice(), pattern)
                    }
                    _ => Ok(SparseMatrix::identity(n)),
                };
                Ok(AttentionalLaplacians {
                    l_up_att: side(&h.w_up, h.a_up.as_ref(), &ops.upper)?,
                    l_down_att: side(down_w, a_down, &ops.lower)?,
                })
            })
            .collect()
    }
}

fn params_check(params: &SanLayerParams, config: &SanLayerConfig) -> Result<(), SanError> {
    config.validate()?;
    params.check(config)
}

//! Reverse-mode differentiation over dense matrix expressions.
//!
//! A [`Tape`] records every operation in creation order, which is already a
//! topological order, so the backward pass is a single reverse sweep.
//! Handles are plain indices ([`Var`]); values live on the tape behind `Rc`
//! so reading them is cheap.

use std::cell::RefCell;
use std::rc::Rc;

use rand::Rng;

use super::NnError;
use crate::dense::Matrix;
use crate::sparse::{LinearOperator, SparsityPattern};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Pointwise nonlinearity of a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "id",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Operator(Rc<LinearOperator>, Var),
    PatternMatMul { pattern: Rc<SparsityPattern>, values: Var, rhs: Var },
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    ConcatCols(Vec<Var>),
    SliceRows { input: Var, start: usize },
    LeakyRelu(Var, f64),
    Relu(Var),
    Tanh(Var),
    EdgeScores { pattern: Rc<SparsityPattern>, source: Var, target: Var },
    SetSoftmax { pattern: Rc<SparsityPattern>, scores: Var },
    Dropout { input: Var, mask: Rc<Vec<f64>> },
    MeanRows(Var),
    Sum(Var),
    SumSquares(Var),
    CrossEntropy { logits: Var, label: usize },
    MaskedL1 { pred: Var, target: Rc<Matrix>, mask: Rc<Vec<bool>> },
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::MatMul(..) => "matmul",
            Op::Operator(..) => "operator_matmul",
            Op::PatternMatMul { .. } => "pattern_matmul",
            Op::Add(..) => "add",
            Op::AddRow(..) => "add_row",
            Op::Scale(..) => "scale",
            Op::ConcatCols(..) => "concat_cols",
            Op::SliceRows { .. } => "slice_rows",
            Op::LeakyRelu(..) => "leaky_relu",
            Op::Relu(..) => "relu",
            Op::Tanh(..) => "tanh",
            Op::EdgeScores { .. } => "edge_scores",
            Op::SetSoftmax { .. } => "softmax_over_sets",
            Op::Dropout { .. } => "dropout",
            Op::MeanRows(..) => "mean_rows",
            Op::Sum(..) => "sum",
            Op::SumSquares(..) => "sum_squares",
            Op::CrossEntropy { .. } => "cross_entropy",
            Op::MaskedL1 { .. } => "masked_l1",
        }
    }
}

struct Node {
    value: Rc<Matrix>,
    op: Op,
    requires_grad: bool,
}

/// Deliberately wrong backward rule, for negative-control tests of the
/// gradient checker.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fault {
    pub op: &'static str,
    pub factor: f64,
}

/// Gradients of a scalar loss with respect to every parameter leaf.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of a parameter. Parameters the loss does not depend on get
    /// zeros; `None` only for handles that are not parameters.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

/// Operation record for one forward/backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    fault: Option<Fault>,
}

fn shape_err(op: &'static str, left: (usize, usize), right: (usize, usize)) -> NnError {
    NnError::ShapeMismatch { op, left, right }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    #[doc(hidden)]
    pub fn with_fault(fault: Fault) -> Self {
        Self { nodes: RefCell::default(), fault: Some(fault) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Matrix, op: Op, requires_grad: bool) -> Var {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value: Rc::new(value), op, requires_grad });
        Var(nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        let nodes = self.nodes.borrow();
        vars.iter().any(|v| nodes[v.0].requires_grad)
    }

    /// A value that gradients do not flow into.
    pub fn constant(&self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A trainable leaf.
    pub fn param(&self, value: Matrix) -> Var {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, v: Var) -> Rc<Matrix> {
        Rc::clone(&self.nodes.borrow()[v.0].value)
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes.borrow()[v.0].value.shape()
    }

    /// Scalar value of a `1×1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes.borrow()[v.0].value.get(0, 0)
    }

    pub fn matmul(&self, a: Var, b: Var) -> Result<Var, NnError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.cols() != vb.rows() {
            return Err(shape_err("matmul", va.shape(), vb.shape()));
        }
        Ok(self.push(va.matmul(&vb), Op::MatMul(a, b), self.needs(&[a, b])))
    }

    /// Product with a constant (sparse or dense) operator.
    pub fn operator_matmul(&self, op: &Rc<LinearOperator>, x: Var) -> Result<Var, NnError> {
        let vx = self.value(x);
        if op.shape().1 != vx.rows() {
            return Err(shape_err("operator_matmul", op.shape(), vx.shape()));
        }
        Ok(self.push(op.apply(&vx), Op::Operator(Rc::clone(op), x), self.needs(&[x])))
    }

    /// `S · rhs` where `S` has the given pattern and per-entry `values`
    /// (an `nnz × 1` node).
    pub fn pattern_matmul(&self, pattern: &Rc<SparsityPattern>, values: Var, rhs: Var) -> Result<Var, NnError> {
        let (vv, vr) = (self.value(values), self.value(rhs));
        if vv.shape() != (pattern.nnz(), 1) {
            return Err(shape_err("pattern_matmul", (pattern.nnz(), 1), vv.shape()));
        }
        if vr.rows() != pattern.n() {
            return Err(shape_err("pattern_matmul", (pattern.n(), pattern.n()), vr.shape()));
        }
        let out = pattern.mul_dense(vv.as_slice(), &vr);
        Ok(self.push(
            out,
            Op::PatternMatMul { pattern: Rc::clone(pattern), values, rhs },
            self.needs(&[values, rhs]),
        ))
    }

    pub fn add(&self, a: Var, b: Var) -> Result<Var, NnError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(shape_err("add", va.shape(), vb.shape()));
        }
        Ok(self.push(va.add(&vb), Op::Add(a, b), self.needs(&[a, b])))
    }

    /// Adds a `1×F` row to every row of `a`.
    pub fn add_row(&self, a: Var, row: Var) -> Result<Var, NnError> {
        let (va, vr) = (self.value(a), self.value(row));
        if vr.rows() != 1 || vr.cols() != va.cols() {
            return Err(shape_err("add_row", va.shape(), vr.shape()));
        }
        let mut out = (*va).clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(vr.row(0)) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(a, row), self.needs(&[a, row])))
    }

    pub fn scale(&self, a: Var, s: f64) -> Var {
        let out = self.value(a).scale(s);
        self.push(out, Op::Scale(a, s), self.needs(&[a]))
    }

    /// Sum of several same-shaped nodes.
    pub fn add_all(&self, vars: &[Var]) -> Result<Var, NnError> {
        let (first, rest) = vars.split_first().ok_or(NnError::EmptyInput("add_all"))?;
        rest.iter().try_fold(*first, |acc, &v| self.add(acc, v))
    }

    pub fn concat_cols(&self, vars: &[Var]) -> Result<Var, NnError> {
        let values: Vec<Rc<Matrix>> = vars.iter().map(|&v| self.value(v)).collect();
        let first = values.first().ok_or(NnError::EmptyInput("concat_cols"))?;
        if let Some(bad) = values.iter().find(|m| m.rows() != first.rows()) {
            return Err(shape_err("concat_cols", first.shape(), bad.shape()));
        }
        let refs: Vec<&Matrix> = values.iter().map(|m| m.as_ref()).collect();
        Ok(self.push(Matrix::hconcat(&refs), Op::ConcatCols(vars.to_vec()), self.needs(vars)))
    }

    pub fn slice_rows(&self, a: Var, start: usize, len: usize) -> Result<Var, NnError> {
        let va = self.value(a);
        if start + len > va.rows() {
            return Err(shape_err("slice_rows", va.shape(), (start, len)));
        }
        Ok(self.push(va.row_block(start, len), Op::SliceRows { input: a, start }, self.needs(&[a])))
    }

    pub fn leaky_relu(&self, a: Var, slope: f64) -> Var {
        let out = self.value(a).map(|x| if x > 0.0 { x } else { slope * x });
        self.push(out, Op::LeakyRelu(a, slope), self.needs(&[a]))
    }

    pub fn relu(&self, a: Var) -> Var {
        let out = self.value(a).map(|x| x.max(0.0));
        self.push(out, Op::Relu(a), self.needs(&[a]))
    }

    pub fn tanh(&self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(out, Op::Tanh(a), self.needs(&[a]))
    }

    pub fn activation(&self, a: Var, act: Activation) -> Var {
        match act {
            Activation::Identity => a,
            Activation::Relu => self.relu(a),
            Activation::Tanh => self.tanh(a),
        }
    }

    /// Per-entry scores `source[i] + target[j]` for every `(i, j)` in the
    /// pattern; `source` and `target` are `n × 1`.
    pub fn edge_scores(&self, pattern: &Rc<SparsityPattern>, source: Var, target: Var) -> Result<Var, NnError> {
        let (vs, vt) = (self.value(source), self.value(target));
        let n = pattern.n();
        if vs.shape() != (n, 1) || vt.shape() != (n, 1) {
            return Err(shape_err("edge_scores", vs.shape(), vt.shape()));
        }
        let (s, t) = (vs.as_slice(), vt.as_slice());
        let data: Vec<f64> =
            pattern.row_indices().iter().zip(pattern.col_indices()).map(|(&i, &j)| s[i] + t[j]).collect();
        Ok(self.push(
            Matrix::from_vec(pattern.nnz(), 1, data),
            Op::EdgeScores { pattern: Rc::clone(pattern), source, target },
            self.needs(&[source, target]),
        ))
    }

    /// Softmax of per-entry scores within each pattern row.
    pub fn softmax_over_sets(&self, pattern: &Rc<SparsityPattern>, scores: Var) -> Result<Var, NnError> {
        let vs = self.value(scores);
        if vs.shape() != (pattern.nnz(), 1) {
            return Err(shape_err("softmax_over_sets", (pattern.nnz(), 1), vs.shape()));
        }
        let e = vs.as_slice();
        let mut out = vec![0.0; e.len()];
        for r in 0..pattern.n() {
            let span = pattern.row_range(r);
            if span.is_empty() {
                return Err(NnError::EmptyNeighborhood(r));
            }
            let m = e[span.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for k in span.clone() {
                out[k] = (e[k] - m).exp();
                z += out[k];
            }
            for k in span {
                out[k] /= z;
            }
        }
        Ok(self.push(
            Matrix::from_vec(pattern.nnz(), 1, out),
            Op::SetSoftmax { pattern: Rc::clone(pattern), scores },
            self.needs(&[scores]),
        ))
    }

    /// Inverted dropout: in training mode each entry survives with
    /// probability `1 - p` and is scaled by `1 / (1 - p)`; otherwise identity.
    pub fn dropout<R: Rng + ?Sized>(&self, a: Var, p: f64, training: bool, rng: &mut R) -> Var {
        if !training || p <= 0.0 {
            return a;
        }
        let va = self.value(a);
        let keep = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..va.len()).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
        let out = Matrix::from_vec(va.rows(), va.cols(), va.as_slice().iter().zip(&mask).map(|(x, m)| x * m).collect());
        self.push(out, Op::Dropout { input: a, mask: Rc::new(mask) }, self.needs(&[a]))
    }

    /// Column means, `1 × F`.
    pub fn mean_rows(&self, a: Var) -> Result<Var, NnError> {
        let va = self.value(a);
        if va.rows() == 0 {
            return Err(NnError::EmptyInput("mean_rows"));
        }
        let mut out = Matrix::zeros(1, va.cols());
        for r in 0..va.rows() {
            for (o, x) in out.row_mut(0).iter_mut().zip(va.row(r)) {
                *o += x;
            }
        }
        let n = va.rows() as f64;
        out.as_mut_slice().iter_mut().for_each(|v| *v /= n);
        Ok(self.push(out, Op::MeanRows(a), self.needs(&[a])))
    }

    pub fn sum(&self, a: Var) -> Var {
        let s = self.value(a).sum();
        self.push(Matrix::filled(1, 1, s), Op::Sum(a), self.needs(&[a]))
    }

    pub fn sum_squares(&self, a: Var) -> Var {
        let s = self.value(a).as_slice().iter().map(|v| v * v).sum();
        self.push(Matrix::filled(1, 1, s), Op::SumSquares(a), self.needs(&[a]))
    }

    /// Softmax cross-entropy of a `1 × C` row of logits against a class id.
    pub fn cross_entropy(&self, logits: Var, label: usize) -> Result<Var, NnError> {
        let vl = self.value(logits);
        if vl.rows() != 1 {
            return Err(shape_err("cross_entropy", vl.shape(), (1, vl.cols())));
        }
        if label >= vl.cols() {
            return Err(NnError::InvalidLabel { label, classes: vl.cols() });
        }
        let row = vl.row(0);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        Ok(self.push(Matrix::filled(1, 1, lse - row[label]), Op::CrossEntropy { logits, label }, self.needs(&[logits])))
    }

    /// Mean absolute error over entries where `mask` is true.
    pub fn masked_l1(&self, pred: Var, target: &Matrix, mask: &[bool]) -> Result<Var, NnError> {
        let vp = self.value(pred);
        if vp.shape() != target.shape() {
            return Err(shape_err("masked_l1", vp.shape(), target.shape()));
        }
        if mask.len() != vp.len() {
            return Err(shape_err("masked_l1", vp.shape(), (mask.len(), 1)));
        }
        let count = mask.iter().filter(|m| **m).count();
        if count == 0 {
            return Err(NnError::EmptyMask);
        }
        let loss = vp
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .zip(mask)
            .filter(|(_, m)| **m)
            .map(|((p, t), _)| (p - t).abs())
            .sum::<f64>()
            / count as f64;
        Ok(self.push(
            Matrix::filled(1, 1, loss),
            Op::MaskedL1 { pred, target: Rc::new(target.clone()), mask: Rc::new(mask.to_vec()) },
            self.needs(&[pred]),
        ))
    }

    /// Reverse sweep from a scalar node. Consumes the tape.
    pub fn backward(self, loss: Var) -> Result<Gradients, NnError> {
        let nodes = self.nodes.into_inner();
        let shape = nodes[loss.0].value.shape();
        if shape != (1, 1) {
            return Err(NnError::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; nodes.len()];
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        let accumulate = |grads: &mut Vec<Option<Matrix>>, v: Var, g: Matrix| {
            if !nodes[v.0].requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&g),
                slot @ None => *slot = Some(g),
            }
        };

        for idx in (0..=loss.0).rev() {
            let node = &nodes[idx];
            if matches!(node.op, Op::Leaf) || !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let factor = match self.fault {
                Some(f) if f.op == node.op.name() => f.factor,
                _ => 1.0,
            };
            let g = if factor != 1.0 { g.scale(factor) } else { g };
            let val = |v: Var| &nodes[v.0].value;
            match &node.op {
                Op::Leaf => unreachable!(),
                Op::MatMul(a, b) => {
                    if nodes[a.0].requires_grad {
                        accumulate(&mut grads, *a, g.matmul_t(val(*b)));
                    }
                    if nodes[b.0].requires_grad {
                        accumulate(&mut grads, *b, val(*a).t_matmul(&g));
                    }
                }
                Op::Operator(op, x) => accumulate(&mut grads, *x, op.apply_transpose(&g)),
                Op::PatternMatMul { pattern, values, rhs } => {
                    let vals = val(*values);
                    if nodes[values.0].requires_grad {
                        let x = val(*rhs);
                        let gv: Vec<f64> = pattern
                            .row_indices()
                            .iter()
                            .zip(pattern.col_indices())
                            .map(|(&i, &j)| g.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b).sum())
                            .collect();
                        accumulate(&mut grads, *values, Matrix::from_vec(pattern.nnz(), 1, gv));
                    }
                    if nodes[rhs.0].requires_grad {
                        accumulate(&mut grads, *rhs, pattern.t_mul_dense(vals.as_slice(), &g));
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g);
                }
                Op::AddRow(a, row) => {
                    let mut gr = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, x) in gr.row_mut(0).iter_mut().zip(g.row(r)) {
                            *o += x;
                        }
                    }
                    accumulate(&mut grads, *row, gr);
                    accumulate(&mut grads, *a, g);
                }
                Op::Scale(a, s) => accumulate(&mut grads, *a, g.scale(*s)),
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let w = nodes[p.0].value.cols();
                        accumulate(&mut grads, *p, g.col_block(offset, w));
                        offset += w;
                    }
                }
                Op::SliceRows { input, start } => {
                    let src = val(*input);
                    let mut full = Matrix::zeros(src.rows(), src.cols());
                    for r in 0..g.rows() {
                        full.row_mut(start + r).copy_from_slice(g.row(r));
                    }
                    accumulate(&mut grads, *input, full);
                }
                Op::LeakyRelu(a, slope) => {
                    let x = val(*a);
                    let d = zip_map(&g, x, |gi, xi| if xi > 0.0 { gi } else { slope * gi });
                    accumulate(&mut grads, *a, d);
                }
                Op::Relu(a) => {
                    let d = zip_map(&g, val(*a), |gi, xi| if xi > 0.0 { gi } else { 0.0 });
                    accumulate(&mut grads, *a, d);
                }
                Op::Tanh(a) => {
                    let d = zip_map(&g, &node.value, |gi, yi| gi * (1.0 - yi * yi));
                    accumulate(&mut grads, *a, d);
                }
                Op::EdgeScores { pattern, source, target } => {
                    let n = pattern.n();
                    let mut gs = vec![0.0; n];
                    let mut gt = vec![0.0; n];
                    for ((&i, &j), gk) in pattern.row_indices().iter().zip(pattern.col_indices()).zip(g.as_slice()) {
                        gs[i] += gk;
                        gt[j] += gk;
                    }
                    accumulate(&mut grads, *source, Matrix::from_vec(n, 1, gs));
                    accumulate(&mut grads, *target, Matrix::from_vec(n, 1, gt));
                }
                Op::SetSoftmax { pattern, scores } => {
                    let alpha = node.value.as_slice();
                    let gs = g.as_slice();
                    let mut d = vec![0.0; alpha.len()];
                    for r in 0..pattern.n() {
                        let span = pattern.row_range(r);
                        let dotp: f64 = span.clone().map(|k| alpha[k] * gs[k]).sum();
                        for k in span {
                            d[k] = alpha[k] * (gs[k] - dotp);
                        }
                    }
                    accumulate(&mut grads, *scores, Matrix::from_vec(alpha.len(), 1, d));
                }
                Op::Dropout { input, mask } => {
                    let d = Matrix::from_vec(
                        g.rows(),
                        g.cols(),
                        g.as_slice().iter().zip(mask.iter()).map(|(a, m)| a * m).collect(),
                    );
                    accumulate(&mut grads, *input, d);
                }
                Op::MeanRows(a) => {
                    let x = val(*a);
                    let n = x.rows() as f64;
                    let mut d = Matrix::zeros(x.rows(), x.cols());
                    for r in 0..x.rows() {
                        for (o, gi) in d.row_mut(r).iter_mut().zip(g.row(0)) {
                            *o = gi / n;
                        }
                    }
                    accumulate(&mut grads, *a, d);
                }
                Op::Sum(a) => {
                    let x = val(*a);
                    accumulate(&mut grads, *a, Matrix::filled(x.rows(), x.cols(), g.get(0, 0)));
                }
                Op::SumSquares(a) => {
                    let s = 2.0 * g.get(0, 0);
                    accumulate(&mut grads, *a, val(*a).scale(s));
                }
                Op::CrossEntropy { logits, label } => {
                    let row = val(*logits).row(0).to_vec();
                    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
                    let z: f64 = exps.iter().sum();
                    let scale = g.get(0, 0);
                    let d: Vec<f64> = exps
                        .iter()
                        .enumerate()
                        .map(|(c, e)| scale * (e / z - if c == *label { 1.0 } else { 0.0 }))
                        .collect();
                    accumulate(&mut grads, *logits, Matrix::from_vec(1, row.len(), d));
                }
                Op::MaskedL1 { pred, target, mask } => {
                    let p = val(*pred);
                    let count = mask.iter().filter(|m| **m).count() as f64;
                    let scale = g.get(0, 0) / count;
                    let d: Vec<f64> = p
                        .as_slice()
                        .iter()
                        .zip(target.as_slice())
                        .zip(mask.iter())
                        .map(|((pi, ti), &m)| if m { scale * sign(pi - ti) } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *pred, Matrix::from_vec(p.rows(), p.cols(), d));
                }
            }
        }

        // parameters unreachable from the loss get explicit zeros
        for (idx, node) in nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) && node.requires_grad && grads[idx].is_none() {
                grads[idx] = Some(Matrix::zeros(node.value.rows(), node.value.cols()));
            } else if !matches!(node.op, Op::Leaf) || !node.requires_grad {
                grads[idx] = None;
            }
        }
        Ok(Gradients { grads })
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn zip_map(g: &Matrix, x: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    Matrix::from_vec(g.rows(), g.cols(), g.as_slice().iter().zip(x.as_slice()).map(|(&a, &b)| f(a, b)).collect())
}

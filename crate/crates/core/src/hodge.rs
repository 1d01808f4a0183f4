//! Hodge decomposition of simplicial signals and harmonic projectors.
//!
//! A `k`-signal splits orthogonally into an irrotational part in
//! `im(B_kᵀ)`, a solenoidal part in `im(B_{k+1})` and a harmonic part in
//! `ker(L_k)`. The dense harmonic projector comes from a symmetric
//! eigendecomposition; the sparse one is the truncated power series
//! `(I - εL)^J`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dense::Matrix;
use crate::sparse::{LinearOperator, SparseMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum HodgeError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("symmetric eigensolver did not converge")]
    EigenFailure,
    #[error("epsilon {epsilon} outside (0, {bound}]")]
    EpsilonOutOfRange { epsilon: f64, bound: f64 },
}

/// Power iteration steps used for the largest-eigenvalue estimate.
pub const POWER_ITERATIONS: usize = 200;
/// Relative change at which power iteration stops early.
pub const POWER_TOLERANCE: f64 = 1e-8;
/// Safety inflation applied to the power-iteration estimate.
pub const LAMBDA_MAX_INFLATION: f64 = 1.01;
/// Fill fraction above which `(I - εL)^J` is kept dense.
pub const DENSE_FILL_THRESHOLD: f64 = 0.5;

/// Largest eigenvalue of a symmetric PSD matrix by power iteration (Rayleigh
/// quotient of the final iterate). Deterministic start vector.
pub fn power_iteration(m: &SparseMatrix, max_iter: usize, tol: f64) -> f64 {
    let n = m.n_rows();
    if n == 0 || m.nnz() == 0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = m.mul_vec(&v);
        let next = dot(&v, &w);
        let norm = dot(&w, &w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.into_iter().map(|x| x / norm).collect();
        let converged = (next - lambda).abs() <= tol * next.abs().max(1e-300);
        lambda = next;
        if converged {
            break;
        }
    }
    let w = m.mul_vec(&v);
    dot(&v, &w).max(lambda)
}

/// Power-iteration estimate of `λ_max`, inflated by 1%.
pub fn estimate_lambda_max(l: &SparseMatrix) -> f64 {
    power_iteration(l, POWER_ITERATIONS, POWER_TOLERANCE) * LAMBDA_MAX_INFLATION
}

/// Parameters of the sparse harmonic projector `(I - εL)^J`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSpec {
    pub epsilon: f64,
    pub order: usize,
}

impl ProjectorSpec {
    pub fn new(epsilon: f64, order: usize) -> Self {
        Self { epsilon, order }
    }

    /// Largest admissible step `2 / λ̂_max` for this Laplacian.
    pub fn admissible_bound(l: &SparseMatrix) -> f64 {
        let lambda = estimate_lambda_max(l);
        if lambda > 0.0 {
            2.0 / lambda
        } else {
            f64::INFINITY
        }
    }

    pub fn validate(&self, l: &SparseMatrix) -> Result<(), HodgeError> {
        let bound = Self::admissible_bound(l);
        if !(self.epsilon > 0.0 && self.epsilon <= bound) {
            return Err(HodgeError::EpsilonOutOfRange { epsilon: self.epsilon, bound });
        }
        Ok(())
    }

    /// Copy with `epsilon` reduced to the admissible bound if it exceeds it.
    pub fn clamped(&self, l: &SparseMatrix) -> Self {
        Self { epsilon: self.epsilon.min(Self::admissible_bound(l)), order: self.order }
    }
}

/// The three orthogonal components of a simplicial signal.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeParts {
    pub irrotational: Vec<f64>,
    pub solenoidal: Vec<f64>,
    pub harmonic: Vec<f64>,
}

/// Eigenpairs of a Laplacian, ascending.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: Matrix,
    pub harmonic_dim: usize,
}

impl SpectralBasis {
    /// Eigenvectors spanning the kernel, as columns.
    pub fn harmonic_basis(&self) -> Matrix {
        self.eigenvectors.col_block(0, self.harmonic_dim)
    }
}

const LSQ_TOLERANCE: f64 = 1e-13;
const PART_FLOOR: f64 = 1e-11;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// CGLS for `min ‖x − a z‖` with symmetric `a`. Returns `(a z, x − a z)`.
/// Stops once `‖a s‖ ≤ tol ‖a‖_F ‖s‖` for the residual `s`, i.e. when `s`
/// is orthogonal to the image up to rounding.
fn least_squares(a: &SparseMatrix, x: &[f64], norm_a: f64, max_iter: usize) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut z = vec![0.0; n];
    let mut s = x.to_vec();
    let mut r = a.mul_vec(&s);
    let mut p = r.clone();
    let mut gamma = dot(&r, &r);
    for _ in 0..max_iter {
        if gamma.sqrt() <= LSQ_TOLERANCE * norm_a * dot(&s, &s).sqrt() {
            break;
        }
        let q = a.mul_vec(&p);
        let qq = dot(&q, &q);
        if qq == 0.0 {
            break;
        }
        let alpha = gamma / qq;
        for i in 0..n {
            z[i] += alpha * p[i];
            s[i] -= alpha * q[i];
        }
        r = a.mul_vec(&s);
        let next = dot(&r, &r);
        let beta = next / gamma;
        gamma = next;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let az = a.mul_vec(&z);
    let s = x.iter().zip(&az).map(|(xi, ai)| xi - ai).collect();
    (az, s)
}

/// Orthogonal projection of `x` onto the column space of the symmetric
/// matrix `a`, by CGLS on `min ‖x − a z‖`, refined on the recomputed
/// residual.
pub fn project_onto_image(a: &SparseMatrix, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let norm_a = dot(a.values(), a.values()).sqrt();
    if norm_a == 0.0 {
        return vec![0.0; n];
    }
    let max_iter = 4 * n + 50;
    let mut projection = vec![0.0; n];
    let mut residual = x.to_vec();
    for _ in 0..3 {
        let ar = a.mul_vec(&residual);
        if dot(&ar, &ar).sqrt() <= LSQ_TOLERANCE * norm_a * dot(&residual, &residual).sqrt() {
            break;
        }
        let (step, rest) = least_squares(a, &residual, norm_a, max_iter);
        projection.iter_mut().zip(step).for_each(|(p, d)| *p += d);
        residual = rest;
    }
    projection
}

fn check_dim(expected: usize, actual: usize) -> Result<(), HodgeError> {
    if expected != actual {
        return Err(HodgeError::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Splits `x` into irrotational, solenoidal and harmonic parts. Parts whose
/// norm is below `1e-11 ‖x‖` are rounding residue and are set to zero.
pub fn hodge_decompose(x: &[f64], l_down: &SparseMatrix, l_up: &SparseMatrix) -> Result<HodgeParts, HodgeError> {
    check_dim(l_down.n_rows(), x.len())?;
    check_dim(l_up.n_rows(), x.len())?;
    check_dim(l_down.n_cols(), l_up.n_cols())?;
    let scale = dot(x, x).sqrt();
    let floor = PART_FLOOR * scale;
    let snap = |mut v: Vec<f64>| {
        if dot(&v, &v).sqrt() <= floor {
            v.iter_mut().for_each(|e| *e = 0.0);
        }
        v
    };
    let irrotational = snap(project_onto_image(l_down, x));
    let solenoidal = snap(project_onto_image(l_up, x));
    let harmonic = snap(x.iter().zip(&irrotational).zip(&solenoidal).map(|((a, b), c)| a - b - c).collect());
    Ok(HodgeParts { irrotational, solenoidal, harmonic })
}

/// Net flow at each node, `B_1 x`.
pub fn divergence(b1: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>, HodgeError> {
    check_dim(b1.n_cols(), x.len())?;
    Ok(b1.mul_vec(x))
}

/// Circulation around each triangle, `B_2ᵀ x`.
pub fn curl(b2: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>, HodgeError> {
    check_dim(b2.n_rows(), x.len())?;
    Ok(b2.t_mul_vec(x))
}

/// Full eigendecomposition of a symmetric matrix; eigenvalues below
/// `zero_tol` count as harmonic. `zero_tol = None` uses `1e-8 λ_max`.
pub fn spectral_basis(l: &SparseMatrix, zero_tol: Option<f64>) -> Result<SpectralBasis, HodgeError> {
    let n = l.n_rows();
    check_dim(n, l.n_cols())?;
    if n == 0 {
        return Ok(SpectralBasis { eigenvalues: vec![], eigenvectors: Matrix::zeros(0, 0), harmonic_dim: 0 });
    }
    let dense = l.to_dense();
    let m = DMatrix::from_row_slice(n, n, dense.as_slice());
    let eig = SymmetricEigen::try_new(m, 1e-14, 10_000).ok_or(HodgeError::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors.set(row, col, eig.eigenvectors[(row, src)]);
        }
    }
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let tol = zero_tol.unwrap_or(1e-8 * lambda_max.max(1.0));
    let harmonic_dim = eigenvalues.iter().take_while(|&&v| v < tol).count();
    Ok(SpectralBasis { eigenvalues, eigenvectors: vectors, harmonic_dim })
}

/// Dense projector `Ũ Ũᵀ` onto the kernel of `l`.
pub fn exact_harmonic_projector(l: &SparseMatrix, zero_tol: Option<f64>) -> Result<Matrix, HodgeError> {
    let basis = spectral_basis(l, zero_tol)?;
    let u = basis.harmonic_basis();
    Ok(u.matmul_t(&u))
}

/// Dimension of `ker(l)`.
pub fn harmonic_dimension(l: &SparseMatrix, zero_tol: Option<f64>) -> Result<usize, HodgeError> {
    Ok(spectral_basis(l, zero_tol)?.harmonic_dim)
}

/// `(I - εL)^J` by repeated sparse products; switches to a dense
/// representation once the fill passes 50%.
pub fn sparse_harmonic_projector(l: &SparseMatrix, spec: &ProjectorSpec) -> Result<LinearOperator, HodgeError> {
    check_dim(l.n_rows(), l.n_cols())?;
    let n = l.n_rows();
    if spec.order == 0 {
        return Ok(LinearOperator::Sparse(SparseMatrix::identity(n)));
    }
    spec.validate(l)?;
    Ok(projector_power(l, spec.epsilon, spec.order))
}

/// `(I - εL)^J` without the step-size check.
pub(crate) fn projector_power(l: &SparseMatrix, epsilon: f64, order: usize) -> LinearOperator {
    let n = l.n_rows();
    let step = SparseMatrix::identity(n).add(&l.scale(-epsilon));
    let mut acc = LinearOperator::Sparse(SparseMatrix::identity(n));
    for _ in 0..order {
        acc = match acc {
            LinearOperator::Sparse(s) => {
                let next = s.mul_sparse(&step);
                if next.fill() > DENSE_FILL_THRESHOLD {
                    LinearOperator::Dense(next.to_dense())
                } else {
                    LinearOperator::Sparse(next)
                }
            }
            // powers of the same matrix commute
            LinearOperator::Dense(d) => LinearOperator::Dense(step.mul_dense(&d)),
        };
    }
    acc
}

//! The type I_N factor in standard form.
//!
//! The Hilbert space is the space of N×N complex matrices with inner
//! product `⟨x, y⟩ = (1/N)·Trace(x†y)`. The algebra acts by left
//! multiplication, its commutant by right multiplication, the identity
//! matrix is the trace vector and `x ↦ x†` is the trace conjugation.
//!
//! Superoperators act on `vec(x)`, which stacks the columns of `x` top to
//! bottom (`vec(x)[i + N·j] = x[i, j]`). Under this convention
//! `vec(A·X·B) = (Bᵀ ⊗ A)·vec(X)`. Since the inner product is the Euclidean
//! one on `vec` up to the factor `1/N`, adjoints of superoperators are plain
//! conjugate transposes.

use std::ops::Mul;

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::matkit::{self, c, identity, kron, CMatrix, Tolerances, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorModel {
    n: usize,
    tol: Tolerances,
}

impl FactorModel {
    pub fn new(n: usize, tol: Tolerances) -> Result<Self> {
        if n == 0 {
            return Err(invalid("matrix dimension must be at least 1"));
        }
        Ok(FactorModel { n, tol })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the Hilbert space, N².
    pub fn hilbert_dim(&self) -> usize {
        self.n * self.n
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn with_tol(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn trace_vector(&self) -> HVector {
        HVector::new(identity(self.n))
    }

    /// Normalized trace `(1/N)·Trace(a)`.
    pub fn trace(&self, a: &CMatrix) -> C64 {
        a.trace() / c(self.n as f64)
    }

    pub fn inner(&self, x: &HVector, y: &HVector) -> C64 {
        x.mat.dotc(&y.mat) / c(self.n as f64)
    }

    pub fn norm(&self, x: &HVector) -> f64 {
        (x.mat.norm_squared() / self.n as f64).sqrt()
    }

    pub(crate) fn check_shape(&self, m: &CMatrix, what: &str) -> Result<()> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(invalid(format!(
                "{what} must be {n}x{n}, got {}x{}",
                m.nrows(),
                m.ncols(),
                n = self.n
            )));
        }
        matkit::ensure_finite(m, what)
    }

    pub(crate) fn check_superop(&self, m: &CMatrix, what: &str) -> Result<()> {
        let d = self.hilbert_dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(invalid(format!(
                "{what} must be {d}x{d}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        matkit::ensure_finite(m, what)
    }
}

/// `make_model`: the standard-form realization for dimension `n`.
pub fn make_model(n: usize, tol: Tolerances) -> Result<FactorModel> {
    FactorModel::new(n, tol)
}

/// An element of the Hilbert space (an N×N matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct HVector {
    pub mat: CMatrix,
}

impl HVector {
    pub fn new(mat: CMatrix) -> Self {
        HVector { mat }
    }

    pub fn n(&self) -> usize {
        self.mat.nrows()
    }

    /// Column-stacked coordinates.
    pub fn to_vec(&self) -> DVector<C64> {
        DVector::from_column_slice(self.mat.as_slice())
    }

    pub fn from_vec(n: usize, v: &DVector<C64>) -> Self {
        HVector {
            mat: CMatrix::from_column_slice(n, n, v.as_slice()),
        }
    }
}

/// An element of the algebra, acting by left multiplication.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorElement {
    pub mat: CMatrix,
}

impl FactorElement {
    pub fn new(mat: CMatrix) -> Self {
        FactorElement { mat }
    }

    pub fn apply(&self, x: &HVector) -> HVector {
        HVector::new(&self.mat * &x.mat)
    }
}

/// A linear map on the Hilbert space as an N²×N² matrix acting on `vec(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    pub smat: CMatrix,
}

impl SuperOperator {
    pub fn new(smat: CMatrix) -> Self {
        SuperOperator { smat }
    }

    pub fn identity(n: usize) -> Self {
        SuperOperator::new(identity(n * n))
    }

    /// Superoperator of `X ↦ a·X·b`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        SuperOperator::new(kron(&b.transpose(), a))
    }

    pub fn n(&self) -> usize {
        (self.smat.nrows() as f64).sqrt().round() as usize
    }

    pub fn apply(&self, x: &HVector) -> HVector {
        HVector::from_vec(x.n(), &(&self.smat * x.to_vec()))
    }

    pub fn adjoint(&self) -> Self {
        SuperOperator::new(self.smat.adjoint())
    }
}

impl Mul for &SuperOperator {
    type Output = SuperOperator;
    fn mul(self, rhs: &SuperOperator) -> SuperOperator {
        SuperOperator::new(&self.smat * &rhs.smat)
    }
}

/// An antilinear map `x ↦ cmat·conj(vec x)`.
///
/// Composition rules (all in operator order, right factor applied first):
/// antilinear∘antilinear is linear with matrix `c₁·conj(c₂)`,
/// antilinear∘linear is antilinear with `c·conj(L)`,
/// linear∘antilinear is antilinear with `L·c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AntilinearOp {
    pub cmat: CMatrix,
}

impl AntilinearOp {
    pub fn new(cmat: CMatrix) -> Self {
        AntilinearOp { cmat }
    }

    /// Entrywise complex conjugation of `vec` coordinates.
    pub fn entrywise(n: usize) -> Self {
        AntilinearOp::new(identity(n * n))
    }

    pub fn n(&self) -> usize {
        (self.cmat.nrows() as f64).sqrt().round() as usize
    }

    pub fn apply_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.cmat * v.map(|z| z.conj())
    }

    pub fn apply(&self, x: &HVector) -> HVector {
        HVector::from_vec(x.n(), &self.apply_vec(&x.to_vec()))
    }

    /// The antilinear adjoint, `⟨A*x, y⟩ = conj⟨x, Ay⟩`.
    pub fn adjoint(&self) -> Self {
        AntilinearOp::new(self.cmat.transpose())
    }

    /// Largest of the involution defect `‖A∘A − I‖` and the unitarity
    /// defect of the matrix; zero for an exact conjugation.
    pub fn conjugation_residual(&self) -> f64 {
        let d = self.cmat.nrows();
        let square = &self.cmat * self.cmat.map(|z| z.conj());
        matkit::op_norm(&(square - identity(d))).max(matkit::unitary_residual(&self.cmat))
    }

    /// `A∘L∘A` as a linear operator.
    pub fn conjugate_op(&self, op: &SuperOperator) -> SuperOperator {
        &(self * op) * self
    }
}

impl Mul for &AntilinearOp {
    type Output = SuperOperator;
    fn mul(self, rhs: &AntilinearOp) -> SuperOperator {
        SuperOperator::new(&self.cmat * rhs.cmat.map(|z| z.conj()))
    }
}

impl Mul<&SuperOperator> for &AntilinearOp {
    type Output = AntilinearOp;
    fn mul(self, rhs: &SuperOperator) -> AntilinearOp {
        AntilinearOp::new(&self.cmat * rhs.smat.map(|z| z.conj()))
    }
}

impl Mul<&AntilinearOp> for &SuperOperator {
    type Output = AntilinearOp;
    fn mul(self, rhs: &AntilinearOp) -> AntilinearOp {
        AntilinearOp::new(&self.smat * &rhs.cmat)
    }
}

/// The trace conjugation `J: x ↦ x†` (fixes the trace vector).
pub fn trace_conjugation(model: &FactorModel) -> AntilinearOp {
    let n = model.n();
    let d = n * n;
    let mut cmat = CMatrix::zeros(d, d);
    for i in 0..n {
        for j in 0..n {
            cmat[(i + n * j, j + n * i)] = c(1.0);
        }
    }
    AntilinearOp::new(cmat)
}

/// Superoperator of `x ↦ a·x` (the algebra).
pub fn left_superop(model: &FactorModel, a: &FactorElement) -> Result<SuperOperator> {
    model.check_shape(&a.mat, "left multiplier")?;
    Ok(SuperOperator::new(kron(&identity(model.n()), &a.mat)))
}

/// Superoperator of `x ↦ x·b` (the commutant).
pub fn right_superop(model: &FactorModel, b: &FactorElement) -> Result<SuperOperator> {
    model.check_shape(&b.mat, "right multiplier")?;
    Ok(SuperOperator::new(kron(&b.mat.transpose(), &identity(model.n()))))
}

/// Matrix unit `E_pq`.
pub fn matrix_unit(n: usize, p: usize, q: usize) -> CMatrix {
    let mut e = CMatrix::zeros(n, n);
    e[(p, q)] = c(1.0);
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `span{A·u}`, the algebra applied to `u`.
    Left,
    /// `span{u·A}`, the commutant applied to `u`.
    Right,
}

/// Orthonormal basis (columns, in `vec` coordinates, Euclidean-orthonormal)
/// of a cyclic subspace, with its dimension.
#[derive(Debug, Clone)]
pub struct CyclicSubspace {
    pub basis: CMatrix,
    pub dim: usize,
}

impl CyclicSubspace {
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }
}

/// Rank threshold used for every cyclicity decision: `N²·eq_tol`.
pub fn rank_threshold(model: &FactorModel) -> f64 {
    model.hilbert_dim() as f64 * model.tol().eq_tol
}

/// Span of vectors given in `vec` coordinates, with the model's rank
/// threshold.
pub fn span_of(model: &FactorModel, vectors: &[DVector<C64>]) -> CyclicSubspace {
    let d = model.hilbert_dim();
    let cols = if vectors.is_empty() {
        CMatrix::zeros(d, 0)
    } else {
        CMatrix::from_columns(vectors)
    };
    let basis = matkit::span_basis(&cols, rank_threshold(model));
    let dim = basis.ncols();
    CyclicSubspace { basis, dim }
}

/// `[M₀u]` (left) or `[M₀′u]` (right) from the N² spanning vectors
/// `E_pq·u` resp. `u·E_pq`.
pub fn cyclic_subspace(model: &FactorModel, side: Side, u: &HVector) -> Result<CyclicSubspace> {
    model.check_shape(&u.mat, "vector")?;
    let n = model.n();
    let mut spanning = Vec::with_capacity(n * n);
    for p in 0..n {
        for q in 0..n {
            let e = matrix_unit(n, p, q);
            let img = match side {
                Side::Left => &e * &u.mat,
                Side::Right => &u.mat * &e,
            };
            spanning.push(HVector::new(img).to_vec());
        }
    }
    Ok(span_of(model, &spanning))
}

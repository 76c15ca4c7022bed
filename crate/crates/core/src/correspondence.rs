//! Vectors of the standard form versus operators of the algebra.
//!
//! Every vector `u` is `T_u·u_tr` for exactly one algebra element, namely
//! left multiplication by the matrix `u` itself. Cyclicity and separation of
//! `u` reduce to invertibility of that matrix.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::matkit;
use crate::standard_form::{
    cyclic_subspace, rank_threshold, FactorElement, FactorModel, HVector, Side,
};

/// `T_u`, the unique algebra element with `T_u·u_tr = u`.
pub fn operator_of_vector(model: &FactorModel, u: &HVector) -> Result<FactorElement> {
    model.check_shape(&u.mat, "vector")?;
    Ok(FactorElement::new(u.mat.clone()))
}

#[derive(Debug, Clone)]
pub struct OperatorVector {
    pub u: HVector,
    /// `tr(T†T)`.
    pub hs_norm_sq: f64,
    /// `|tr(T†T) − tr(TT†)|`, zero up to rounding.
    pub trace_gap: f64,
}

/// `u = T·u_tr` together with the Hilbert–Schmidt norm `tr(T†T) = ‖u‖²`.
pub fn vector_of_operator(model: &FactorModel, t: &FactorElement) -> Result<OperatorVector> {
    model.check_shape(&t.mat, "operator")?;
    let u = t.apply(&model.trace_vector());
    let tt = model.trace(&(t.mat.adjoint() * &t.mat)).re;
    let tt_rev = model.trace(&(&t.mat * t.mat.adjoint())).re;
    Ok(OperatorVector {
        u,
        hs_norm_sq: tt,
        trace_gap: (tt - tt_rev).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VectorReport {
    pub cyclic: bool,
    pub separating: bool,
    pub sigma_min: f64,
    /// `N²·eq_tol·‖u‖`.
    pub threshold: f64,
    /// `sigma_min` within a factor 10 of the threshold.
    pub borderline: bool,
    /// Dimensions of `[M₀u]` and `[M₀′u]` from brute-force spans.
    pub cyclic_dims: (usize, usize),
    /// The singular-value verdicts agree with the span dimensions.
    pub oracle_agrees: bool,
}

impl VectorReport {
    pub fn cyclic_and_separating(&self) -> bool {
        self.cyclic && self.separating
    }
}

/// Cyclic/separating verdicts from the smallest singular value of `u`,
/// cross-checked against the dimensions of the cyclic subspaces.
pub fn classify_vector(model: &FactorModel, u: &HVector) -> Result<VectorReport> {
    model.check_shape(&u.mat, "vector")?;
    let sigma_min = u.mat.clone().singular_values().min();
    let threshold = rank_threshold(model) * model.norm(u);
    // injective T_u ⇔ invertible ⇔ dense range in finite dimension
    let cyclic = sigma_min > threshold;
    let separating = cyclic;
    let borderline = sigma_min > threshold / 10.0 && sigma_min < threshold * 10.0;
    let full = model.hilbert_dim();
    let left = cyclic_subspace(model, Side::Left, u)?.dim;
    let right = cyclic_subspace(model, Side::Right, u)?.dim;
    let oracle_agrees = cyclic == (left == full) && separating == (right == full);
    Ok(VectorReport {
        cyclic,
        separating,
        sigma_min,
        threshold,
        borderline,
        cyclic_dims: (left, right),
        oracle_agrees,
    })
}

/// Trace of a positive element through its spectral resolution:
/// `Σ λ_i·‖E_i u_tr‖²` over the eigenprojections `E_i`.
pub fn trace_of_positive(model: &FactorModel, a: &FactorElement) -> Result<f64> {
    model.check_shape(&a.mat, "operator")?;
    let tol = model.tol();
    let eig = matkit::herm_eig(&a.mat, tol)
        .map_err(|_| invalid("trace_of_positive needs a Hermitian operator"))?;
    matkit::check_psd(&eig, tol)?;
    let u_tr = model.trace_vector();
    let mut total = 0.0;
    for cluster in matkit::group_eigenvalues(&eig.values, tol.spec_tol) {
        let block = eig.columns(&cluster.indices);
        let proj = &block * block.adjoint();
        let e_u = HVector::new(&proj * &u_tr.mat);
        total += cluster.value * model.norm(&e_u).powi(2);
    }
    Ok(total)
}

/// `(1/N)·Trace(a)` as a real number, for comparison with
/// [`trace_of_positive`].
pub fn normalized_trace_real(model: &FactorModel, a: &FactorElement) -> f64 {
    model.trace(&a.mat).re
}

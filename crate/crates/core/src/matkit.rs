//! Dense complex linear algebra and the tolerance policy shared by every
//! other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Every residual is measured
//! relative to an operator (spectral) norm, with an absolute floor of
//! [`ABS_FLOOR`] for references whose norm is essentially zero.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Absolute fallback used when a reference norm is too small to divide by.
pub const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative tolerance for residual checks.
    pub eq_tol: f64,
    /// Relative tolerance for eigenvalue clustering.
    pub spec_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq_tol: 1e-9,
            spec_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn new(eq_tol: f64, spec_tol: f64) -> Result<Self> {
        for (name, v) in [("eq_tol", eq_tol), ("spec_tol", spec_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        Ok(Tolerances { eq_tol, spec_tol })
    }
}

/// Ascending eigenvalues with a unitary matrix of eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct EigSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Apply a real function to the spectrum: `V f(D) V†`.
    pub fn map<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let fv = f(v);
            for i in 0..n {
                scaled[(i, j)] *= fv;
            }
        }
        &scaled * self.vectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|v| C64::new(v, 0.0))
    }

    /// Columns of the eigenvectors with the given indices.
    pub fn columns(&self, indices: &[usize]) -> CMatrix {
        CMatrix::from_fn(self.vectors.nrows(), indices.len(), |i, j| {
            self.vectors[(i, indices[j])]
        })
    }
}

/// A run of nearby eigenvalues treated as one spectral point.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// Arithmetic mean of the members.
    pub value: f64,
    pub indices: Vec<usize>,
}

impl Cluster {
    pub fn multiplicity(&self) -> usize {
        self.indices.len()
    }
}

/// Result of the left polar decomposition `T = P·W`.
#[derive(Debug, Clone)]
pub struct LeftPolar {
    pub p: CMatrix,
    pub w: CMatrix,
}

/// `S ≈ superop(X ↦ A·X·B)` with the rearrangement residual.
#[derive(Debug, Clone)]
pub struct KronFactors {
    pub left: CMatrix,
    pub right: CMatrix,
    pub residual: f64,
}

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(a: &CMatrix, what: &str) -> Result<()> {
    if is_finite(a) {
        Ok(())
    } else {
        Err(invalid(format!("{what} has non-finite entries")))
    }
}

pub fn ensure_square(a: &CMatrix, what: &str) -> Result<()> {
    if a.nrows() == a.ncols() {
        Ok(())
    } else {
        Err(invalid(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

/// Spectral norm.
pub fn op_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

/// `‖a − b‖ / max(‖b‖, ABS_FLOOR)` in the spectral norm.
pub fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    op_norm(&(a - b)) / op_norm(b).max(ABS_FLOOR)
}

/// `‖a‖ / max(scale, ABS_FLOOR)`.
pub fn rel_norm(a: &CMatrix, scale: f64) -> f64 {
    op_norm(a) / scale.max(ABS_FLOOR)
}

pub fn hermitian_residual(a: &CMatrix) -> f64 {
    rel_norm(&(a - a.adjoint()), op_norm(a))
}

/// Unitarity defect `‖U†U − I‖`.
pub fn unitary_residual(u: &CMatrix) -> f64 {
    op_norm(&(u.adjoint() * u - identity(u.ncols())))
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues are returned ascending. Inside each eigenvalue cluster
/// (clustered with `tol.spec_tol`) the basis is re-chosen by pivoted
/// Gram–Schmidt on the columns of the cluster projector, so the output does
/// not depend on whatever basis the underlying solver happened to pick. Each
/// vector is phased so that its pivot entry is real and positive.
pub fn herm_eig(a: &CMatrix, tol: &Tolerances) -> Result<EigSystem> {
    ensure_square(a, "herm_eig input")?;
    ensure_finite(a, "herm_eig input")?;
    let n = a.nrows();
    if n == 0 {
        return Ok(EigSystem {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let herm = hermitian_residual(a);
    if herm > tol.eq_tol {
        return Err(invalid(format!(
            "matrix is not Hermitian (relative defect {herm:e})"
        )));
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let raw = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);

    let mut vectors = CMatrix::zeros(n, n);
    for cluster in group_eigenvalues(&values, tol.spec_tol) {
        let block = CMatrix::from_fn(n, cluster.indices.len(), |i, j| {
            raw[(i, cluster.indices[j])]
        });
        let projector = &block * block.adjoint();
        let basis = pivoted_orthonormalize(&projector, cluster.indices.len());
        for (k, &idx) in cluster.indices.iter().enumerate() {
            vectors.set_column(idx, &basis.column(k));
        }
    }
    Ok(EigSystem { values, vectors })
}

/// Pick `count` orthonormal vectors from the column span of `cols` by
/// Gram–Schmidt with column pivoting (largest remaining residual first,
/// lowest index on ties). The pivot entry of each vector is made real
/// positive.
pub fn pivoted_orthonormalize(cols: &CMatrix, count: usize) -> CMatrix {
    pivoted_gs(cols, count, true)
}

fn pivoted_gs(cols: &CMatrix, count: usize, fix_phase: bool) -> CMatrix {
    let n = cols.nrows();
    let mut work = cols.clone();
    let mut out = CMatrix::zeros(n, count);
    let mut used = vec![false; work.ncols()];
    for k in 0..count {
        let mut best = None;
        let mut best_norm = -1.0;
        for (j, &taken) in used.iter().enumerate() {
            if taken {
                continue;
            }
            let nj = work.column(j).norm();
            if nj > best_norm {
                best_norm = nj;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        used[j] = true;
        let mut v = work.column(j).into_owned();
        // re-orthogonalize once against accepted vectors
        for prev in 0..k {
            let q = out.column(prev);
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm == 0.0 {
            break;
        }
        v /= c(norm);
        if fix_phase {
            let pivot = pivot_index(&v);
            let ph = v[pivot] / c(v[pivot].norm());
            v *= ph.conj();
        }
        out.set_column(k, &v);
        for (jj, &taken) in used.iter().enumerate() {
            if !taken {
                let proj = v.dotc(&work.column(jj));
                let update = &v * proj;
                let mut col = work.column_mut(jj);
                col -= update;
            }
        }
    }
    out
}

fn pivot_index(v: &nalgebra::DVector<C64>) -> usize {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // first entry that is not negligible relative to the largest one
    v.iter()
        .position(|z| z.norm() >= 0.5 * max)
        .unwrap_or(0)
}

/// Rank-revealing orthonormal basis of the column span of `cols`: columns
/// whose residual falls below `threshold` times the largest column norm are
/// dropped.
pub fn span_basis(cols: &CMatrix, threshold: f64) -> CMatrix {
    let n = cols.nrows();
    let scale = (0..cols.ncols())
        .map(|j| cols.column(j).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return CMatrix::zeros(n, 0);
    }
    let cutoff = threshold * scale;
    let mut work = cols.clone();
    let mut used = vec![false; work.ncols()];
    let mut basis: Vec<nalgebra::DVector<C64>> = Vec::new();
    loop {
        let mut best = None;
        let mut best_norm = cutoff;
        for (j, &taken) in used.iter().enumerate() {
            if taken {
                continue;
            }
            let nj = work.column(j).norm();
            if nj > best_norm {
                best_norm = nj;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        used[j] = true;
        let mut v = work.column(j).into_owned();
        for q in &basis {
            let proj = q.dotc(&v);
            v -= q * proj;
        }
        let norm = v.norm();
        if norm <= cutoff {
            continue;
        }
        v /= c(norm);
        for (jj, &taken) in used.iter().enumerate() {
            if !taken {
                let proj = v.dotc(&work.column(jj));
                let update = &v * proj;
                let mut col = work.column_mut(jj);
                col -= update;
            }
        }
        basis.push(v);
        if basis.len() == n {
            break;
        }
    }
    if basis.is_empty() {
        CMatrix::zeros(n, 0)
    } else {
        CMatrix::from_columns(&basis)
    }
}

/// Group ascending values into clusters: neighbours whose gap is at most
/// `spec_tol · max|value|` are merged (chains merge transitively).
pub fn group_eigenvalues(values: &[f64], spec_tol: f64) -> Vec<Cluster> {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(ABS_FLOOR);
    let gap = spec_tol * scale;
    let mut clusters: Vec<Cluster> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(last) if v - values[*last.indices.last().unwrap()] <= gap => {
                last.indices.push(i);
            }
            _ => clusters.push(Cluster {
                value: 0.0,
                indices: vec![i],
            }),
        }
    }
    for cl in &mut clusters {
        cl.value = cl.indices.iter().map(|&i| values[i]).sum::<f64>() / cl.indices.len() as f64;
    }
    clusters
}

/// Full singular value decomposition `T = U·diag(σ)·V†`, σ descending.
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

/// Singular value decomposition of a square matrix.
///
/// Computed with `faer`: nalgebra's complex SVD can return singular vectors
/// that do not reproduce the input when many singular values vanish.
pub fn svd(t: &CMatrix) -> Result<Svd> {
    ensure_finite(t, "svd input")?;
    let (rows, cols) = t.shape();
    let m = faer::Mat::<C64>::from_fn(rows, cols, |i, j| t[(i, j)]);
    let dec = m.svd().map_err(|e| Error::ConstructionFailed(format!("svd did not converge: {e:?}")))?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    Ok(Svd {
        u: CMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
        sigma: (0..s.nrows()).map(|k| s[k].re).collect(),
        v: CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]),
    })
}

/// Left polar decomposition `T = P·W` with `P = (T T†)^{1/2}`.
///
/// Computed from the SVD `T = U Σ Y†` as `P = U Σ U†`, `W = U Y†`. For
/// singular `T` the kernel and cokernel bases of the SVD are matched, which
/// completes `W` to a unitary.
pub fn left_polar(t: &CMatrix) -> Result<LeftPolar> {
    ensure_square(t, "left_polar input")?;
    ensure_finite(t, "left_polar input")?;
    let n = t.nrows();
    if n == 0 {
        return Ok(LeftPolar {
            p: CMatrix::zeros(0, 0),
            w: CMatrix::zeros(0, 0),
        });
    }
    let svd = svd(t)?;
    let mut u_sigma = svd.u.clone();
    for (j, &sigma) in svd.sigma.iter().enumerate() {
        u_sigma.column_mut(j).scale_mut(sigma);
    }
    let p = &u_sigma * svd.u.adjoint();
    let p = (&p + p.adjoint()).scale(0.5);
    let w = &svd.u * svd.v.adjoint();
    Ok(LeftPolar { p, w })
}

/// Closest superoperator of the form `X ↦ A·X·B` to `s` (column-stacking
/// convention, `superop = Bᵀ ⊗ A`).
///
/// Van Loan–Pitsianis: rearrange `s` so that `Bᵀ ⊗ A` becomes the rank-one
/// matrix `vec_r(A)·vec_r(B)ᵀ` (row-major vectorizations) and keep the
/// leading singular triple. `A` has unit Frobenius norm and its leading
/// non-negligible entry is real positive; the scale lives in `B`. The
/// residual is the relative Frobenius error of the rearranged matrix.
pub fn nearest_kron_rank1(s: &CMatrix, n: usize) -> Result<KronFactors> {
    let nn = n * n;
    if n == 0 || s.nrows() != nn || s.ncols() != nn {
        return Err(invalid(format!(
            "expected a {nn}x{nn} matrix for n = {n}, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    ensure_finite(s, "nearest_kron_rank1 input")?;
    let r = rearrange(s, n);
    let svd = svd(&r)?;
    let sv = &svd.sigma;
    let (lead, _) = sv
        .iter()
        .enumerate()
        .fold((0, -1.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let total: f64 = sv.iter().map(|x| x * x).sum();
    let tail: f64 = total - sv[lead] * sv[lead];
    let residual = if total > 0.0 {
        (tail.max(0.0) / total).sqrt()
    } else {
        0.0
    };
    let sigma = sv[lead];
    let mut left = CMatrix::from_fn(n, n, |i, p| svd.u[(i * n + p, lead)]);
    let mut right = CMatrix::from_fn(n, n, |q, j| svd.v[(q * n + j, lead)].conj() * c(sigma));

    let max = left.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max > 0.0 {
        let lead_entry = left
            .transpose()
            .iter()
            .copied()
            .find(|z| z.norm() > 1e-8 * max)
            .unwrap_or(c(1.0));
        let phase = lead_entry / c(lead_entry.norm());
        left *= phase.conj();
        right *= phase;
    }
    Ok(KronFactors {
        left,
        right,
        residual,
    })
}

/// Van Loan rearrangement: `R[(i·n+p), (q·n+j)] = S[i + n·j, p + n·q]`.
fn rearrange(s: &CMatrix, n: usize) -> CMatrix {
    let nn = n * n;
    CMatrix::from_fn(nn, nn, |row, col| {
        let (i, p) = (row / n, row % n);
        let (q, j) = (col / n, col % n);
        s[(i + n * j, p + n * q)]
    })
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Principal square root of a Hermitian positive semidefinite matrix.
pub fn psd_sqrt(a: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let eig = herm_eig(a, tol)?;
    check_psd(&eig, tol)?;
    Ok(eig.map(|v| c(v.max(0.0).sqrt())))
}

/// Inverse of a Hermitian positive definite matrix through its spectrum.
pub fn pd_power(a: &CMatrix, power: f64, tol: &Tolerances) -> Result<CMatrix> {
    let eig = herm_eig(a, tol)?;
    let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(ABS_FLOOR);
    if eig.values.iter().any(|&v| v <= tol.eq_tol * scale) {
        return Err(Error::NotInvertible {
            sigma_min: eig.values.first().copied().unwrap_or(0.0),
            threshold: tol.eq_tol * scale,
        });
    }
    Ok(eig.map(|v| c(v.powf(power))))
}

pub(crate) fn check_psd(eig: &EigSystem, tol: &Tolerances) -> Result<()> {
    let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(ABS_FLOOR);
    match eig.values.first() {
        Some(&min) if min < -tol.eq_tol * scale => Err(invalid(format!(
            "matrix is not positive semidefinite (smallest eigenvalue {min:e})"
        ))),
        _ => Ok(()),
    }
}

/// Orthonormal basis of the real subspace `{x ∈ span(basis) : conj_op(x) = x}`
/// for an antilinear involution that leaves `span(basis)` invariant. The
/// result is also a complex orthonormal basis of `span(basis)`.
pub fn fixed_real_basis<F>(basis: &CMatrix, conj_op: F) -> CMatrix
where
    F: Fn(&nalgebra::DVector<C64>) -> nalgebra::DVector<C64>,
{
    let n = basis.nrows();
    let d = basis.ncols();
    let mut cands = CMatrix::zeros(n, 2 * d);
    for j in 0..d {
        let e = basis.column(j).into_owned();
        let je = conj_op(&e);
        let re = (&e + &je).scale(0.5);
        let im = (&e - &je) * C64::new(0.0, -0.5);
        cands.set_column(2 * j, &re);
        cands.set_column(2 * j + 1, &im);
    }
    // no phase fixing: a phase other than ±1 would leave the fixed subspace
    let mut out = pivoted_gs(&cands, d, false);
    // remove rounding drift out of the fixed subspace
    for j in 0..d {
        let v = out.column(j).into_owned();
        let jv = conj_op(&v);
        let mut s = (&v + &jv).scale(0.5);
        let nrm = s.norm();
        if nrm > 0.5 {
            s /= c(nrm);
            out.set_column(j, &s);
        }
    }
    out
}

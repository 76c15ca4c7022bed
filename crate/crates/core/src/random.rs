//! Seeded random instances: Gaussian matrices, Haar-like unitaries, positive
//! definite matrices. Used by the randomized property suites and by the
//! seeded solution builder.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::matkit::{c, CMatrix, C64};

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    })
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// R's diagonal divided out.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / c(d.norm()) } else { c(1.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = gaussian_matrix(rng, n);
    (&g + g.adjoint()).scale(0.5)
}

/// Positive definite matrix `W·diag(d)·W†` with eigenvalues drawn uniformly
/// from `[lo, hi]`.
pub fn positive_definite<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64, hi: f64) -> CMatrix {
    let w = unitary(rng, n);
    let d: Vec<C64> = (0..n).map(|_| c(rng.random_range(lo..=hi))).collect();
    let dm = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    let p = &w * dm * w.adjoint();
    (&p + p.adjoint()).scale(0.5)
}

/// Invertible matrix `W·diag(s)·V` with unitary `W`, `V` and singular values
/// drawn from `[0.3, 1.7]`.
pub fn invertible<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let w = unitary(rng, n);
    let v = unitary(rng, n);
    let s: Vec<C64> = (0..n).map(|_| c(rng.random_range(0.3..=1.7))).collect();
    let sm = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(s));
    &w * sm * v
}

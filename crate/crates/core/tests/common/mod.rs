#![allow(dead_code)]

use modinv::matkit::{self, c, CMatrix};
use modinv::random;
use modinv::spectral::{compositions, SpectralData};
use modinv::standard_form::{FactorModel, HVector, SuperOperator};
use modinv::Tolerances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn model(n: usize) -> FactorModel {
    FactorModel::new(n, Tolerances::default()).unwrap()
}

pub fn diag(v: &[f64]) -> CMatrix {
    CMatrix::from_fn(v.len(), v.len(), |i, j| if i == j { c(v[i]) } else { c(0.0) })
}

/// Random admissible type I_N data with `K ≤ max_k` distinct eigenvalues
/// drawn from `[0.2, 5]`, not normalized.
pub fn random_data<R: Rng>(rng: &mut R, n: usize, max_k: usize) -> SpectralData {
    let k = rng.random_range(1..=max_k.min(n));
    let comps = compositions(n, k);
    let comp = &comps[rng.random_range(0..comps.len())];
    let mut mus: Vec<f64> = Vec::new();
    while mus.len() < k {
        let mu: f64 = rng.random_range(0.2..5.0);
        if mus.iter().all(|&m| (m / mu).ln().abs() > 0.05) {
            mus.push(mu);
        }
    }
    let pairs: Vec<(f64, i64)> = mus.iter().zip(comp).map(|(&m, &l)| (m, l as i64)).collect();
    SpectralData::type_i(n, &pairs)
}

/// Data whose eigenvalues lie on the geometric grid `q^a`, `a ∈ {0,…,3}`;
/// such data usually admits several classes with the same Δ spectrum.
pub fn grid_data<R: Rng>(rng: &mut R, n: usize) -> SpectralData {
    let k = rng.random_range(1..=n.min(3));
    let q: f64 = rng.random_range(1.5..3.0);
    let mut exps: Vec<i32> = (0..4).collect();
    for i in (1..exps.len()).rev() {
        exps.swap(i, rng.random_range(0..=i));
    }
    let comps = compositions(n, k);
    let comp = &comps[rng.random_range(0..comps.len())];
    let pairs: Vec<(f64, i64)> = exps[..k]
        .iter()
        .zip(comp)
        .map(|(&a, &l)| (q.powi(a), l as i64))
        .collect();
    SpectralData::type_i(n, &pairs)
}

/// Diagonal realization `H = Σ μ_k E_k` with consecutive blocks.
pub fn diag_of(d: &SpectralData, n: usize) -> CMatrix {
    let mut entries = Vec::with_capacity(n);
    for p in &d.pairs {
        let l = (p.m.as_f64() * n as f64).round() as usize;
        entries.extend(std::iter::repeat_n(p.mu, l));
    }
    diag(&entries)
}

/// `u = H^{1/2}·V` for a randomly rotated realization `H` of the data and a
/// random unitary `V`; `‖u‖² = tr(H)`.
pub fn vector_with_data<R: Rng>(rng: &mut R, d: &SpectralData, n: usize) -> HVector {
    let w = random::unitary(rng, n);
    let h = &w * diag_of(d, n) * w.adjoint();
    let h = (&h + h.adjoint()).scale(0.5);
    let v = random::unitary(rng, n);
    let root = matkit::psd_sqrt(&h, &Tolerances::default()).unwrap();
    HVector::new(root * v)
}

/// `X ↦ H·X·H⁻¹`, the modular operator of `H^{1/2}`.
pub fn delta_of_h(h: &CMatrix) -> SuperOperator {
    let inv = h.clone().try_inverse().unwrap();
    SuperOperator::sandwich(h, &inv)
}

/// Clustered eigenvalues of a Hermitian superoperator with their
/// eigenspace dimensions, ascending.
pub fn realized_spectrum(delta: &SuperOperator) -> Vec<(f64, usize)> {
    let tol = Tolerances::default();
    let eig = matkit::herm_eig(&delta.smat, &tol).unwrap();
    matkit::group_eigenvalues(&eig.values, tol.spec_tol)
        .into_iter()
        .map(|cl| (cl.value, cl.multiplicity()))
        .collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Print one summary line and fail the test when the criterion is violated.
pub fn report(criterion: u32, title: &str, failures: &[String], detail: &str) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    println!("criterion {criterion:>2} [{verdict}] {title}: {detail}");
    for f in failures.iter().take(10) {
        println!("    {f}");
    }
    assert!(failures.is_empty(), "criterion {criterion} failed: {} violations", failures.len());
}

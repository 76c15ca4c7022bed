//! Modular objects of a cyclic and separating vector.
//!
//! For `u = H·V` (left polar decomposition, `H = (u u†)^{1/2}`) the modular
//! conjugation is `J₀ = V∘J∘V†` with `J` the trace conjugation, and the
//! modular operator is `Δ₀ = J₀·H₀⁻¹·J₀·H₀` with `H₀ = H²`, i.e.
//! `Δ₀(X) = (u u†)·X·(u† u)⁻¹`.
//!
//! [`tomita_oracle`] recomputes both objects from scratch by polar
//! decomposition of the closed antilinear map `A·u ↦ A†·u`, carried out in
//! the real `2N²`-dimensional representation; it shares no code path with
//! [`modular_from_vector`] beyond matrix storage.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::correspondence::classify_vector;
use crate::error::{invalid, Error, Result};
use crate::matkit::{self, c, identity, CMatrix, EigSystem, Tolerances, C64};
use crate::standard_form::{
    left_superop, right_superop, trace_conjugation, AntilinearOp, FactorElement, FactorModel,
    HVector, SuperOperator,
};

#[derive(Debug, Clone)]
pub struct ModularObjects {
    pub delta: SuperOperator,
    pub j0: AntilinearOp,
    /// `H₀ = u·u†`.
    pub h0: FactorElement,
    /// Unitary factor of the left polar decomposition `u = H·V`.
    pub v: FactorElement,
    /// Relative deviation between `J₀H₀⁻¹J₀H₀` and the direct form
    /// `X ↦ (u u†)·X·(u†u)⁻¹`.
    pub form_residual: f64,
}

pub(crate) fn require_cyclic_separating(model: &FactorModel, u: &HVector) -> Result<()> {
    let report = classify_vector(model, u)?;
    if report.cyclic_and_separating() {
        Ok(())
    } else {
        Err(Error::NotInvertible {
            sigma_min: report.sigma_min,
            threshold: report.threshold,
        })
    }
}

fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Modular objects `(Δ₀, J₀)` of `(M₀, u)` from the polar data of `u`.
pub fn modular_from_vector(model: &FactorModel, u: &HVector) -> Result<ModularObjects> {
    require_cyclic_separating(model, u)?;
    let tol = model.tol();
    let polar = matkit::left_polar(&u.mat)?;
    let h0 = hermitize(&(&polar.p * &polar.p));
    let v = polar.w;

    let j = trace_conjugation(model);
    let lv = left_superop(model, &FactorElement::new(v.clone()))?;
    let lv_adj = left_superop(model, &FactorElement::new(v.adjoint()))?;
    let j0 = &(&lv * &j) * &lv_adj;

    let h0_inv = matkit::pd_power(&h0, -1.0, tol)?;
    let l_h0 = left_superop(model, &FactorElement::new(h0.clone()))?;
    let l_h0_inv = left_superop(model, &FactorElement::new(h0_inv))?;
    let delta = &(&(&j0 * &l_h0_inv) * &j0) * &l_h0;

    let uu = &u.mat * u.mat.adjoint();
    let utu_inv = (u.mat.adjoint() * &u.mat)
        .try_inverse()
        .ok_or_else(|| invalid("u†u is singular"))?;
    let direct = SuperOperator::sandwich(&uu, &utu_inv);
    let form_residual = matkit::rel_diff(&delta.smat, &direct.smat);

    Ok(ModularObjects {
        delta: SuperOperator::new(hermitize(&delta.smat)),
        j0,
        h0: FactorElement::new(h0),
        v: FactorElement::new(v),
        form_residual,
    })
}

/// Real representation of the antilinear map `x ↦ C·conj(x)` acting on
/// `[Re x; Im x]`.
fn realify_antilinear(cmat: &CMatrix) -> DMatrix<f64> {
    let d = cmat.nrows();
    let mut r = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = cmat[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + d)] = z.im;
            r[(i + d, j)] = z.im;
            r[(i + d, j + d)] = -z.re;
        }
    }
    r
}

/// Complex matrix of a complex-linear map given by its real representation
/// `[[A, −B], [B, A]]`; the two copies of each block are averaged.
fn complexify_linear(r: &DMatrix<f64>) -> CMatrix {
    let d = r.nrows() / 2;
    CMatrix::from_fn(d, d, |i, j| {
        let a = 0.5 * (r[(i, j)] + r[(i + d, j + d)]);
        let b = 0.5 * (r[(i + d, j)] - r[(i, j + d)]);
        C64::new(a, b)
    })
}

/// Inverse of [`realify_antilinear`] (blocks averaged).
fn complexify_antilinear(r: &DMatrix<f64>) -> CMatrix {
    let d = r.nrows() / 2;
    CMatrix::from_fn(d, d, |i, j| {
        let a = 0.5 * (r[(i, j)] - r[(i + d, j + d)]);
        let b = 0.5 * (r[(i, j + d)] + r[(i + d, j)]);
        C64::new(a, b)
    })
}

/// Independent computation of `(Δ, J)` from the Tomita map
/// `S: A·u ↦ A†·u`, i.e. `S(Y) = (u†)⁻¹·Y†·u`: `Δ = S*S` and `J = S·Δ^{-1/2}`.
pub fn tomita_oracle(model: &FactorModel, u: &HVector) -> Result<(SuperOperator, AntilinearOp)> {
    require_cyclic_separating(model, u)?;
    let u_adj_inv = u
        .mat
        .adjoint()
        .try_inverse()
        .ok_or_else(|| invalid("u is singular"))?;
    let lin = SuperOperator::sandwich(&u_adj_inv, &u.mat);
    let s = &lin * &trace_conjugation(model);

    let r = realify_antilinear(&s.cmat);
    let gram = r.transpose() * &r;
    let gram = (&gram + gram.transpose()).scale(0.5);
    let eig = gram.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&x| x <= 0.0) {
        return Err(invalid("Tomita map is not invertible"));
    }
    let inv_sqrt = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|x| 1.0 / x.sqrt()),
    );
    let gram_inv_sqrt =
        &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
    let j_real = &r * gram_inv_sqrt;

    let delta = complexify_linear(&gram);
    let j = complexify_antilinear(&j_real);
    Ok((SuperOperator::new(delta), AntilinearOp::new(j)))
}

#[derive(Debug, Clone)]
pub struct DeltaFactors {
    /// Left factor, normalized to `tr(h) = 1`.
    pub h: FactorElement,
    /// Right factor; absorbs the scale.
    pub h_prime: FactorElement,
    pub residual: f64,
}

/// Split `Δ = L_h ∘ R_{h′}` with `tr(h) = 1`. The split is unique up to
/// `(c·h, c⁻¹·h′)`, and the trace normalization removes `c`.
pub fn factorize_delta(model: &FactorModel, delta: &SuperOperator) -> Result<DeltaFactors> {
    model.check_superop(&delta.smat, "modular operator")?;
    let tol = model.tol();
    let eig = matkit::herm_eig(&delta.smat, tol)?;
    let max = eig.values.last().copied().unwrap_or(0.0);
    if eig.values.first().is_none_or(|&v| v <= tol.eq_tol * max.abs().max(matkit::ABS_FLOOR)) {
        return Err(invalid("modular operator must be positive and invertible"));
    }
    let kf = matkit::nearest_kron_rank1(&delta.smat, model.n())?;
    if kf.residual > tol.eq_tol {
        return Err(Error::NotAModularShape {
            residual: kf.residual,
        });
    }
    let t = model.trace(&kf.left);
    if t.norm() <= matkit::ABS_FLOOR {
        return Err(Error::NotAModularShape {
            residual: kf.residual,
        });
    }
    let h = hermitize(&(&kf.left / t));
    let h_prime = hermitize(&(&kf.right * t));
    Ok(DeltaFactors {
        h: FactorElement::new(h),
        h_prime: FactorElement::new(h_prime),
        residual: kf.residual,
    })
}

/// Conjugation `K` with `K∘Δ∘K = Δ`: entrywise conjugation of coordinates
/// in the eigenbasis of `Δ`.
pub fn kreal_conjugation(model: &FactorModel, delta: &SuperOperator) -> Result<AntilinearOp> {
    model.check_superop(&delta.smat, "operator")?;
    let eig = matkit::herm_eig(&delta.smat, model.tol())?;
    let q = &eig.vectors;
    Ok(AntilinearOp::new(q * q.transpose()))
}

fn vec_residual(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    (a - b).norm() / b.norm().max(matkit::ABS_FLOOR)
}

/// Spectral subspaces of a modular operator below, at and above 1.
struct ThreeWaySplit {
    below: Vec<usize>,
    at_one: Vec<usize>,
    above: Vec<usize>,
}

fn split_at_one(eig: &EigSystem, tol: &Tolerances) -> ThreeWaySplit {
    let mut s = ThreeWaySplit {
        below: vec![],
        at_one: vec![],
        above: vec![],
    };
    for (i, &v) in eig.values.iter().enumerate() {
        if (v - 1.0).abs() <= tol.spec_tol {
            s.at_one.push(i);
        } else if v < 1.0 {
            s.below.push(i);
        } else {
            s.above.push(i);
        }
    }
    s
}

/// Residuals `‖jΔj·Δ − I‖`, `‖Δv − v‖/‖v‖`, `‖jv − v‖/‖v‖` (the latter two
/// maximized over the given vectors).
fn modular_pair_residuals(
    delta: &SuperOperator,
    j: &AntilinearOp,
    vectors: &[&HVector],
) -> (f64, f64, f64) {
    let d = delta.smat.nrows();
    let jdj = j.conjugate_op(delta);
    let inv_res = matkit::op_norm(&(&jdj.smat * &delta.smat - identity(d)));
    let mut fix_d: f64 = 0.0;
    let mut fix_j: f64 = 0.0;
    for v in vectors {
        let x = v.to_vec();
        fix_d = fix_d.max(vec_residual(&(&delta.smat * &x), &x));
        fix_j = fix_j.max(vec_residual(&j.apply_vec(&x), &x));
    }
    (inv_res, fix_d, fix_j)
}

/// Conjugation `I` commuting with `Δ` and `J` and fixing `v1`, `v2`.
///
/// The space splits into the spectral subspaces `K₋₁`, `K₀`, `K₁` of `Δ`
/// (eigenvalues below, at, above 1). On `K₀` the map is `J` itself; on `K₁`
/// it conjugates coordinates in an eigenbasis `{u_k}` of `Δ`, and on `K₋₁`
/// coordinates in the reflected basis `{J u_k}`.
pub fn build_invariant_conjugation(
    model: &FactorModel,
    delta: &SuperOperator,
    j: &AntilinearOp,
    v1: &HVector,
    v2: &HVector,
) -> Result<AntilinearOp> {
    model.check_superop(&delta.smat, "modular operator")?;
    model.check_superop(&j.cmat, "conjugation")?;
    let tol = model.tol();
    let (inv_res, fix_d, fix_j) = modular_pair_residuals(delta, j, &[v1, v2]);
    for (what, r) in [
        ("J∘Δ∘J = Δ⁻¹", inv_res),
        ("Δ v_i = v_i", fix_d),
        ("J v_i = v_i", fix_j),
    ] {
        if r > tol.eq_tol {
            return Err(Error::PreconditionFailed {
                what: what.into(),
                residual: r,
            });
        }
    }

    let eig = matkit::herm_eig(&delta.smat, tol)?;
    let split = split_at_one(&eig, tol);
    if split.above.len() != split.below.len() {
        return Err(Error::PreconditionFailed {
            what: "spectrum of Δ is not symmetric under λ ↦ 1/λ".into(),
            residual: (split.above.len() as f64 - split.below.len() as f64).abs(),
        });
    }

    let k0 = eig.columns(&split.at_one);
    let p0 = &k0 * k0.adjoint();
    let mut cmat = &j.cmat * p0.map(|z| z.conj());
    for &idx in &split.above {
        let b = eig.vectors.column(idx).into_owned();
        let jb = j.apply_vec(&b);
        cmat += &b * b.transpose();
        cmat += &jb * jb.transpose();
    }
    Ok(AntilinearOp::new(cmat))
}

/// The five defects of an invariant conjugation: `IΔI − Δ`, `IJI − J`,
/// `I² − id` (with unitarity), `Iv₁ − v₁`, `Iv₂ − v₂`.
pub fn invariant_conjugation_residuals(
    delta: &SuperOperator,
    j: &AntilinearOp,
    i: &AntilinearOp,
    v1: &HVector,
    v2: &HVector,
) -> [f64; 5] {
    let idi = i.conjugate_op(delta);
    let iji = &(&(i * j) * i).cmat - &j.cmat;
    let fix = |v: &HVector| {
        let x = v.to_vec();
        vec_residual(&i.apply_vec(&x), &x)
    };
    [
        matkit::rel_diff(&idi.smat, &delta.smat),
        matkit::op_norm(&iji),
        i.conjugation_residual(),
        fix(v1),
        fix(v2),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularReport {
    /// `‖J₀Δ₀J₀·Δ₀ − I‖`.
    pub inversion: f64,
    /// `‖Δ₀u − u‖/‖u‖`.
    pub delta_fixes_u: f64,
    /// `‖J₀u − u‖/‖u‖`.
    pub j_fixes_u: f64,
    /// Largest distance of `Δ^{it}·L_{E_pq}·Δ^{−it}` from the algebra, over
    /// all matrix units and `t ∈ {1, √2}`.
    pub algebra_invariance: f64,
}

impl ModularReport {
    pub fn max(&self) -> f64 {
        self.inversion
            .max(self.delta_fixes_u)
            .max(self.j_fixes_u)
            .max(self.algebra_invariance)
    }
}

/// `t` values at which the modular group is checked to leave the algebra
/// invariant.
pub const MODULAR_GROUP_TIMES: [f64; 2] = [1.0, std::f64::consts::SQRT_2];

/// `Δ^{it}` by spectral calculus on the clustered spectrum.
pub fn modular_group(delta: &SuperOperator, t: f64, tol: &Tolerances) -> Result<CMatrix> {
    let eig = matkit::herm_eig(&delta.smat, tol)?;
    let d = eig.dim();
    let mut scaled = eig.vectors.clone();
    for cl in matkit::group_eigenvalues(&eig.values, tol.spec_tol) {
        if cl.value <= 0.0 {
            return Err(invalid("modular group needs a positive operator"));
        }
        let phase = C64::from_polar(1.0, t * cl.value.ln());
        for &k in &cl.indices {
            for i in 0..d {
                scaled[(i, k)] *= phase;
            }
        }
    }
    Ok(&scaled * eig.vectors.adjoint())
}

/// Distance of `U·L_{E_pq}·U†` from the algebra `{I ⊗ A}`, maximized over
/// matrix units. An operator commutes with every right multiplication
/// exactly when it is a left multiplication, so this is the commutation
/// test against all `R_{E_rs}` at once.
pub fn algebra_invariance_residual(n: usize, unitary: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    // U·(I ⊗ E_pq)·U† = Σ_a U[:, p+Na]·U[:, q+Na]†
    let cols = |p: usize| CMatrix::from_fn(n * n, n, |i, a| unitary[(i, p + n * a)]);
    let blocks: Vec<CMatrix> = (0..n).map(cols).collect();
    for p in 0..n {
        for q in 0..n {
            let x = &blocks[p] * blocks[q].adjoint();
            let mut avg = CMatrix::zeros(n, n);
            for a in 0..n {
                avg += x.view((a * n, a * n), (n, n));
            }
            avg /= c(n as f64);
            let mut dist = 0.0;
            for a in 0..n {
                for b in 0..n {
                    let blk = x.view((a * n, b * n), (n, n));
                    dist += if a == b {
                        (blk - &avg).norm_squared()
                    } else {
                        blk.norm_squared()
                    };
                }
            }
            // ‖E_pq‖ = 1, so no normalization is needed
            worst = worst.max(dist.sqrt());
        }
    }
    worst
}

pub fn check_modular_identities(
    model: &FactorModel,
    mo: &ModularObjects,
    u: &HVector,
) -> Result<ModularReport> {
    model.check_superop(&mo.delta.smat, "modular operator")?;
    let (inversion, delta_fixes_u, j_fixes_u) = modular_pair_residuals(&mo.delta, &mo.j0, &[u]);
    let mut algebra_invariance: f64 = 0.0;
    for t in MODULAR_GROUP_TIMES {
        let ut = modular_group(&mo.delta, t, model.tol())?;
        algebra_invariance = algebra_invariance.max(algebra_invariance_residual(model.n(), &ut));
    }
    Ok(ModularReport {
        inversion,
        delta_fixes_u,
        j_fixes_u,
        algebra_invariance,
    })
}

/// `L_h ∘ R_{h′}`, the superoperator of `X ↦ h·X·h′`.
pub fn left_right_product(
    model: &FactorModel,
    h: &FactorElement,
    h_prime: &FactorElement,
) -> Result<SuperOperator> {
    let l = left_superop(model, h)?;
    let r = right_superop(model, h_prime)?;
    Ok(&l * &r)
}

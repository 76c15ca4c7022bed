//! The modular inverse problem: given `(Δ₀, J₀, u₀)`, find algebras
//! `M = U·M₀·U†` having these as modular objects.
//!
//! A unitary `U` yields a solution exactly when `U` commutes with `J₀`, the
//! vector `u = U†u₀` is cyclic and separating, and the modular operator of
//! `(M₀, u)` is `U†Δ₀U`. Solutions are classified by the eigenvalue data of
//! the positive operator `H` with `Δ = L_H ∘ R_{H′}`.

use nalgebra::DVector;
use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::correspondence::classify_vector;
use crate::error::{invalid, Error, Result};
use crate::matkit::{self, c, identity, CMatrix, Tolerances, C64};
use crate::modular::{
    self, algebra_invariance_residual, build_invariant_conjugation, factorize_delta,
    invariant_conjugation_residuals, modular_from_vector, tomita_oracle,
};
use crate::random;
use crate::spectral::{
    compatible_with, data_equivalent, induced_delta_spectrum, normalize_data, validate_data,
    FactorType, Multiplicity, SpectralData, SpectralPair, Violation,
};
use crate::standard_form::{AntilinearOp, FactorElement, FactorModel, HVector, SuperOperator};

/// Eigenvalue data of a positive invertible element, normalized so that
/// `Σ m_k·μ_k = 1`; `scale` is the factor applied to the raw eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementData {
    pub data: SpectralData,
    pub scale: f64,
}

fn spectral_data_of_positive(model: &FactorModel, h: &CMatrix) -> Result<ElementData> {
    let tol = model.tol();
    let eig = matkit::herm_eig(h, tol)?;
    let n = model.n();
    let mut pairs: Vec<SpectralPair> = matkit::group_eigenvalues(&eig.values, tol.spec_tol)
        .into_iter()
        .map(|cl| SpectralPair {
            mu: cl.value,
            m: Multiplicity::frac(cl.multiplicity() as i64, n as i64),
        })
        .collect();
    if pairs.iter().any(|p| p.mu <= 0.0) {
        return Err(invalid("element is not positive definite"));
    }
    pairs.reverse();
    let raw = SpectralData {
        ftype: FactorType::TypeI(n),
        pairs,
    };
    let (data, scale) = normalize_data(&raw, tol)?;
    Ok(ElementData { data, scale })
}

/// Data of `H₀ = u·u†`.
pub fn spectral_data_of_vector(model: &FactorModel, u: &HVector) -> Result<ElementData> {
    modular::require_cyclic_separating(model, u)?;
    spectral_data_of_positive(model, &(&u.mat * u.mat.adjoint()))
}

/// Pairwise orthogonal projections summing to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFamily {
    pub projections: Vec<FactorElement>,
    pub traces: Vec<Rational64>,
}

/// Diagonal projections onto consecutive coordinate blocks of sizes `l_k`,
/// where `m_k = l_k/N`.
pub fn projections_with_traces(model: &FactorModel, m: &[Rational64]) -> Result<ProjectionFamily> {
    let n = model.n();
    let mut sizes = Vec::with_capacity(m.len());
    for r in m {
        let scaled = r * Rational64::from_integer(n as i64);
        if !scaled.is_integer() || *scaled.numer() < 1 {
            return Err(invalid(format!("trace {r} is not a positive multiple of 1/{n}")));
        }
        sizes.push(*scaled.numer() as usize);
    }
    if sizes.iter().sum::<usize>() != n {
        return Err(invalid("traces must sum to 1"));
    }
    let mut start = 0;
    let projections = sizes
        .iter()
        .map(|&s| {
            let p = CMatrix::from_fn(n, n, |i, j| {
                if i == j && i >= start && i < start + s {
                    c(1.0)
                } else {
                    c(0.0)
                }
            });
            start += s;
            FactorElement::new(p)
        })
        .collect();
    Ok(ProjectionFamily {
        projections,
        traces: m.to_vec(),
    })
}

/// `H = Σ μ_k·E_k` for type I_N data, rescaled to `tr(H) = 1`.
pub fn build_h_from_data(model: &FactorModel, d: &SpectralData) -> Result<FactorElement> {
    if d.ftype != FactorType::TypeI(model.n()) {
        return Err(invalid(format!(
            "data of type {} cannot be realized on I_{}",
            d.ftype,
            model.n()
        )));
    }
    let violations: Vec<Violation> = validate_data(d, model.tol())
        .into_iter()
        .filter(|v| !matches!(v, Violation::NotNormalized { .. }))
        .collect();
    if !violations.is_empty() {
        return Err(invalid(format!("invalid spectral data: {violations:?}")));
    }
    let (d, _) = normalize_data(d, model.tol())?;
    let traces: Vec<Rational64> = d
        .pairs
        .iter()
        .map(|p| match p.m {
            Multiplicity::Exact(r) => Ok(r),
            _ => Err(invalid("type I multiplicities must be exact")),
        })
        .collect::<Result<_>>()?;
    let family = projections_with_traces(model, &traces)?;
    let n = model.n();
    let mut h = CMatrix::zeros(n, n);
    for (p, e) in d.pairs.iter().zip(&family.projections) {
        h += e.mat.scale(p.mu);
    }
    Ok(FactorElement::new(h))
}

fn apply_antilinear_cols(j: &AntilinearOp, cols: &CMatrix) -> CMatrix {
    &j.cmat * cols.map(|z| z.conj())
}

fn inversion_residual(delta: &SuperOperator, j: &AntilinearOp) -> f64 {
    let d = delta.smat.nrows();
    matkit::op_norm(&(&j.conjugate_op(delta).smat * &delta.smat - identity(d)))
}

/// `‖U∘J − J∘U‖` for a linear `U`.
pub fn j_commutator(u: &SuperOperator, j: &AntilinearOp) -> f64 {
    let uj = &u.smat * &j.cmat;
    let ju = &j.cmat * u.smat.map(|z| z.conj());
    matkit::op_norm(&(uj - ju))
}

/// Unitary `W` with `W∘Δ_a∘W† = Δ_b` and `W∘J₀ = J₀∘W`.
///
/// Eigenspaces above 1 are matched by partial isometries between eigenbases
/// and reflected by `J₀` onto the eigenspaces below 1. On the eigenvalue-1
/// space the map sends a `J₀`-real orthonormal basis to another one.
pub fn jcompatible_intertwiner(
    model: &FactorModel,
    delta_a: &SuperOperator,
    delta_b: &SuperOperator,
    j0: &AntilinearOp,
) -> Result<SuperOperator> {
    model.check_superop(&delta_a.smat, "modular operator")?;
    model.check_superop(&delta_b.smat, "modular operator")?;
    model.check_superop(&j0.cmat, "conjugation")?;
    let tol = model.tol();
    for (name, delta) in [("Δ_a", delta_a), ("Δ_b", delta_b)] {
        let r = inversion_residual(delta, j0);
        if r > tol.eq_tol {
            return Err(Error::PreconditionFailed {
                what: format!("J₀∘{name}∘J₀ = {name}⁻¹"),
                residual: r,
            });
        }
    }
    let eig_a = matkit::herm_eig(&delta_a.smat, tol)?;
    let eig_b = matkit::herm_eig(&delta_b.smat, tol)?;
    let cl_a = matkit::group_eigenvalues(&eig_a.values, tol.spec_tol);
    let cl_b = matkit::group_eigenvalues(&eig_b.values, tol.spec_tol);
    let describe = |cl: &[matkit::Cluster]| {
        cl.iter()
            .map(|c| format!("{:.6}×{}", c.value, c.multiplicity()))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let matched = cl_a.len() == cl_b.len()
        && cl_a.iter().zip(&cl_b).all(|(a, b)| {
            a.multiplicity() == b.multiplicity()
                && (a.value - b.value).abs() <= tol.spec_tol * a.value.max(b.value).max(1.0)
        });
    if !matched {
        return Err(Error::NotIntertwinable(format!(
            "spectra differ: [{}] vs [{}]",
            describe(&cl_a),
            describe(&cl_b)
        )));
    }

    let dim = model.hilbert_dim();
    let mut w = CMatrix::zeros(dim, dim);
    let jfix = |x: &DVector<C64>| j0.apply_vec(x);
    for (ca, cb) in cl_a.iter().zip(&cl_b) {
        let a = eig_a.columns(&ca.indices);
        let b = eig_b.columns(&cb.indices);
        if (ca.value - 1.0).abs() <= tol.spec_tol {
            let ra = matkit::fixed_real_basis(&a, jfix);
            let rb = matkit::fixed_real_basis(&b, jfix);
            w += &rb * ra.adjoint();
        } else if ca.value > 1.0 {
            let ja = apply_antilinear_cols(j0, &a);
            let jb = apply_antilinear_cols(j0, &b);
            w += &b * a.adjoint() + &jb * ja.adjoint();
        }
    }
    let w = SuperOperator::new(w);

    let unitarity = matkit::unitary_residual(&w.smat);
    let intertwining = matkit::rel_diff(&(&(&w * delta_a) * &w.adjoint()).smat, &delta_b.smat);
    let commute = j_commutator(&w, j0);
    let worst = unitarity.max(intertwining).max(commute);
    if worst > tol.eq_tol {
        return Err(Error::ConstructionFailed(format!(
            "intertwiner residuals: unitarity {unitarity:e}, intertwining {intertwining:e}, \
             J₀-commutation {commute:e}"
        )));
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolutionResiduals {
    /// Unitarity of `U`, so that `U·M₀·U†` is again a von Neumann algebra.
    pub algebra_conj: f64,
    /// 0 when `U†u₀` is cyclic and separating, 1 otherwise.
    pub cyclic_sep: f64,
    /// Distance of the modular objects of `U†u₀` from `(U†Δ₀U, J₀)`.
    pub modular_match: f64,
    /// `‖U∘J₀ − J₀∘U‖`.
    pub j_commute: f64,
    /// `min ‖U†u₀ ∓ u‖/‖u‖` against an expected solution vector `u`.
    pub vector_sign: f64,
}

impl SolutionResiduals {
    pub fn max(&self) -> f64 {
        [
            self.algebra_conj,
            self.cyclic_sep,
            self.modular_match,
            self.j_commute,
            self.vector_sign,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SolutionCertificate {
    /// `U†u₀`.
    pub u_solution: HVector,
    pub unitary: SuperOperator,
    /// Data of `H` recovered from `U†Δ₀U`; absent when that operator does
    /// not factor.
    pub data: Option<SpectralData>,
    pub residuals: SolutionResiduals,
    /// +1 or −1: which of `±u` the vector `U†u₀` matched.
    pub sign: i8,
    pub tol: Tolerances,
    pub pass: bool,
}

impl SolutionCertificate {
    fn finish(mut self) -> Self {
        self.pass = self.residuals.max() <= self.tol.eq_tol;
        self
    }

    /// Compare `U†u₀` with `±expected` and record the better sign.
    fn with_expected(mut self, expected: &HVector) -> Self {
        let plus = rel_vec(&self.u_solution, expected);
        let minus = rel_vec(&HVector::new(-self.u_solution.mat.clone()), expected);
        let (res, sign) = if plus <= minus { (plus, 1) } else { (minus, -1) };
        self.residuals.vector_sign = res;
        self.sign = sign;
        self.finish()
    }
}

/// Check whether `M = U·M₀·U†` solves the inverse problem for the modular
/// objects of `u₀`.
pub fn verify_solution(
    model: &FactorModel,
    u0: &HVector,
    unitary: &SuperOperator,
) -> Result<SolutionCertificate> {
    model.check_superop(&unitary.smat, "unitary")?;
    let mo0 = modular_from_vector(model, u0)?;
    let u_adj = unitary.adjoint();
    let u = u_adj.apply(u0);
    let pulled = SuperOperator::new(hermitize(&(&(&u_adj * &mo0.delta) * unitary).smat));

    let cyclic = classify_vector(model, &u)?.cyclic_and_separating();
    let modular_match = match modular_from_vector(model, &u) {
        Ok(mo) => matkit::rel_diff(&mo.delta.smat, &pulled.smat)
            .max(matkit::op_norm(&(&mo.j0.cmat - &mo0.j0.cmat))),
        Err(_) => f64::INFINITY,
    };
    let data = factorize_delta(model, &pulled)
        .ok()
        .and_then(|f| spectral_data_of_positive(model, &f.h.mat).ok())
        .map(|e| e.data);
    let residuals = SolutionResiduals {
        algebra_conj: matkit::unitary_residual(&unitary.smat),
        cyclic_sep: if cyclic { 0.0 } else { 1.0 },
        modular_match,
        j_commute: j_commutator(unitary, &mo0.j0),
        vector_sign: 0.0,
    };
    Ok(SolutionCertificate {
        u_solution: u,
        unitary: unitary.clone(),
        data,
        residuals,
        sign: 1,
        tol: *model.tol(),
        pass: false,
    }
    .finish())
}

fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Reflection `I − 2vv†/‖v‖²` with `v = from − to`; it maps `from` to `to`
/// when both have equal norms and a real inner product.
fn householder(from: &DVector<C64>, to: &DVector<C64>, tol: &Tolerances) -> CMatrix {
    let d = from.len();
    let v = from - to;
    let nv = v.norm_squared();
    if nv.sqrt() <= tol.eq_tol * to.norm().max(matkit::ABS_FLOOR) {
        return identity(d);
    }
    identity(d) - (&v * v.adjoint()).scale(2.0 / nv)
}

/// A solution whose `H` has the given data.
///
/// `H` is the diagonal realization of the data, conjugated by a random
/// unitary when a seed is given, and scaled so that `‖u‖ = ‖u₀‖` for
/// `u = H^{1/2}·V` with `V` the polar unitary of `u₀`. The vector `u` has
/// modular conjugation `J₀` and a modular operator isospectral to `Δ₀`; an
/// intertwiner followed by a reflection inside the joint fixed space of
/// `Δ₀` and `J₀` gives `U` with `U·u = u₀`.
pub fn build_solution(
    model: &FactorModel,
    u0: &HVector,
    d: &SpectralData,
    seed: Option<u64>,
) -> Result<SolutionCertificate> {
    let tol = model.tol();
    let mo0 = modular_from_vector(model, u0)?;
    let own = spectral_data_of_vector(model, u0)?;
    let target = induced_delta_spectrum(&own.data, tol)?;
    let h_diag = build_h_from_data(model, d)?;
    if !compatible_with(d, &target, tol)? {
        return Err(invalid(
            "data does not induce the spectrum of the modular operator of u0",
        ));
    }
    let mut h = h_diag.mat;
    if let Some(seed) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random::unitary(&mut rng, model.n());
        h = hermitize(&(&r * h * r.adjoint()));
    }
    h *= c(model.norm(u0).powi(2));
    let u = HVector::new(matkit::psd_sqrt(&h, tol)? * &mo0.v.mat);
    let mo_u = modular_from_vector(model, &u)?;
    let w = jcompatible_intertwiner(model, &mo_u.delta, &mo0.delta, &mo0.j0)?;
    let wu = w.apply(&u).to_vec();
    let q = SuperOperator::new(householder(&wu, &u0.to_vec(), tol));
    let unitary = &q * &w;

    let cert = verify_solution(model, u0, &unitary)?.with_expected(&u);
    if !cert.pass {
        return Err(Error::ConstructionFailed(format!(
            "certificate failed: {:?}",
            cert.residuals
        )));
    }
    Ok(cert)
}

#[derive(Debug, Clone)]
pub struct Nf1Verdict {
    pub member: bool,
    /// Unitary `W ∈ M₀` with `W·H·W† = c·H₀`, when a member.
    pub witness: Option<FactorElement>,
    /// Data of the recovered `H`.
    pub data: SpectralData,
}

/// Whether the solution lies in the orbit of `M₀` under automorphisms fixing
/// the modular objects: the data of the recovered `H` must be equivalent to
/// the data of `H₀`.
pub fn nf1_membership(model: &FactorModel, u0: &HVector, unitary: &SuperOperator) -> Result<Nf1Verdict> {
    let tol = model.tol();
    let mo0 = modular_from_vector(model, u0)?;
    let pulled = &(&unitary.adjoint() * &mo0.delta) * unitary;
    let h = factorize_delta(model, &SuperOperator::new(hermitize(&pulled.smat)))?.h;
    let data = spectral_data_of_positive(model, &h.mat)?.data;
    let own = spectral_data_of_positive(model, &mo0.h0.mat)?.data;
    let member = data_equivalent(&data, &own, tol)?;
    let witness = if member {
        let eh = matkit::herm_eig(&h.mat, tol)?;
        let e0 = matkit::herm_eig(&mo0.h0.mat, tol)?;
        Some(FactorElement::new(&e0.vectors * eh.vectors.adjoint()))
    } else {
        None
    };
    Ok(Nf1Verdict {
        member,
        witness,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondClassResiduals {
    /// Modular objects of `u₁` against `(Δ₀⁻¹, J₀)`, checked both directly
    /// and through the Tomita oracle.
    pub dual_modular: f64,
    /// Largest of the five defects of the invariant conjugation `I`.
    pub conjugation: f64,
    /// `‖U₁†Δ₀U₁ − Δ₀⁻¹‖`, relative.
    pub inversion: f64,
    pub fixes_u0: f64,
    pub fixes_u1: f64,
    pub j_commute: f64,
    pub unitarity: f64,
}

impl SecondClassResiduals {
    pub fn max(&self) -> f64 {
        [
            self.dual_modular,
            self.conjugation,
            self.inversion,
            self.fixes_u0,
            self.fixes_u1,
            self.j_commute,
            self.unitarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct SecondClass {
    /// `H₀^{-1/2}·V`, scaled to the norm of `u₀`.
    pub u1: HVector,
    /// `U₁ = I∘J₀`.
    pub u1_unitary: SuperOperator,
    /// `tr(H₀⁻¹)`, always finite here.
    pub trace_h0_inv: f64,
    pub residuals: SecondClassResiduals,
    /// Certificate of the solution `K∘U₁`, where the reflection `K` maps
    /// `u₁` to `u₀` and commutes with `Δ₀` and `J₀`.
    pub solution: SolutionCertificate,
    pub pass: bool,
}

fn rel_vec(a: &HVector, b: &HVector) -> f64 {
    (&a.mat - &b.mat).norm() / b.mat.norm().max(matkit::ABS_FLOOR)
}

/// The dual vector `u₁` and the unitary `U₁ = I∘J₀` exchanging `Δ₀` and
/// `Δ₀⁻¹` while fixing `u₀`, `u₁` and commuting with `J₀`.
pub fn build_second_class(model: &FactorModel, u0: &HVector) -> Result<SecondClass> {
    let tol = model.tol();
    let mo0 = modular_from_vector(model, u0)?;
    let h0_inv = matkit::pd_power(&mo0.h0.mat, -1.0, tol)?;
    let trace_h0_inv = model.trace(&h0_inv).re;
    let raw = HVector::new(matkit::pd_power(&mo0.h0.mat, -0.5, tol)? * &mo0.v.mat);
    let u1 = HVector::new(raw.mat.scale(model.norm(u0) / model.norm(&raw)));

    let delta_inv = mo0
        .delta
        .smat
        .clone()
        .try_inverse()
        .map(|m| SuperOperator::new(hermitize(&m)))
        .ok_or_else(|| invalid("Δ₀ is singular"))?;
    let mo1 = modular_from_vector(model, &u1)?;
    let (oracle_delta, oracle_j) = tomita_oracle(model, &u1)?;
    let dual_modular = [
        matkit::rel_diff(&mo1.delta.smat, &delta_inv.smat),
        matkit::op_norm(&(&mo1.j0.cmat - &mo0.j0.cmat)),
        matkit::rel_diff(&oracle_delta.smat, &delta_inv.smat),
        matkit::op_norm(&(&oracle_j.cmat - &mo0.j0.cmat)),
    ]
    .into_iter()
    .fold(0.0, f64::max);

    let i = build_invariant_conjugation(model, &mo0.delta, &mo0.j0, u0, &u1)?;
    let conjugation = invariant_conjugation_residuals(&mo0.delta, &mo0.j0, &i, u0, &u1)
        .into_iter()
        .fold(0.0, f64::max);
    let u1_unitary = &i * &mo0.j0;
    let turned = &(&u1_unitary.adjoint() * &mo0.delta) * &u1_unitary;

    let k = SuperOperator::new(householder(&u1.to_vec(), &u0.to_vec(), tol));
    let solution = verify_solution(model, u0, &(&k * &u1_unitary))?.with_expected(&u1);

    let residuals = SecondClassResiduals {
        dual_modular,
        conjugation,
        inversion: matkit::rel_diff(&turned.smat, &delta_inv.smat),
        fixes_u0: rel_vec(&u1_unitary.apply(u0), u0),
        fixes_u1: rel_vec(&u1_unitary.apply(&u1), &u1),
        j_commute: j_commutator(&u1_unitary, &mo0.j0),
        unitarity: matkit::unitary_residual(&u1_unitary.smat),
    };
    let pass = residuals.max() <= tol.eq_tol && solution.pass;
    Ok(SecondClass {
        u1,
        u1_unitary,
        trace_h0_inv,
        residuals,
        solution,
        pass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessResiduals {
    pub unitarity: f64,
    /// `‖XΔ₀X† − Δ₀‖`, relative.
    pub delta: f64,
    pub j_commute: f64,
    /// `min ‖Xu₀ ∓ u₀‖/‖u₀‖`.
    pub fixes_u0: f64,
    /// Distance of `U_b†XU_a` from the automorphisms of `M₀`, so that
    /// `X·M_a·X† = M_b`.
    pub algebra: f64,
}

impl WitnessResiduals {
    pub fn max(&self) -> f64 {
        [self.unitarity, self.delta, self.j_commute, self.fixes_u0, self.algebra]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub data_a: SpectralData,
    pub data_b: SpectralData,
    /// Unitary `X` with `X·M_a·X† = M_b`, commuting with `Δ₀` and `J₀` and
    /// fixing `u₀` up to sign. Only reported when all its checks pass.
    pub witness: Option<(SuperOperator, WitnessResiduals)>,
}

/// Decide whether two solutions are equivalent by comparing the data of
/// their recovered `H`.
///
/// For equivalent solutions with `u_a = U_a†u₀ = H_a^{1/2}V_a` and
/// `u_b = H_b^{1/2}V_b`, a unitary `W ∈ M₀` with `W·H_a·W† = H_b` gives
/// `Y = L_W ∘ R_{V_a†W†V_b}`, an automorphism of `M₀` sending `u_a` to
/// `u_b`, and the witness is `X = U_b·Y·U_a†`.
pub fn solutions_equivalent(
    model: &FactorModel,
    u0: &HVector,
    ua: &SuperOperator,
    ub: &SuperOperator,
) -> Result<EquivalenceVerdict> {
    let tol = model.tol();
    for (name, u) in [("U_a", ua), ("U_b", ub)] {
        let cert = verify_solution(model, u0, u)?;
        if !cert.pass {
            return Err(Error::PreconditionFailed {
                what: format!("{name} is not a solution"),
                residual: cert.residuals.max(),
            });
        }
    }
    let va = nf1_membership(model, u0, ua)?;
    let vb = nf1_membership(model, u0, ub)?;
    let equivalent = data_equivalent(&va.data, &vb.data, tol)?;
    let witness = if equivalent {
        equivalence_witness(model, u0, ua, ub).filter(|(_, r)| r.max() <= tol.eq_tol)
    } else {
        None
    };
    Ok(EquivalenceVerdict {
        equivalent,
        data_a: va.data,
        data_b: vb.data,
        witness,
    })
}

fn equivalence_witness(
    model: &FactorModel,
    u0: &HVector,
    ua: &SuperOperator,
    ub: &SuperOperator,
) -> Option<(SuperOperator, WitnessResiduals)> {
    let tol = model.tol();
    let vec_a = ua.adjoint().apply(u0);
    let vec_b = ub.adjoint().apply(u0);
    let pa = matkit::left_polar(&vec_a.mat).ok()?;
    let pb = matkit::left_polar(&vec_b.mat).ok()?;
    let ea = matkit::herm_eig(&pa.p, tol).ok()?;
    let eb = matkit::herm_eig(&pb.p, tol).ok()?;
    let w = &eb.vectors * ea.vectors.adjoint();
    let right = pa.w.adjoint() * w.adjoint() * &pb.w;
    let y = SuperOperator::sandwich(&w, &right);
    let x = &(ub * &y) * &ua.adjoint();

    let mo0 = modular_from_vector(model, u0).ok()?;
    let moved = x.apply(u0);
    let fix = rel_vec(&moved, u0).min(rel_vec(&HVector::new(-moved.mat.clone()), u0));
    let residuals = WitnessResiduals {
        unitarity: matkit::unitary_residual(&x.smat),
        delta: matkit::rel_diff(&(&(&x * &mo0.delta) * &x.adjoint()).smat, &mo0.delta.smat),
        j_commute: j_commutator(&x, &mo0.j0),
        fixes_u0: fix,
        algebra: algebra_invariance_residual(model.n(), &y.smat),
    };
    Some((x, residuals))
}

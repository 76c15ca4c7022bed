//! Eigenvalue–multiplicity data of the positive operator `H` generating a
//! modular operator, and the spectrum it induces on `Δ = L_H·R_{H′}`.
//!
//! Data `(μ_k, m_k)` lists the distinct eigenvalues of `H` with the traces of
//! their eigenprojections. In type I_N every `m_k` is a multiple of `1/N`
//! (kept as an exact rational); in type II₁ it is any number in `(0, 1]`.
//! The induced spectrum consists of all ratios `μ_k/μ_l`, with multiplicity
//! `Σ m_k·m_l` over the pairs realizing a ratio in type I and infinite
//! multiplicity in type II₁.
//!
//! Positive values are clustered on a logarithmic scale: two values are the
//! same point when `|ln a − ln b| ≤ spec_tol`.

use std::cmp::Ordering;
use std::fmt;

use num_rational::Rational64;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::matkit::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FactorType {
    /// Type I_N, the N×N matrices.
    TypeI(usize),
    TypeII1,
}

impl fmt::Display for FactorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorType::TypeI(n) => write!(f, "I_{n}"),
            FactorType::TypeII1 => write!(f, "II_1"),
        }
    }
}

/// Von Neumann multiplicity (trace of a spectral projection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplicity {
    Exact(Rational64),
    Real(f64),
    Infinite,
}

impl Multiplicity {
    pub fn frac(num: i64, den: i64) -> Self {
        Multiplicity::Exact(Rational64::new(num, den))
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Multiplicity::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Multiplicity::Real(x) => *x,
            Multiplicity::Infinite => f64::INFINITY,
        }
    }

    fn approx_eq(&self, other: &Multiplicity, eq_tol: f64) -> bool {
        match (self, other) {
            (Multiplicity::Exact(a), Multiplicity::Exact(b)) => a == b,
            (Multiplicity::Infinite, Multiplicity::Infinite) => true,
            (Multiplicity::Infinite, _) | (_, Multiplicity::Infinite) => false,
            (a, b) => (a.as_f64() - b.as_f64()).abs() <= eq_tol,
        }
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Exact(r) => write!(f, "{r}"),
            Multiplicity::Real(x) => write!(f, "{x}"),
            Multiplicity::Infinite => write!(f, "infinite"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPair {
    pub mu: f64,
    pub m: Multiplicity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub ftype: FactorType,
    pub pairs: Vec<SpectralPair>,
}

impl SpectralData {
    /// Type I_N data from `(μ, l)` with multiplicity `l/N`.
    pub fn type_i(n: usize, pairs: &[(f64, i64)]) -> Self {
        SpectralData {
            ftype: FactorType::TypeI(n),
            pairs: pairs
                .iter()
                .map(|&(mu, l)| SpectralPair {
                    mu,
                    m: Multiplicity::frac(l, n as i64),
                })
                .collect(),
        }
    }

    pub fn type_ii1(pairs: &[(f64, f64)]) -> Self {
        SpectralData {
            ftype: FactorType::TypeII1,
            pairs: pairs
                .iter()
                .map(|&(mu, m)| SpectralPair {
                    mu,
                    m: Multiplicity::Real(m),
                })
                .collect(),
        }
    }

    pub fn mus(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.mu).collect()
    }

    /// `Σ m_k·μ_k`.
    pub fn weighted_sum(&self) -> f64 {
        self.pairs.iter().map(|p| p.m.as_f64() * p.mu).sum()
    }

    /// Pairs sorted by descending `μ`.
    pub fn canonical(mut self) -> Self {
        self.pairs.sort_by(|a, b| b.mu.total_cmp(&a.mu));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPair {
    pub lambda: f64,
    pub n: Multiplicity,
}

/// Eigenvalues of a modular operator with their multiplicities, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSpectrum {
    pub ftype: FactorType,
    pub pairs: Vec<DeltaPair>,
}

impl DeltaSpectrum {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn has_infinite(&self) -> bool {
        self.pairs.iter().any(|p| p.n == Multiplicity::Infinite)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Empty,
    NonPositiveEigenvalue { index: usize, mu: f64 },
    DuplicateEigenvalue { first: usize, second: usize },
    /// Multiplicity outside `{1/N, …, 1}` (type I_N) or `(0, 1]` (type II₁).
    MultiplicityRange { index: usize, m: String },
    MultiplicitySum { sum: String },
    /// `Σ m_k·μ_k ≠ 1`.
    NotNormalized { weighted_sum: f64 },
}

pub fn same_point(a: f64, b: f64, spec_tol: f64) -> bool {
    (a.ln() - b.ln()).abs() <= spec_tol
}

/// Checks every constraint on spectral data: positive distinct eigenvalues,
/// admissible multiplicities summing to one, and `Σ m_k·μ_k = 1`. An empty
/// list means the data is valid.
pub fn validate_data(d: &SpectralData, tol: &Tolerances) -> Vec<Violation> {
    let mut out = structural_violations(d, tol);
    let ws = d.weighted_sum();
    if !out.iter().any(|v| matches!(v, Violation::NonPositiveEigenvalue { .. }))
        && (ws - 1.0).abs() > tol.eq_tol
    {
        out.push(Violation::NotNormalized { weighted_sum: ws });
    }
    out
}

/// Everything except the normalization `Σ m_k·μ_k = 1`.
fn structural_violations(d: &SpectralData, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    if d.pairs.is_empty() {
        out.push(Violation::Empty);
        return out;
    }
    for (i, p) in d.pairs.iter().enumerate() {
        if !(p.mu > 0.0 && p.mu.is_finite()) {
            out.push(Violation::NonPositiveEigenvalue { index: i, mu: p.mu });
        }
    }
    for i in 0..d.pairs.len() {
        for j in i + 1..d.pairs.len() {
            let (a, b) = (d.pairs[i].mu, d.pairs[j].mu);
            if a > 0.0 && b > 0.0 && same_point(a, b, tol.spec_tol) {
                out.push(Violation::DuplicateEigenvalue { first: i, second: j });
            }
        }
    }
    match d.ftype {
        FactorType::TypeI(n) => {
            let mut sum = Rational64::zero();
            let mut exact = true;
            for (i, p) in d.pairs.iter().enumerate() {
                let ok = match p.m {
                    Multiplicity::Exact(r) => {
                        sum += r;
                        let scaled = r * Rational64::from_integer(n as i64);
                        scaled.is_integer() && scaled >= Rational64::one() && r <= Rational64::one()
                    }
                    _ => {
                        exact = false;
                        false
                    }
                };
                if !ok {
                    out.push(Violation::MultiplicityRange {
                        index: i,
                        m: p.m.to_string(),
                    });
                }
            }
            if exact && sum != Rational64::one() {
                out.push(Violation::MultiplicitySum {
                    sum: sum.to_string(),
                });
            }
        }
        FactorType::TypeII1 => {
            let mut sum = 0.0;
            for (i, p) in d.pairs.iter().enumerate() {
                let m = p.m.as_f64();
                sum += m;
                if !(m > 0.0 && m <= 1.0 + tol.eq_tol) || p.m == Multiplicity::Infinite {
                    out.push(Violation::MultiplicityRange {
                        index: i,
                        m: p.m.to_string(),
                    });
                }
            }
            if (sum - 1.0).abs() > tol.eq_tol {
                out.push(Violation::MultiplicitySum {
                    sum: sum.to_string(),
                });
            }
        }
    }
    out
}

fn require_structure(d: &SpectralData, tol: &Tolerances) -> Result<()> {
    let v = structural_violations(d, tol);
    if v.is_empty() {
        Ok(())
    } else {
        Err(invalid(format!("invalid spectral data: {v:?}")))
    }
}

fn multiplicity_sum_is_one(d: &SpectralData, tol: &Tolerances) -> bool {
    match d.ftype {
        FactorType::TypeI(_) => {
            let mut s = Rational64::zero();
            for p in &d.pairs {
                match p.m {
                    Multiplicity::Exact(r) => s += r,
                    _ => return false,
                }
            }
            s == Rational64::one()
        }
        FactorType::TypeII1 => {
            (d.pairs.iter().map(|p| p.m.as_f64()).sum::<f64>() - 1.0).abs() <= tol.eq_tol
        }
    }
}

/// Rescale `μ ↦ c·μ` so that `Σ m_k·μ_k = 1`; returns the rescaled data and `c`.
pub fn normalize_data(d: &SpectralData, tol: &Tolerances) -> Result<(SpectralData, f64)> {
    if !multiplicity_sum_is_one(d, tol) {
        return Err(invalid("multiplicities must sum to 1"));
    }
    let ws = d.weighted_sum();
    if !(ws > 0.0 && ws.is_finite()) {
        return Err(invalid("eigenvalues must be positive"));
    }
    let c = 1.0 / ws;
    let mut out = d.clone();
    for p in &mut out.pairs {
        p.mu *= c;
    }
    Ok((out, c))
}

fn product(a: &Multiplicity, b: &Multiplicity) -> Multiplicity {
    match (a, b) {
        (Multiplicity::Exact(x), Multiplicity::Exact(y)) => Multiplicity::Exact(x * y),
        _ => Multiplicity::Real(a.as_f64() * b.as_f64()),
    }
}

fn sum(a: &Multiplicity, b: &Multiplicity) -> Multiplicity {
    match (a, b) {
        (Multiplicity::Exact(x), Multiplicity::Exact(y)) => Multiplicity::Exact(x + y),
        _ => Multiplicity::Real(a.as_f64() + b.as_f64()),
    }
}

/// Cluster positive values by log distance; representatives are geometric
/// means. Returns `(representative, member indices)` ascending.
fn cluster_positive(values: &[f64], spec_tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in order {
        match out.last_mut() {
            Some((_, members))
                if same_point(values[*members.last().unwrap()], values[i], spec_tol) =>
            {
                members.push(i)
            }
            _ => out.push((0.0, vec![i])),
        }
    }
    for (rep, members) in &mut out {
        let log_mean = members.iter().map(|&i| values[i].ln()).sum::<f64>() / members.len() as f64;
        *rep = log_mean.exp();
    }
    out
}

/// Spectrum of `Δ` induced by the data: all ratios `μ_k/μ_l`, with
/// multiplicity `Σ m_k·m_l` (type I) or infinite (type II₁).
pub fn induced_delta_spectrum(d: &SpectralData, tol: &Tolerances) -> Result<DeltaSpectrum> {
    require_structure(d, tol)?;
    let mut ratios = Vec::new();
    let mut weights = Vec::new();
    for a in &d.pairs {
        for b in &d.pairs {
            ratios.push(a.mu / b.mu);
            weights.push(product(&a.m, &b.m));
        }
    }
    let pairs = cluster_positive(&ratios, tol.spec_tol)
        .into_iter()
        .map(|(rep, members)| {
            // the k = l pairs give exactly 1
            let lambda = if members.iter().any(|&i| i % (d.pairs.len() + 1) == 0) {
                1.0
            } else {
                rep
            };
            let n = match d.ftype {
                FactorType::TypeII1 => Multiplicity::Infinite,
                FactorType::TypeI(_) => members
                    .iter()
                    .skip(1)
                    .fold(weights[members[0]], |acc, &i| sum(&acc, &weights[i])),
            };
            DeltaPair { lambda, n }
        })
        .collect();
    Ok(DeltaSpectrum {
        ftype: d.ftype,
        pairs,
    })
}

/// Equal up to a positive rescaling of the eigenvalues, with identical
/// multiplicities.
pub fn data_equivalent(d1: &SpectralData, d2: &SpectralData, tol: &Tolerances) -> Result<bool> {
    if d1.ftype != d2.ftype {
        return Err(invalid(format!(
            "factor types differ: {} vs {}",
            d1.ftype, d2.ftype
        )));
    }
    let (a, _) = normalize_data(d1, tol)?;
    let (b, _) = normalize_data(d2, tol)?;
    let a = a.canonical();
    let b = b.canonical();
    if a.pairs.len() != b.pairs.len() {
        return Ok(false);
    }
    Ok(a.pairs.iter().zip(&b.pairs).all(|(x, y)| {
        same_point(x.mu, y.mu, tol.spec_tol) && x.m.approx_eq(&y.m, tol.eq_tol)
    }))
}

/// `(c·μ_k⁻¹, m_k)` with `c` normalizing; the data of the inverse modular
/// operator.
pub fn dual_data(d: &SpectralData, tol: &Tolerances) -> Result<SpectralData> {
    require_structure(d, tol)?;
    let inverted = SpectralData {
        ftype: d.ftype,
        pairs: d
            .pairs
            .iter()
            .map(|p| SpectralPair {
                mu: 1.0 / p.mu,
                m: p.m,
            })
            .collect(),
    };
    Ok(normalize_data(&inverted, tol)?.0)
}

pub fn is_self_dual(d: &SpectralData, tol: &Tolerances) -> Result<bool> {
    data_equivalent(d, &dual_data(d, tol)?, tol)
}

fn spectra_match(a: &DeltaSpectrum, b: &DeltaSpectrum, tol: &Tolerances) -> bool {
    a.pairs.len() == b.pairs.len()
        && a.pairs.iter().zip(&b.pairs).all(|(x, y)| {
            same_point(x.lambda, y.lambda, tol.spec_tol) && x.n.approx_eq(&y.n, tol.eq_tol)
        })
}

/// Whether the data induces exactly the target spectrum.
pub fn compatible_with(d: &SpectralData, target: &DeltaSpectrum, tol: &Tolerances) -> Result<bool> {
    let induced = induced_delta_spectrum(d, tol)?;
    let mut t = target.clone();
    t.pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(spectra_match(&induced, &t, tol))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationBounds {
    /// Largest number of distinct eigenvalues tried; `None` means as many as
    /// the target allows.
    pub max_k: Option<usize>,
    /// Cap on the number of candidate eigenvalue sets examined.
    pub max_candidates: usize,
}

impl Default for EnumerationBounds {
    fn default() -> Self {
        EnumerationBounds {
            max_k: None,
            max_candidates: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration {
    /// One normalized representative per class, canonically ordered.
    pub classes: Vec<SpectralData>,
    /// Set when the bounds cut the search short.
    pub incomplete: bool,
}

/// Every composition of `total` into `parts` positive integers, in
/// lexicographic order.
pub fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, parts: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if rest >= 1 {
                prefix.push(rest);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for first in 1..rest {
            if rest - first < parts - 1 {
                break;
            }
            prefix.push(first);
            rec(rest - first, parts - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if parts >= 1 && total >= parts {
        rec(total, parts, &mut Vec::new(), &mut out);
    }
    out
}

fn ratio_set(mus: &[f64], spec_tol: f64) -> Vec<f64> {
    let ratios: Vec<f64> = mus
        .iter()
        .flat_map(|a| mus.iter().map(move |b| a / b))
        .collect();
    cluster_positive(&ratios, spec_tol)
        .into_iter()
        .map(|(r, _)| r)
        .collect()
}

fn compare_data(a: &SpectralData, b: &SpectralData) -> Ordering {
    for (x, y) in a.pairs.iter().zip(&b.pairs) {
        let o = y.mu.total_cmp(&x.mu).then(x.m.as_f64().total_cmp(&y.m.as_f64()));
        if o != Ordering::Equal {
            return o;
        }
    }
    a.pairs.len().cmp(&b.pairs.len())
}

/// All classes of type I_N data inducing the target spectrum, up to
/// equivalence.
///
/// The scale is fixed by `μ_max = 1`; every other `μ_k = μ_k/μ_max` is then
/// itself an eigenvalue of `Δ` not exceeding 1, so candidate eigenvalue sets
/// are subsets of the target's `λ ≤ 1` containing 1 whose ratio set is the
/// whole target. Multiplicities are searched exhaustively over compositions
/// of N.
pub fn enumerate_classes(
    target: &DeltaSpectrum,
    n: usize,
    bounds: &EnumerationBounds,
    tol: &Tolerances,
) -> Result<Enumeration> {
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    if target.has_infinite() {
        return Err(invalid("enumeration needs finite multiplicities"));
    }
    let mut target = target.clone();
    target.ftype = FactorType::TypeI(n);
    target.pairs.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let lambdas = target.lambdas();
    if lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(invalid("target eigenvalues must be positive"));
    }

    let mut below: Vec<f64> = lambdas
        .iter()
        .copied()
        .filter(|&l| l < 1.0 && !same_point(l, 1.0, tol.spec_tol))
        .collect();
    below.sort_by(|a, b| b.total_cmp(a));
    let has_one = lambdas.iter().any(|&l| same_point(l, 1.0, tol.spec_tol));
    let mut result = Enumeration {
        classes: vec![],
        incomplete: false,
    };
    if !has_one {
        return Ok(result);
    }

    // H has at most N distinct eigenvalues
    let reachable = (below.len() + 1).min(n);
    let max_k = bounds.max_k.unwrap_or(reachable).min(reachable);
    if max_k < reachable {
        result.incomplete = true;
    }
    if below.len() >= 63 {
        return Err(invalid("target spectrum too large to enumerate"));
    }
    let mut examined = 0usize;
    for mask in 0u64..(1u64 << below.len()) {
        let size = mask.count_ones() as usize + 1;
        if size > max_k {
            continue;
        }
        examined += 1;
        if examined > bounds.max_candidates {
            result.incomplete = true;
            break;
        }
        let mut mus = vec![1.0];
        for (i, &l) in below.iter().enumerate() {
            if mask & (1 << i) != 0 {
                mus.push(l);
            }
        }
        let rs = ratio_set(&mus, tol.spec_tol);
        if rs.len() != lambdas.len()
            || !rs.iter().zip(&lambdas).all(|(a, b)| same_point(*a, *b, tol.spec_tol))
        {
            continue;
        }
        for comp in compositions(n, mus.len()) {
            let pairs: Vec<(f64, i64)> = mus.iter().zip(&comp).map(|(&m, &l)| (m, l as i64)).collect();
            let d = SpectralData::type_i(n, &pairs);
            if compatible_with(&d, &target, tol)? {
                let (norm, _) = normalize_data(&d, tol)?;
                result.classes.push(norm.canonical());
            }
        }
    }
    result.classes.sort_by(compare_data);
    let mut dedup: Vec<SpectralData> = Vec::new();
    for d in result.classes {
        let dup = dedup
            .iter()
            .any(|e| data_equivalent(e, &d, tol).unwrap_or(false));
        if !dup {
            dedup.push(d);
        }
    }
    result.classes = dedup;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariantSpec {
    /// New multiplicities `m′_k = m_{σ(k)}`.
    Permutation(Vec<usize>),
    /// Move `epsilon` of multiplicity from pair `from` to pair `to`.
    EpsilonShift { to: usize, from: usize, epsilon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantReport {
    pub data: SpectralData,
    pub equivalent_to_original: bool,
    pub compatible_with_original_spectrum: bool,
}

/// New type II₁ data from old by permuting multiplicities or shifting
/// multiplicity between two eigenvalues, renormalized.
pub fn derive_variants(d: &SpectralData, spec: &VariantSpec, tol: &Tolerances) -> Result<VariantReport> {
    if d.ftype != FactorType::TypeII1 {
        return Err(invalid("variants are defined for type II_1 data"));
    }
    let violations = validate_data(d, tol);
    if !violations.is_empty() {
        return Err(invalid(format!("invalid spectral data: {violations:?}")));
    }
    let k = d.pairs.len();
    let mut out = d.clone();
    match spec {
        VariantSpec::Permutation(sigma) => {
            let mut seen = vec![false; k];
            if sigma.len() != k || sigma.iter().any(|&s| s >= k || std::mem::replace(&mut seen[s], true)) {
                return Err(invalid("not a permutation of the pair indices"));
            }
            for (i, &s) in sigma.iter().enumerate() {
                out.pairs[i].m = d.pairs[s].m;
            }
        }
        VariantSpec::EpsilonShift { to, from, epsilon } => {
            let (to, from, eps) = (*to, *from, *epsilon);
            if to >= k || from >= k || to == from {
                return Err(invalid("shift indices must be distinct pair indices"));
            }
            let m_to = d.pairs[to].m.as_f64();
            let m_from = d.pairs[from].m.as_f64();
            if !(eps >= 0.0 && eps < m_from && m_to + eps <= 1.0) {
                return Err(invalid(format!(
                    "epsilon {eps} must satisfy 0 ≤ ε < {m_from} and stay within (0, 1]"
                )));
            }
            out.pairs[to].m = Multiplicity::Real(m_to + eps);
            out.pairs[from].m = Multiplicity::Real(m_from - eps);
        }
    }
    let (out, _) = normalize_data(&out, tol)?;
    let original = induced_delta_spectrum(d, tol)?;
    Ok(VariantReport {
        equivalent_to_original: data_equivalent(d, &out, tol)?,
        compatible_with_original_spectrum: compatible_with(&out, &original, tol)?,
        data: out,
    })
}

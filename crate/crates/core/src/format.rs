//! JSON encoding of vectors, operators, spectral data and certificates.
//!
//! A complex number is a `[re, im]` pair, a matrix is a row-major nested
//! array of them. Superoperators act on column-stacked vectors
//! (`vec(x)[i + N·j] = x[i, j]`). Type I_N multiplicities are written as
//! exact fraction strings such as `"2/3"`; type II₁ multiplicities as
//! numbers, and the infinite multiplicity of a Δ eigenvalue as `"infinite"`.

use num_rational::Rational64;
use serde_json::{json, Map, Value};

use crate::correspondence::VectorReport;
use crate::error::{invalid, Result};
use crate::inverse::{EquivalenceVerdict, Nf1Verdict, SecondClass, SolutionCertificate};
use crate::matkit::{CMatrix, Tolerances, C64};
use crate::modular::{DeltaFactors, ModularObjects, ModularReport};
use crate::spectral::{
    DeltaPair, DeltaSpectrum, Enumeration, FactorType, Multiplicity, SpectralData, SpectralPair,
    VariantReport,
};
use crate::standard_form::{AntilinearOp, FactorElement, HVector, SuperOperator};

/// Conversion to and from the documented JSON layout.
pub trait JsonForm: Sized {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;

    fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid(format!("malformed JSON: {e}")))?;
        Self::from_json(&v)
    }
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect()))
            .collect(),
    )
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| invalid(format!("{what}: expected a number, got {v}")))
}

fn complex_from_json(v: &Value) -> Result<C64> {
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(C64::new(number(re, "real part")?, number(im, "imaginary part")?)),
        _ => Err(invalid(format!("complex number must be [re, im], got {v}"))),
    }
}

pub fn matrix_from_json(v: &Value, size: usize) -> Result<CMatrix> {
    let rows = v.as_array().ok_or_else(|| invalid("matrix must be an array of rows"))?;
    if rows.len() != size {
        return Err(invalid(format!("expected {size} rows, got {}", rows.len())));
    }
    let mut m = CMatrix::zeros(size, size);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| invalid("matrix row must be an array"))?;
        if row.len() != size {
            return Err(invalid(format!("row {i}: expected {size} entries, got {}", row.len())));
        }
        for (j, z) in row.iter().enumerate() {
            m[(i, j)] = complex_from_json(z)?;
        }
    }
    Ok(m)
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| invalid(format!("missing field \"{key}\"")))
}

fn dimension(v: &Value) -> Result<usize> {
    field(v, "n")?
        .as_u64()
        .filter(|&n| n >= 1)
        .map(|n| n as usize)
        .ok_or_else(|| invalid("\"n\" must be a positive integer"))
}

impl JsonForm for HVector {
    fn to_json(&self) -> Value {
        json!({ "n": self.n(), "mat": matrix_to_json(&self.mat) })
    }

    fn from_json(v: &Value) -> Result<Self> {
        let n = dimension(v)?;
        Ok(HVector::new(matrix_from_json(field(v, "mat")?, n)?))
    }
}

impl JsonForm for FactorElement {
    fn to_json(&self) -> Value {
        json!({ "n": self.mat.nrows(), "mat": matrix_to_json(&self.mat) })
    }

    fn from_json(v: &Value) -> Result<Self> {
        let n = dimension(v)?;
        Ok(FactorElement::new(matrix_from_json(field(v, "mat")?, n)?))
    }
}

impl JsonForm for SuperOperator {
    fn to_json(&self) -> Value {
        json!({ "n": self.n(), "smat": matrix_to_json(&self.smat) })
    }

    fn from_json(v: &Value) -> Result<Self> {
        let n = dimension(v)?;
        Ok(SuperOperator::new(matrix_from_json(field(v, "smat")?, n * n)?))
    }
}

impl JsonForm for AntilinearOp {
    fn to_json(&self) -> Value {
        json!({ "n": self.n(), "cmat": matrix_to_json(&self.cmat) })
    }

    fn from_json(v: &Value) -> Result<Self> {
        let n = dimension(v)?;
        Ok(AntilinearOp::new(matrix_from_json(field(v, "cmat")?, n * n)?))
    }
}

/// `"I_3"`, `"II_1"`, or `"I_N"` together with an explicit `n`.
pub fn parse_ftype(name: &str, n: Option<usize>) -> Result<FactorType> {
    match name {
        "II_1" => Ok(FactorType::TypeII1),
        "I_N" => n
            .filter(|&n| n >= 1)
            .map(FactorType::TypeI)
            .ok_or_else(|| invalid("type I_N needs a positive \"n\"")),
        other => {
            let k = other
                .strip_prefix("I_")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1)
                .ok_or_else(|| invalid(format!("unknown factor type \"{other}\"")))?;
            match n {
                Some(n) if n != k => Err(invalid(format!("factor type {other} conflicts with n = {n}"))),
                _ => Ok(FactorType::TypeI(k)),
            }
        }
    }
}

fn ftype_fields(ftype: FactorType, obj: &mut Map<String, Value>) {
    match ftype {
        FactorType::TypeI(n) => {
            obj.insert("ftype".into(), json!("I_N"));
            obj.insert("n".into(), json!(n));
        }
        FactorType::TypeII1 => {
            obj.insert("ftype".into(), json!("II_1"));
        }
    }
}

fn ftype_from_json(v: &Value) -> Result<FactorType> {
    let name = field(v, "ftype")?
        .as_str()
        .ok_or_else(|| invalid("\"ftype\" must be a string"))?;
    let n = match v.get("n") {
        None | Some(Value::Null) => None,
        Some(_) => Some(dimension(v)?),
    };
    parse_ftype(name, n)
}

pub fn multiplicity_to_json(m: &Multiplicity) -> Value {
    match m {
        Multiplicity::Exact(r) => json!(r.to_string()),
        Multiplicity::Real(x) => json!(x),
        Multiplicity::Infinite => json!("infinite"),
    }
}

fn parse_fraction(s: &str) -> Result<Rational64> {
    let bad = || invalid(format!("\"{s}\" is not a fraction l/N"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s.trim(), "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let den: i64 = den.parse().map_err(|_| bad())?;
    if den <= 0 {
        return Err(bad());
    }
    Ok(Rational64::new(num, den))
}

pub fn multiplicity_from_json(v: &Value) -> Result<Multiplicity> {
    match v {
        Value::String(s) if s == "infinite" => Ok(Multiplicity::Infinite),
        Value::String(s) => parse_fraction(s).map(Multiplicity::Exact),
        Value::Number(_) => Ok(Multiplicity::Real(number(v, "multiplicity")?)),
        _ => Err(invalid(format!("multiplicity must be a fraction string or number, got {v}"))),
    }
}

fn pairs(v: &Value) -> Result<&Vec<Value>> {
    field(v, "pairs")?
        .as_array()
        .ok_or_else(|| invalid("\"pairs\" must be an array"))
}

impl JsonForm for SpectralData {
    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        ftype_fields(self.ftype, &mut obj);
        let pairs = self
            .pairs
            .iter()
            .map(|p| json!({ "mu": p.mu, "m": multiplicity_to_json(&p.m) }))
            .collect();
        obj.insert("pairs".into(), Value::Array(pairs));
        Value::Object(obj)
    }

    fn from_json(v: &Value) -> Result<Self> {
        let ftype = ftype_from_json(v)?;
        let pairs = pairs(v)?
            .iter()
            .map(|p| {
                let mu = number(field(p, "mu")?, "mu")?;
                let m = match (ftype, multiplicity_from_json(field(p, "m")?)?) {
                    (_, Multiplicity::Infinite) => {
                        return Err(invalid("eigenvalue multiplicities of H are finite"))
                    }
                    (FactorType::TypeII1, Multiplicity::Exact(r)) => {
                        Multiplicity::Real(*r.numer() as f64 / *r.denom() as f64)
                    }
                    (_, m) => m,
                };
                Ok(SpectralPair { mu, m })
            })
            .collect::<Result<_>>()?;
        Ok(SpectralData { ftype, pairs })
    }
}

impl JsonForm for DeltaSpectrum {
    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        ftype_fields(self.ftype, &mut obj);
        let pairs = self
            .pairs
            .iter()
            .map(|p| json!({ "lambda": p.lambda, "n": multiplicity_to_json(&p.n) }))
            .collect();
        obj.insert("pairs".into(), Value::Array(pairs));
        Value::Object(obj)
    }

    /// The factor type is optional here; a target for enumeration takes
    /// its N from the command line.
    fn from_json(v: &Value) -> Result<Self> {
        let ftype = if v.get("ftype").is_some() {
            ftype_from_json(v)?
        } else {
            FactorType::TypeI(0)
        };
        let pairs = pairs(v)?
            .iter()
            .map(|p| {
                Ok(DeltaPair {
                    lambda: number(field(p, "lambda")?, "lambda")?,
                    n: multiplicity_from_json(field(p, "n")?)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(DeltaSpectrum { ftype, pairs })
    }
}

pub fn tolerances_to_json(tol: &Tolerances) -> Value {
    json!({ "eq_tol": tol.eq_tol, "spec_tol": tol.spec_tol })
}

fn report_value<T: serde::Serialize>(r: &T) -> Value {
    serde_json::to_value(r).expect("plain report structs always serialize")
}

pub fn vector_report_to_json(r: &VectorReport) -> Value {
    report_value(r)
}

pub fn modular_to_json(mo: &ModularObjects, identities: &ModularReport) -> Value {
    json!({
        "delta": mo.delta.to_json(),
        "j0": mo.j0.to_json(),
        "h0": mo.h0.to_json(),
        "v": mo.v.to_json(),
        "form_residual": mo.form_residual,
        "identities": report_value(identities),
    })
}

pub fn delta_factors_to_json(f: &DeltaFactors) -> Value {
    json!({
        "h": f.h.to_json(),
        "h_prime": f.h_prime.to_json(),
        "residual": f.residual,
    })
}

pub fn enumeration_to_json(e: &Enumeration) -> Value {
    json!({
        "classes": e.classes.iter().map(JsonForm::to_json).collect::<Vec<_>>(),
        "incomplete": e.incomplete,
    })
}

pub fn variant_to_json(r: &VariantReport) -> Value {
    json!({
        "data": r.data.to_json(),
        "equivalent_to_original": r.equivalent_to_original,
        "compatible_with_original_spectrum": r.compatible_with_original_spectrum,
    })
}

pub fn certificate_to_json(c: &SolutionCertificate) -> Value {
    json!({
        "verdict": if c.pass { "PASS" } else { "FAIL" },
        "u_solution": c.u_solution.to_json(),
        "unitary": c.unitary.to_json(),
        "data": c.data.as_ref().map(JsonForm::to_json),
        "residuals": report_value(&c.residuals),
        "sign": c.sign,
        "tol": tolerances_to_json(&c.tol),
    })
}

pub fn second_class_to_json(s: &SecondClass) -> Value {
    json!({
        "verdict": if s.pass { "PASS" } else { "FAIL" },
        "u1": s.u1.to_json(),
        "U1": s.u1_unitary.to_json(),
        "trace_h0_inv": s.trace_h0_inv,
        "residuals": report_value(&s.residuals),
        "solution": certificate_to_json(&s.solution),
    })
}

pub fn nf1_to_json(v: &Nf1Verdict) -> Value {
    json!({
        "member": v.member,
        "data": v.data.to_json(),
        "witness": v.witness.as_ref().map(JsonForm::to_json),
    })
}

pub fn equivalence_to_json(v: &EquivalenceVerdict) -> Value {
    json!({
        "equivalent": v.equivalent,
        "data_a": v.data_a.to_json(),
        "data_b": v.data_b.to_json(),
        "witness": v.witness.as_ref().map(|(x, r)| json!({
            "unitary": x.to_json(),
            "residuals": report_value(r),
        })),
    })
}

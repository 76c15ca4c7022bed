//! `modinv`: command-line access to every stage of the pipeline.
//!
//! Results go to standard output as JSON. Diagnostics go to standard error
//! as one JSON object per line. Exit status is 0 on success or PASS, 1 on a
//! failed verification and 2 on invalid input.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use modinv::correspondence::classify_vector;
use modinv::format::{self, JsonForm};
use modinv::inverse::{
    build_second_class, build_solution, nf1_membership, solutions_equivalent, verify_solution,
};
use modinv::modular::{check_modular_identities, factorize_delta, modular_from_vector, tomita_oracle};
use modinv::spectral::{
    compatible_with, data_equivalent, derive_variants, dual_data, enumerate_classes,
    induced_delta_spectrum, is_self_dual, normalize_data, validate_data, DeltaSpectrum,
    EnumerationBounds, FactorType, SpectralData, VariantSpec,
};
use modinv::standard_form::{make_model, FactorModel, HVector, SuperOperator};
use modinv::{matkit, Error, Tolerances};

#[derive(Parser)]
#[command(name = "modinv", version, about = "Modular objects and the modular inverse problem for type I_N factors")]
struct Cli {
    /// Equality tolerance for residual checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Tolerance for clustering eigenvalues.
    #[arg(long = "spec-tol", global = true, default_value_t = 1e-8)]
    spec_tol: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constants of the standard form.
    Model {
        #[command(subcommand)]
        cmd: ModelCmd,
    },
    /// Cyclic and separating checks.
    Vector {
        #[command(subcommand)]
        cmd: VectorCmd,
    },
    /// Modular objects of a vector.
    Modular {
        #[command(subcommand)]
        cmd: ModularCmd,
    },
    /// Factorization of a modular operator.
    Delta {
        #[command(subcommand)]
        cmd: DeltaCmd,
    },
    /// Spectral data and its classes.
    Classes {
        #[command(subcommand)]
        cmd: ClassesCmd,
    },
    /// Solutions of the inverse problem.
    Solve {
        #[command(subcommand)]
        cmd: SolveCmd,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Dimension, trace vector and tolerances of the N×N model.
    Info {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args)]
struct InFile {
    /// Input JSON file, or `-` for standard input.
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Subcommand)]
enum VectorCmd {
    /// Singular values and the cyclic/separating verdicts of a vector.
    Classify(InFile),
}

#[derive(Subcommand)]
enum ModularCmd {
    /// Modular operator and conjugation of a cyclic and separating vector.
    Compute {
        #[command(flatten)]
        file: InFile,
        /// Cross-check against the independent Tomita computation.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Subcommand)]
enum DeltaCmd {
    /// Split a modular operator into left and right multiplications.
    Factorize(InFile),
}

#[derive(Subcommand)]
enum ClassesCmd {
    /// List the admissibility violations of spectral data.
    Validate(InFile),
    /// Rescale data so that the weighted sum of eigenvalues is 1.
    Normalize(InFile),
    /// Data of the inverse operator.
    Dual(InFile),
    /// Induced spectrum of the modular operator.
    Spectrum(InFile),
    /// Whether two data sets are equivalent up to scale.
    Equivalent {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Whether data induces a given spectrum.
    Compatible {
        #[command(flatten)]
        file: InFile,
        #[arg(long)]
        target: PathBuf,
    },
    /// All classes of data that induce a given spectrum.
    Enumerate {
        #[arg(long)]
        target: PathBuf,
        /// `I_3`-style name, or `I_N` together with `--n`.
        #[arg(long)]
        ftype: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "max-k")]
        max_k: Option<usize>,
    },
    /// Permuted or shifted copies of II_1 data and how they compare.
    Variants {
        #[command(flatten)]
        file: InFile,
        /// New multiplicity order, e.g. `1,0`.
        #[arg(long, value_delimiter = ',', conflicts_with = "shift")]
        permutation: Option<Vec<usize>>,
        /// `to,from,epsilon`: move epsilon of multiplicity between pairs.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        shift: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum SolveCmd {
    /// Build a solution from spectral data.
    Build {
        #[arg(long)]
        u0: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a candidate unitary against every solution condition.
    Verify {
        #[arg(long)]
        u0: PathBuf,
        #[arg(long)]
        unitary: PathBuf,
    },
    /// Build the solution that inverts the modular operator.
    SecondClass {
        #[arg(long)]
        u0: PathBuf,
    },
    /// Whether two solutions are equivalent.
    Equivalent {
        #[arg(long)]
        u0: PathBuf,
        #[arg(long)]
        ua: PathBuf,
        #[arg(long)]
        ub: PathBuf,
    },
    /// Whether a solution is conjugate to the trivial one inside the algebra.
    Nf1 {
        #[arg(long)]
        u0: PathBuf,
        #[arg(long)]
        unitary: PathBuf,
    },
}

/// Why a command did not succeed.
enum Failure {
    /// The computation ran and a verification failed; the report is still
    /// printed.
    Verification(Value),
    Input(String),
    Construction(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConstructionFailed(msg) => Failure::Construction(msg),
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<Value, Failure>;

fn read_text(path: &Path) -> std::result::Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Input(format!("reading standard input: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("reading {}: {e}", path.display())))
    }
}

fn load<T: JsonForm>(path: &Path) -> std::result::Result<T, Failure> {
    T::parse(&read_text(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// A unitary given either directly or inside a certificate written by
/// `solve build` (`unitary`) or `solve second-class` (`solution.unitary`).
fn load_unitary(path: &Path) -> std::result::Result<SuperOperator, Failure> {
    let bad = |e: String| Failure::Input(format!("{}: {e}", path.display()));
    let v: Value = serde_json::from_str(&read_text(path)?).map_err(|e| bad(format!("malformed JSON: {e}")))?;
    let inner = v
        .get("unitary")
        .or_else(|| v.get("solution").and_then(|s| s.get("unitary")))
        .unwrap_or(&v);
    SuperOperator::from_json(inner).map_err(|e| bad(e.to_string()))
}

fn model_for(n: usize, tol: Tolerances) -> std::result::Result<FactorModel, Failure> {
    Ok(make_model(n, tol)?)
}

fn verdict(pass: bool, report: Value) -> Outcome {
    if pass {
        Ok(report)
    } else {
        Err(Failure::Verification(report))
    }
}

fn run(cli: &Cli) -> Outcome {
    let tol = Tolerances::new(cli.tol, cli.spec_tol)?;
    match &cli.command {
        Command::Model { cmd: ModelCmd::Info { n } } => {
            let m = model_for(*n, tol)?;
            Ok(json!({
                "n": m.n(),
                "hilbert_dim": m.hilbert_dim(),
                "trace_vector": m.trace_vector().to_json(),
                "inner_product": "<x, y> = Trace(x^† y) / N",
                "vectorization": "column stacking, vec(x)[i + N*j] = x[i, j]",
                "tol": format::tolerances_to_json(&tol),
            }))
        }
        Command::Vector { cmd: VectorCmd::Classify(f) } => {
            let u: HVector = load(&f.input)?;
            let m = model_for(u.n(), tol)?;
            Ok(format::vector_report_to_json(&classify_vector(&m, &u)?))
        }
        Command::Modular { cmd: ModularCmd::Compute { file, oracle } } => {
            let u: HVector = load(&file.input)?;
            let m = model_for(u.n(), tol)?;
            let mo = modular_from_vector(&m, &u)?;
            let ids = check_modular_identities(&m, &mo, &u)?;
            let mut out = format::modular_to_json(&mo, &ids);
            if *oracle {
                let (d, j) = tomita_oracle(&m, &u)?;
                let dd = matkit::rel_diff(&d.smat, &mo.delta.smat);
                let dj = matkit::op_norm(&(&j.cmat - &mo.j0.cmat));
                out["oracle"] = json!({ "delta_deviation": dd, "j_deviation": dj });
                return verdict(dd.max(dj) <= tol.eq_tol, out);
            }
            Ok(out)
        }
        Command::Delta { cmd: DeltaCmd::Factorize(f) } => {
            let d: SuperOperator = load(&f.input)?;
            let m = model_for(d.n(), tol)?;
            Ok(format::delta_factors_to_json(&factorize_delta(&m, &d)?))
        }
        Command::Classes { cmd } => classes(cmd, &tol),
        Command::Solve { cmd } => solve(cmd, tol),
    }
}

fn classes(cmd: &ClassesCmd, tol: &Tolerances) -> Outcome {
    match cmd {
        ClassesCmd::Validate(f) => {
            let d: SpectralData = load(&f.input)?;
            let violations = validate_data(&d, tol);
            let out = json!({
                "valid": violations.is_empty(),
                "violations": serde_json::to_value(&violations).unwrap_or(Value::Null),
            });
            verdict(violations.is_empty(), out)
        }
        ClassesCmd::Normalize(f) => {
            let d: SpectralData = load(&f.input)?;
            let (n, c) = normalize_data(&d, tol)?;
            Ok(json!({ "data": n.to_json(), "scale": c }))
        }
        ClassesCmd::Dual(f) => {
            let d: SpectralData = load(&f.input)?;
            Ok(json!({
                "data": dual_data(&d, tol)?.to_json(),
                "self_dual": is_self_dual(&d, tol)?,
            }))
        }
        ClassesCmd::Spectrum(f) => {
            let d: SpectralData = load(&f.input)?;
            Ok(induced_delta_spectrum(&d, tol)?.to_json())
        }
        ClassesCmd::Equivalent { a, b } => {
            let da: SpectralData = load(a)?;
            let db: SpectralData = load(b)?;
            Ok(json!({ "equivalent": data_equivalent(&da, &db, tol)? }))
        }
        ClassesCmd::Compatible { file, target } => {
            let d: SpectralData = load(&file.input)?;
            let t: DeltaSpectrum = load(target)?;
            Ok(json!({ "compatible": compatible_with(&d, &t, tol)? }))
        }
        ClassesCmd::Enumerate { target, ftype, n, max_k } => {
            let n = match format::parse_ftype(ftype, *n)? {
                FactorType::TypeI(n) => n,
                FactorType::TypeII1 => {
                    return Err(Failure::Input("enumeration is defined for type I_N".into()))
                }
            };
            let t: DeltaSpectrum = load(target)?;
            let bounds = EnumerationBounds {
                max_k: *max_k,
                ..Default::default()
            };
            Ok(format::enumeration_to_json(&enumerate_classes(&t, n, &bounds, tol)?))
        }
        ClassesCmd::Variants { file, permutation, shift } => {
            let d: SpectralData = load(&file.input)?;
            let spec = match (permutation, shift) {
                (Some(p), None) => VariantSpec::Permutation(p.clone()),
                (None, Some(s)) => match s.as_slice() {
                    &[to, from, epsilon] if to >= 0.0 && from >= 0.0 && to.fract() == 0.0 && from.fract() == 0.0 => {
                        VariantSpec::EpsilonShift {
                            to: to as usize,
                            from: from as usize,
                            epsilon,
                        }
                    }
                    _ => return Err(Failure::Input("--shift takes to,from,epsilon".into())),
                },
                _ => return Err(Failure::Input("give exactly one of --permutation or --shift".into())),
            };
            Ok(format::variant_to_json(&derive_variants(&d, &spec, tol)?))
        }
    }
}

fn solve(cmd: &SolveCmd, tol: Tolerances) -> Outcome {
    match cmd {
        SolveCmd::Build { u0, data, seed } => {
            let u0: HVector = load(u0)?;
            let d: SpectralData = load(data)?;
            let m = model_for(u0.n(), tol)?;
            let cert = build_solution(&m, &u0, &d, *seed)?;
            verdict(cert.pass, format::certificate_to_json(&cert))
        }
        SolveCmd::Verify { u0, unitary } => {
            let u0: HVector = load(u0)?;
            let u = load_unitary(unitary)?;
            let m = model_for(u0.n(), tol)?;
            let cert = verify_solution(&m, &u0, &u)?;
            verdict(cert.pass, format::certificate_to_json(&cert))
        }
        SolveCmd::SecondClass { u0 } => {
            let u0: HVector = load(u0)?;
            let m = model_for(u0.n(), tol)?;
            let sc = build_second_class(&m, &u0)?;
            verdict(sc.pass, format::second_class_to_json(&sc))
        }
        SolveCmd::Equivalent { u0, ua, ub } => {
            let u0: HVector = load(u0)?;
            let ua = load_unitary(ua)?;
            let ub = load_unitary(ub)?;
            let m = model_for(u0.n(), tol)?;
            let mut out = format::equivalence_to_json(&solutions_equivalent(&m, &u0, &ua, &ub)?);
            out["tol"] = format::tolerances_to_json(&tol);
            Ok(out)
        }
        SolveCmd::Nf1 { u0, unitary } => {
            let u0: HVector = load(u0)?;
            let u = load_unitary(unitary)?;
            let m = model_for(u0.n(), tol)?;
            let mut out = format::nf1_to_json(&nf1_membership(&m, &u0, &u)?);
            out["tol"] = format::tolerances_to_json(&tol);
            Ok(out)
        }
    }
}

fn diagnostic(level: &str, message: &str) {
    eprintln!("{}", json!({ "level": level, "message": message }));
}

fn print(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    // a closed pipe downstream is not an error worth reporting
    let _ = writeln!(io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            diagnostic("error", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(v) => {
            print(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Verification(v)) => {
            print(&v);
            diagnostic("fail", "verification failed");
            ExitCode::from(1)
        }
        Err(Failure::Construction(msg)) => {
            diagnostic("fail", &msg);
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            diagnostic("error", &msg);
            ExitCode::from(2)
        }
    }
}

//! `cc` — drives models → SCF → CC → analysis → homotopy with reproducible
//! JSON/CSV artifacts.

use ccdeg::cccore::{self, CCProblem, CCSolution, NewtonOptions, Sampler};
use ccdeg::cluster::TruncationScheme;
use ccdeg::fockspace::{self, OrbitalBasis};
use ccdeg::homotopy::{self, SplitSpec, TraceOptions};
use ccdeg::jsonio::{self, AmplitudeEntry, ComplexJson, MeanFieldRecord, SolutionRecord, SCHEMA};
use ccdeg::models::{self, MeanFieldResult, ModelKind, ModelSpec, ScfOptions};
use ccdeg::scalar::{field_tag, FieldTag, Scalar};
use ccdeg::{analysis, Error, C64};
use clap::{Parser, Subcommand};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(name = "cc", about = "Coupled-cluster degree/homotopy toolkit", disable_help_subcommand = true)]
struct Cli {
    /// JSON run configuration; flags override file entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Model family: hubbard | pairing | random.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long = "L", global = true)]
    l: Option<usize>,
    #[arg(long = "t-hop", global = true)]
    t_hop: Option<f64>,
    #[arg(long = "U", global = true)]
    u: Option<f64>,
    #[arg(long, global = true)]
    periodic: Option<bool>,
    #[arg(long, global = true)]
    levels: Option<usize>,
    #[arg(long, global = true)]
    gap: Option<f64>,
    #[arg(long, global = true)]
    coupling: Option<f64>,
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    scale: Option<f64>,
    /// Integral file instead of a model (format of `cc model` output).
    #[arg(long, global = true)]
    integrals: Option<PathBuf>,
    /// Particle number N.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    /// Truncation scheme: full | doubles-only | ranks:1,2,...
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Coefficient field: real | complex.
    #[arg(long, global = true)]
    field: Option<String>,
    /// Split rank ρ for homotopy commands.
    #[arg(long, global = true)]
    rho: Option<usize>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Newton residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Multistart sampling radius.
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Multistart sample count.
    #[arg(long, global = true)]
    count: Option<usize>,
    /// Input solution artifact (index/eom/trace/kp-verify/kp-exist).
    #[arg(long, global = true)]
    solution: Option<PathBuf>,
    /// Homotopy parameter λ (kp-verify).
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// FCI state index (kp-verify).
    #[arg(long, global = true)]
    state: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Build model integrals and write them with a JSON manifest.
    Model,
    /// Mean-field (RHF-like) solve.
    Scf,
    /// Dense full-CI spectrum in the N-sector.
    Fci,
    /// Newton solve of the CC equations from the reference.
    Solve,
    /// Multistart Newton over random initial amplitudes.
    Multistart,
    /// Topological index at a solved zero.
    Index,
    /// EOM spectrum (at-zero Jacobian eigenvalues) at a solved zero.
    Eom,
    /// Trace the KP homotopy path from λ=1 to λ=0 (CSV).
    Trace,
    /// Verify the KP energy identity against an FCI eigenpair.
    KpVerify,
    /// KP existence-theorem constants and conditions at an FCC zero.
    KpExist,
    /// Energy error bound between the traced λ=0 zero and the FCC zero.
    ErrorEst,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    model: Option<ModelSpec>,
    integrals: Option<PathBuf>,
    n: Option<usize>,
    scheme: Option<String>,
    field: Option<String>,
    rho: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    radius: Option<f64>,
    count: Option<usize>,
}

/// Fully resolved settings: config file overridden by flags.
struct Settings {
    model: Option<ModelSpec>,
    integrals: Option<PathBuf>,
    n: Option<usize>,
    scheme: TruncationScheme,
    field: FieldTag,
    rho: usize,
    out: PathBuf,
    seed: u64,
    newton: NewtonOptions,
    radius: f64,
    count: usize,
    solution: Option<PathBuf>,
    lambda: f64,
    state: usize,
}

fn parse_scheme(s: &str) -> Result<TruncationScheme, Error> {
    match s {
        "full" => Ok(TruncationScheme::Full),
        "doubles-only" => Ok(TruncationScheme::DoublesOnly),
        _ => {
            let Some(list) = s.strip_prefix("ranks:") else {
                return Err(Error::validation(format!(
                    "unknown scheme '{s}' (expected full | doubles-only | ranks:1,2,...)"
                )));
            };
            let mut set = std::collections::BTreeSet::new();
            for item in list.split(',') {
                let r: usize = item
                    .trim()
                    .parse()
                    .map_err(|_| Error::validation(format!("bad rank '{item}' in scheme")))?;
                set.insert(r);
            }
            if set.is_empty() {
                return Err(Error::validation("empty rank set"));
            }
            Ok(TruncationScheme::Ranks(set))
        }
    }
}

fn parse_field(s: &str) -> Result<FieldTag, Error> {
    match s {
        "real" => Ok(FieldTag::Real),
        "complex" => Ok(FieldTag::Complex),
        _ => Err(Error::validation(format!("unknown field '{s}' (expected real | complex)"))),
    }
}

fn resolve(cli: &Cli) -> Result<Settings, Error> {
    let cfg: RunConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::validation(format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Parse { line: e.line(), msg: format!("config {}: {e}", path.display()) })?
        }
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(cfg.seed).unwrap_or(1);
    // Model: an explicit --model rebuilds the spec from flags; otherwise the
    // config model is taken with per-field flag overrides.
    let model = match cli.model.as_deref() {
        Some("hubbard") => Some(ModelSpec {
            kind: ModelKind::HubbardChain {
                l: cli.l.unwrap_or(2),
                t_hop: cli.t_hop.unwrap_or(1.0),
                u: cli.u.unwrap_or(1.0),
                periodic: cli.periodic.unwrap_or(false),
            },
            n: cli.n.or(cfg.n).unwrap_or(2),
        }),
        Some("pairing") => Some(ModelSpec {
            kind: ModelKind::Pairing {
                levels: cli.levels.unwrap_or(3),
                gap: cli.gap.unwrap_or(1.0),
                coupling: cli.coupling.unwrap_or(0.5),
            },
            n: cli.n.or(cfg.n).unwrap_or(2),
        }),
        Some("random") => Some(ModelSpec {
            kind: ModelKind::Random { k: cli.k.unwrap_or(4), seed, scale: cli.scale.unwrap_or(1.0) },
            n: cli.n.or(cfg.n).unwrap_or(2),
        }),
        Some(other) => {
            return Err(Error::validation(format!(
                "unknown model '{other}' (expected hubbard | pairing | random)"
            )))
        }
        None => cfg.model.clone().map(|mut spec| {
            match &mut spec.kind {
                ModelKind::HubbardChain { l, t_hop, u, periodic } => {
                    if let Some(v) = cli.l {
                        *l = v;
                    }
                    if let Some(v) = cli.t_hop {
                        *t_hop = v;
                    }
                    if let Some(v) = cli.u {
                        *u = v;
                    }
                    if let Some(v) = cli.periodic {
                        *periodic = v;
                    }
                }
                ModelKind::Pairing { levels, gap, coupling } => {
                    if let Some(v) = cli.levels {
                        *levels = v;
                    }
                    if let Some(v) = cli.gap {
                        *gap = v;
                    }
                    if let Some(v) = cli.coupling {
                        *coupling = v;
                    }
                }
                ModelKind::Random { k, scale, .. } => {
                    if let Some(v) = cli.k {
                        *k = v;
                    }
                    if let Some(v) = cli.scale {
                        *scale = v;
                    }
                }
            }
            if let Some(v) = cli.n {
                spec.n = v;
            }
            spec
        }),
    };
    let scheme = match cli.scheme.as_deref().or(cfg.scheme.as_deref()) {
        Some(s) => parse_scheme(s)?,
        None => TruncationScheme::Full,
    };
    let field = match cli.field.as_deref().or(cfg.field.as_deref()) {
        Some(s) => parse_field(s)?,
        None => FieldTag::Real,
    };
    let mut newton = NewtonOptions::default();
    if let Some(t) = cli.tol.or(cfg.tol) {
        newton.tol = t;
    }
    if let Some(m) = cli.max_iter.or(cfg.max_iter) {
        newton.max_iter = m;
    }
    Ok(Settings {
        model,
        integrals: cli.integrals.clone().or(cfg.integrals),
        n: cli.n.or(cfg.n),
        scheme,
        field,
        rho: cli.rho.or(cfg.rho).unwrap_or(1),
        out: cli.out.clone().or(cfg.out).unwrap_or_else(|| PathBuf::from(".")),
        seed,
        newton,
        radius: cli.radius.or(cfg.radius).unwrap_or(2.0),
        count: cli.count.or(cfg.count).unwrap_or(64),
        solution: cli.solution.clone(),
        lambda: cli.lambda.unwrap_or(1.0),
        state: cli.state.unwrap_or(0),
    })
}

impl Settings {
    fn build_problem(&self) -> Result<(CCProblem, Option<MeanFieldResult>), Error> {
        if let Some(path) = &self.integrals {
            if !path.exists() {
                return Err(Error::validation(format!("integrals file {} not found", path.display())));
            }
            let ints = models::load_integrals(path)?;
            let n = self
                .n
                .ok_or_else(|| Error::validation("particle number N required with --integrals"))?;
            let basis = OrbitalBasis::new(ints.k, n)?;
            let p = CCProblem::from_integrals(ints, basis, self.scheme.clone())?;
            Ok((p, None))
        } else if let Some(spec) = &self.model {
            let (p, mf) = CCProblem::from_model(spec, self.scheme.clone(), &ScfOptions::default())?;
            Ok((p, Some(mf)))
        } else {
            Err(Error::validation("no model given (use --model/--config or --integrals)"))
        }
    }

    fn full_problem(&self) -> Result<(CCProblem, Option<MeanFieldResult>), Error> {
        let full = Settings { scheme: TruncationScheme::Full, ..self.clone_shallow() };
        full.build_problem()
    }

    fn clone_shallow(&self) -> Settings {
        Settings {
            model: self.model.clone(),
            integrals: self.integrals.clone(),
            n: self.n,
            scheme: self.scheme.clone(),
            field: self.field,
            rho: self.rho,
            out: self.out.clone(),
            seed: self.seed,
            newton: self.newton.clone(),
            radius: self.radius,
            count: self.count,
            solution: self.solution.clone(),
            lambda: self.lambda,
            state: self.state,
        }
    }

    fn write_artifact(&self, name: &str, contents: &str) -> Result<PathBuf, Error> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| Error::validation(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| Error::validation(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), Error> {
        let text = jsonio::to_json_string(value) + "\n";
        self.write_artifact(name, &text)?;
        print!("{text}");
        Ok(())
    }
}

#[derive(Deserialize)]
struct ComplexIn {
    re: f64,
    #[allow(dead_code)]
    im: f64,
}

#[derive(Deserialize)]
struct SolutionFile {
    #[allow(dead_code)]
    schema: String,
    scheme: String,
    field: FieldTag,
    t: Vec<AmplitudeEntry>,
    e_cc: ComplexIn,
    converged: bool,
    iterations: usize,
}

fn read_solution<S: Scalar>(p: &CCProblem, path: &Path) -> Result<CCSolution<S>, Error> {
    if !path.exists() {
        return Err(Error::validation(format!("solution file {} not found", path.display())));
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    let file: SolutionFile =
        serde_json::from_str(&text)
            .map_err(|e| Error::Parse { line: e.line(), msg: format!("{}: {e}", path.display()) })?;
    if file.scheme != p.space.scheme.to_string() {
        return Err(Error::validation(format!(
            "solution scheme '{}' does not match problem scheme '{}'",
            file.scheme, p.space.scheme
        )));
    }
    if file.field != field_tag::<S>() {
        return Err(Error::validation(format!(
            "solution field '{}' does not match requested field '{}'",
            file.field,
            field_tag::<S>()
        )));
    }
    if file.t.len() != p.dim() {
        return Err(Error::validation(format!(
            "solution has {} amplitudes, problem has {}",
            file.t.len(),
            p.dim()
        )));
    }
    let mut t = DVector::<S>::zeros(p.dim());
    for (slot, entry) in file.t.iter().enumerate() {
        let x = p.space.excitation(slot);
        let i1: Vec<usize> = x.i.iter().map(|&q| q + 1).collect();
        let a1: Vec<usize> = x.a.iter().map(|&q| q + 1).collect();
        if entry.i != i1 || entry.a != a1 {
            return Err(Error::validation(format!("amplitude slot {slot} labels do not match problem")));
        }
        t[slot] = S::from_re_im(entry.re, entry.im);
    }
    // Residual recomputed rather than trusted from the file.
    let r = cccore::cc_residual(p, &t);
    Ok(CCSolution {
        e_cc: S::from_re(file.e_cc.re),
        residual_inf: ccdeg::linalg::inf_norm(&r),
        t,
        converged: file.converged,
        iterations: file.iterations,
        singular_jacobian_seen: false,
        field: field_tag::<S>(),
    })
}

/// Input solution if given, otherwise a Newton solve from the reference.
fn obtain_solution<S: Scalar>(s: &Settings, p: &CCProblem) -> Result<CCSolution<S>, Error> {
    if let Some(path) = &s.solution {
        return read_solution(p, path);
    }
    let t0 = DVector::<S>::zeros(p.dim());
    let sol = cccore::newton_solve(p, &t0, &s.newton);
    if !sol.converged {
        return Err(Error::numerical(format!(
            "Newton did not converge in {} iterations (residual {:.3e})",
            sol.iterations, sol.residual_inf
        )));
    }
    Ok(sol)
}

#[derive(Serialize)]
struct ModelManifest<'a> {
    schema: &'static str,
    model: &'a ModelSpec,
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "N")]
    n: usize,
    integrals: String,
}

#[derive(Serialize)]
struct FciArtifact {
    schema: &'static str,
    dim: usize,
    energies: Vec<f64>,
    /// |⟨Φ0, Ψ_j⟩| per state, the intermediate-normalizability diagnostic.
    reference_overlaps: Vec<f64>,
}

#[derive(Serialize)]
struct MultistartArtifact {
    schema: &'static str,
    seed: u64,
    radius: f64,
    count: usize,
    solutions: Vec<SolutionRecord>,
}

#[derive(Serialize)]
struct KpVerifyArtifact {
    schema: &'static str,
    state: usize,
    lambda: f64,
    rho: usize,
    e_fci: f64,
    e_kp: ComplexJson,
    overlap: ComplexJson,
    lhs: ComplexJson,
    rhs: ComplexJson,
    residual: f64,
    psi_in_low_space: bool,
}

#[derive(Serialize)]
struct WrappedReport<T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    report: T,
}

fn cmd_model(s: &Settings) -> Result<(), Error> {
    let spec = s
        .model
        .clone()
        .ok_or_else(|| Error::validation("cc model needs a model spec (--model or --config)"))?;
    let ints = models::build_model(&spec)?;
    std::fs::create_dir_all(&s.out)
        .map_err(|e| Error::validation(format!("cannot create {}: {e}", s.out.display())))?;
    let ints_path = s.out.join("integrals.txt");
    models::save_integrals(&ints, &ints_path)
        .map_err(|e| Error::validation(format!("cannot write {}: {e}", ints_path.display())))?;
    let manifest = ModelManifest {
        schema: SCHEMA,
        model: &spec,
        k: ints.k,
        n: spec.n,
        integrals: "integrals.txt".to_string(),
    };
    s.write_json("model.json", &manifest)
}

fn cmd_scf(s: &Settings) -> Result<(), Error> {
    let (_, mf) = s.build_problem()?;
    let mf = mf.ok_or_else(|| Error::validation("scf needs a model (integral files skip SCF)"))?;
    if !mf.converged {
        return Err(Error::numerical("SCF did not converge"));
    }
    s.write_json("scf.json", &MeanFieldRecord::from(&mf))
}

fn cmd_fci(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.build_problem()?;
    let eigs = fockspace::fci_solve(&p.h)?;
    let art = FciArtifact {
        schema: SCHEMA,
        dim: p.space.sector_dim(),
        energies: eigs.iter().map(|(e, _)| *e).collect(),
        reference_overlaps: eigs.iter().map(|(_, v)| v[0].abs()).collect(),
    };
    s.write_json("fci.json", &art)
}

fn cmd_solve<S: Scalar>(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.build_problem()?;
    let sol = obtain_solution::<S>(s, &p)?;
    s.write_json("solution.json", &SolutionRecord::new(&p.space, &sol))
}

fn cmd_multistart<S: Scalar>(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.build_problem()?;
    let sampler = Sampler { seed: s.seed, radius: s.radius, count: s.count };
    let sols = cccore::multistart_solve::<S>(&p, &sampler, &s.newton);
    let art = MultistartArtifact {
        schema: SCHEMA,
        seed: s.seed,
        radius: s.radius,
        count: s.count,
        solutions: sols.iter().map(|sol| SolutionRecord::new(&p.space, sol)).collect(),
    };
    s.write_json("multistart.json", &art)
}

fn cmd_index<S: Scalar>(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.build_problem()?;
    let sol = obtain_solution::<S>(s, &p)?;
    let rep = analysis::index_nondegenerate(&p, &sol)?;
    s.write_json("index.json", &WrappedReport { schema: SCHEMA, report: rep })
}

fn cmd_eom<S: Scalar>(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.build_problem()?;
    let sol = obtain_solution::<S>(s, &p)?;
    let rep = analysis::eom_spectrum(&p, &sol)?;
    s.write_json("eom.json", &WrappedReport { schema: SCHEMA, report: rep })
}

fn trace<S: Scalar>(s: &Settings) -> Result<(CCProblem, SplitSpec, homotopy::Path<S>), Error> {
    let (p, _) = s.full_problem()?;
    let split = SplitSpec::new(&p.space, s.rho)?;
    let start = obtain_solution::<S>(s, &p)?;
    let path = homotopy::trace_path(&p, &split, &start, &TraceOptions::default())?;
    Ok((p, split, path))
}

fn path_csv<S: Scalar>(path: &homotopy::Path<S>) -> String {
    let complex = S::IS_COMPLEX;
    let d = path.points.first().map_or(0, |pt| pt.t.len());
    let mut head = vec!["lambda".to_string(), "residual_inf".to_string()];
    if complex {
        head.push("E_KP_re".into());
        head.push("E_KP_im".into());
    } else {
        head.push("E_KP".into());
    }
    head.push("sgn_det".into());
    head.push("step".into());
    for i in 0..d {
        if complex {
            head.push(format!("t_{i}_re"));
            head.push(format!("t_{i}_im"));
        } else {
            head.push(format!("t_{i}"));
        }
    }
    let mut out = head.join(",") + "\n";
    for pt in &path.points {
        let mut row = vec![jsonio::format_f64(pt.lambda), jsonio::format_f64(pt.residual_inf)];
        if complex {
            row.push(jsonio::format_f64(pt.e_kp.re_part()));
            row.push(jsonio::format_f64(pt.e_kp.im_part()));
        } else {
            row.push(jsonio::format_f64(pt.e_kp.re_part()));
        }
        row.push(pt.sgn_det.to_string());
        row.push(jsonio::format_f64(pt.step));
        for i in 0..d {
            row.push(jsonio::format_f64(pt.t[i].re_part()));
            if complex {
                row.push(jsonio::format_f64(pt.t[i].im_part()));
            }
        }
        out += &(row.join(",") + "\n");
    }
    out
}

fn cmd_trace<S: Scalar>(s: &Settings) -> Result<(), Error> {
    let (_, _, path) = trace::<S>(s)?;
    let csv = path_csv(&path);
    let written = s.write_artifact("trace.csv", &csv)?;
    println!("{}", written.display());
    if let Some(b) = &path.breakdown {
        return Err(Error::numerical(format!(
            "path breakdown at λ = {:.6} (residual {:.3e}, condition {:.3e}); partial trace written",
            b.lambda, b.residual_inf, b.condition
        )));
    }
    Ok(())
}

fn cmd_kp_verify<S: Scalar>(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.full_problem()?;
    let split = SplitSpec::new(&p.space, s.rho)?;
    let sol = obtain_solution::<S>(s, &p)?;
    let eigs = fockspace::fci_solve(&p.h)?;
    let (energy, psi) = eigs
        .get(s.state)
        .ok_or_else(|| Error::validation(format!("state {} out of range (dim {})", s.state, eigs.len())))?;
    let rep = homotopy::kp_verify(&p, &split, psi, *energy, &sol.t, s.lambda)?;
    let art = KpVerifyArtifact {
        schema: SCHEMA,
        state: s.state,
        lambda: s.lambda,
        rho: s.rho,
        e_fci: *energy,
        e_kp: rep.e_kp.to_c64().into(),
        overlap: rep.overlap.to_c64().into(),
        lhs: rep.lhs.to_c64().into(),
        rhs: rep.rhs.to_c64().into(),
        residual: rep.residual,
        psi_in_low_space: rep.psi_in_low_space,
    };
    s.write_json("kp_verify.json", &art)
}

fn cmd_kp_exist(s: &Settings) -> Result<(), Error> {
    let (p, _) = s.full_problem()?;
    let split = SplitSpec::new(&p.space, s.rho)?;
    let sol = obtain_solution::<f64>(s, &p)?;
    let rep = homotopy::kp_existence_report(&p, &split, &sol, &homotopy::KpExistOptions::default())?;
    s.write_json("kp_exist.json", &WrappedReport { schema: SCHEMA, report: rep })
}

fn cmd_error_est(s: &Settings) -> Result<(), Error> {
    let (p, split, path) = trace::<f64>(s)?;
    if !path.completed {
        return Err(Error::numerical("path did not reach λ = 0; no endpoint for the estimate"));
    }
    let t_kp = &path.points.last().expect("completed path has points").t;
    let t_fcc = &path.points.first().expect("path starts at λ = 1").t;
    let rep = homotopy::energy_error_estimate(&p, &split, t_kp, t_fcc, &homotopy::ErrorEstimateOptions::default())?;
    s.write_json("error_est.json", &WrappedReport { schema: SCHEMA, report: rep })
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    let s = resolve(cli)?;
    let complex = s.field == FieldTag::Complex;
    match cli.cmd {
        Cmd::Model => cmd_model(&s),
        Cmd::Scf => cmd_scf(&s),
        Cmd::Fci => cmd_fci(&s),
        Cmd::Solve => {
            if complex {
                cmd_solve::<C64>(&s)
            } else {
                cmd_solve::<f64>(&s)
            }
        }
        Cmd::Multistart => {
            if complex {
                cmd_multistart::<C64>(&s)
            } else {
                cmd_multistart::<f64>(&s)
            }
        }
        Cmd::Index => {
            if complex {
                cmd_index::<C64>(&s)
            } else {
                cmd_index::<f64>(&s)
            }
        }
        Cmd::Eom => {
            if complex {
                cmd_eom::<C64>(&s)
            } else {
                cmd_eom::<f64>(&s)
            }
        }
        Cmd::Trace => {
            if complex {
                cmd_trace::<C64>(&s)
            } else {
                cmd_trace::<f64>(&s)
            }
        }
        Cmd::KpVerify => {
            if complex {
                cmd_kp_verify::<C64>(&s)
            } else {
                cmd_kp_verify::<f64>(&s)
            }
        }
        Cmd::KpExist => cmd_kp_exist(&s),
        Cmd::ErrorEst => cmd_error_est(&s),
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    schema: &'static str,
    kind: &'a str,
    error: String,
}

fn main() {
    if let Ok(v) = std::env::var("CC_DEGREE_THREADS") {
        if let Ok(nthreads) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(nthreads.max(1)).build_global();
        }
    }
    let cli = Cli::parse();
    if let Err(e) = dispatch(&cli) {
        let (kind, code) = match &e {
            Error::Validation(_) | Error::Parse { .. } => ("validation", 2),
            Error::Numerical(_) => ("numerical", 3),
        };
        let line = ErrorLine { schema: SCHEMA, kind, error: e.to_string() };
        eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
        std::process::exit(code);
    }
}

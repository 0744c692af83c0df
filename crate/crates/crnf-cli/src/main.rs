use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crnf::frames::{levi_data, normalize_with_frame};
use crnf::io::{self, FrameDoc, ParamsDoc, ResultDoc, StructureDoc};
use crnf::normalize::{normalize, FreeParameters, Mode, NormalFormResult, Options};
use crnf::structure::AlmostCR;
use crnf::transform::normalize_first_order;
use crnf::{CrError, Rational, Scalar};

const DEFAULT_MAX_WEIGHT: u32 = 16;

#[derive(Parser)]
#[command(name = "crnf", version, about = "Exact normal forms of almost CR structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrability, Levi signature and strong nondegeneracy of a structure.
    Check(CheckArgs),
    /// Partial normal form (any n, d).
    Partial(RunArgs),
    /// Intrinsic normal form (d = 1).
    Intrinsic(RunArgs),
    /// Extrinsic normal form: quasi CR embedding in Chern–Moser form (d = 1).
    Extrinsic(RunArgs),
    /// Quasi CR embedding with free parameters (any n, d).
    Embed(RunArgs),
    /// Any pipeline, selected with --mode.
    Normalize {
        #[arg(long, value_parser = parse_mode)]
        mode: Mode,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Exact coefficient diff of the normal forms in two result documents.
    Compare(CompareArgs),
}

#[derive(Args)]
struct Common {
    /// Write the JSON document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    pretty: bool,
    /// Refuse truncation weights above this.
    #[arg(long, env = "CRNF_MAX_WEIGHT", default_value_t = DEFAULT_MAX_WEIGHT)]
    max_weight: u32,
}

#[derive(Args)]
struct CheckArgs {
    structure: PathBuf,
    /// Override the truncation weight of the structure document.
    #[arg(long)]
    weight: Option<u32>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunArgs {
    structure: PathBuf,
    #[arg(long)]
    weight: Option<u32>,
    /// g_{u²}(0) for the full modes; implies the standard frame.
    #[arg(long)]
    r: Option<String>,
    /// Extended adapted frame document (full modes).
    #[arg(long)]
    frame: Option<PathBuf>,
    /// Free parameters document {f0, g0, r}.
    #[arg(long)]
    params: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CompareArgs {
    left: PathBuf,
    right: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    Mode::parse(s).ok_or_else(|| format!("unknown mode {s:?} (partial, intrinsic, extrinsic, embed)"))
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<CrError> for Failure {
    fn from(e: CrError) -> Self {
        let code = match &e {
            CrError::LeviDegenerate => 2,
            CrError::Parse(_) => 3,
            CrError::NotStronglyNondegenerate { .. } => 4,
            CrError::Shape(_)
            | CrError::Precondition(_)
            | CrError::Unsupported(_)
            | CrError::NotReal(_)
            | CrError::UnknownVariable(_)
            | CrError::Composition(_)
            | CrError::Reversion(_) => 5,
            CrError::Singular(_) | CrError::Internal(_) => 1,
        };
        let msg = match &e {
            CrError::NotStronglyNondegenerate { witness, .. } => {
                let w: Vec<String> = witness.iter().map(|(re, im)| format!("{re} + {im} i")).collect();
                format!("{e}; kernel witness ({})", w.join(", "))
            }
            _ => e.to_string(),
        };
        Failure { code, err: anyhow!(msg) }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

fn precondition(msg: impl Into<String>) -> Failure {
    Failure { code: 5, err: anyhow!(msg.into()) }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|err| Failure { code: 3, err })
}

fn load<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    io::from_json(&text, &path.display().to_string()).map_err(Failure::from)
}

fn emit(common: &Common, text: &str) -> Result<(), Failure> {
    match &common.out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn load_structure(path: &Path, weight: Option<u32>, common: &Common) -> Result<AlmostCR<Rational>, Failure> {
    let mut doc: StructureDoc = load(path)?;
    if let Some(w) = weight {
        doc.w = w;
    }
    if doc.w > common.max_weight {
        return Err(precondition(format!(
            "weight {} exceeds the cap {} (set CRNF_MAX_WEIGHT or --max-weight to raise it)",
            doc.w, common.max_weight
        )));
    }
    io::structure_from_doc(&doc).map_err(|e| {
        let f = Failure::from(e);
        Failure { err: f.err.context(format!("in {}", path.display())), code: f.code }
    })
}

fn cmd_check(a: &CheckArgs) -> Result<u8, Failure> {
    let s = load_structure(&a.structure, a.weight, &a.common)?;
    let integrable = s.is_integrable();
    let mut report = serde_json::Map::new();
    report.insert("n".into(), json!(s.n()));
    report.insert("d".into(), json!(s.d()));
    report.insert("W".into(), json!(s.weight()));
    report.insert("integrable".into(), json!(integrable));
    let mut code = 0;
    if s.d() == 1 {
        let levi = levi_data(&s)?;
        report.insert("levi_signature".into(), json!(levi.signature));
        report.insert("levi_nondegenerate".into(), json!(levi.is_nondegenerate()));
        let (_, s1) = normalize_first_order(&s)?;
        let strong = s1.is_strongly_nondegenerate()?;
        report.insert("strongly_nondegenerate".into(), json!(strong.strong));
        if let Some(w) = &strong.kernel_witness {
            let w: Vec<_> = w.iter().map(io::complex_to_doc).collect();
            report.insert("kernel_witness".into(), serde_json::to_value(w).expect("serializable"));
        }
        if !levi.is_nondegenerate() {
            code = 2;
        }
    }
    let text = if a.common.pretty {
        serde_json::to_string_pretty(&report)
    } else {
        serde_json::to_string(&report)
    }
    .expect("serializable");
    emit(&a.common, &text)?;
    if code == 2 {
        eprintln!("levi_degenerate: the Levi form at 0 is degenerate");
    }
    Ok(code)
}

fn residual_table(res: &NormalFormResult<Rational>) -> String {
    let mut rows: Vec<(String, Vec<u32>, usize)> = Vec::new();
    for e in &res.residual_report {
        match rows.iter_mut().find(|r| r.0 == e.condition) {
            Some(r) => {
                r.1.push(e.weight);
                r.2 += usize::from(!e.zero);
            }
            None => rows.push((e.condition.clone(), vec![e.weight], usize::from(!e.zero))),
        }
    }
    let mut out = format!("{:<22} {:>9} {:>8}\n", "condition", "weights", "nonzero");
    for (c, ws, bad) in rows {
        let range = format!("{}..{}", ws.iter().min().unwrap(), ws.iter().max().unwrap());
        out.push_str(&format!("{c:<22} {range:>9} {bad:>8}\n"));
    }
    out
}

fn cmd_run(mode: Mode, a: &RunArgs) -> Result<u8, Failure> {
    let s = load_structure(&a.structure, a.weight, &a.common)?;
    let vars = s.vars();
    let mut params: FreeParameters<Rational> = match &a.params {
        Some(p) => {
            let doc: ParamsDoc = load(p)?;
            io::params_from_doc(&doc, vars)?
        }
        None => FreeParameters::zero(vars),
    };
    let r_given = a.r.is_some() || a.params.is_some();
    if let Some(r) = &a.r {
        params.r = Rational::parse_frac(r).ok_or_else(|| Failure::from(CrError::Parse(format!("--r: not a rational: {r:?}"))))?;
    }
    if mode.is_full() && s.weight() < 4 {
        return Err(precondition(format!("{mode} normal form needs W >= 4, got {}", s.weight())));
    }
    let res = if let Some(fp) = &a.frame {
        if !mode.is_full() {
            return Err(precondition("--frame applies to the intrinsic and extrinsic modes only"));
        }
        if r_given {
            return Err(precondition("--frame determines r; do not also pass --r or --params"));
        }
        let doc: FrameDoc = load(fp)?;
        let ef = io::frame_from_doc(&doc, s.n(), s.d())?;
        normalize_with_frame(&s, &ef, mode)?
    } else {
        if mode.is_full() && !r_given {
            return Err(precondition(format!("{mode} needs --frame or an explicit --r")));
        }
        normalize(&s, mode, &params, &Options::default())?
    };
    let text = io::to_json(&io::result_to_doc(&res), a.common.pretty);
    emit(&a.common, &text)?;
    eprint!("{}", residual_table(&res));
    if res.all_zero() {
        Ok(0)
    } else {
        eprintln!("some normalization conditions are not met");
        Ok(1)
    }
}

fn cmd_compare(a: &CompareArgs) -> Result<u8, Failure> {
    let left: ResultDoc = load(&a.left)?;
    let right: ResultDoc = load(&a.right)?;
    let left: NormalFormResult<Rational> = io::result_from_doc(&left)?;
    let right: NormalFormResult<Rational> = io::result_from_doc(&right)?;
    let diff = io::compare_results(&left, &right)?;
    emit(&a.common, &io::to_json(&diff, a.common.pretty))?;
    if diff.identical {
        Ok(0)
    } else {
        eprintln!("{} coefficients differ up to weight {}", diff.differences.len(), diff.weight);
        Ok(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = match &cli.command {
        Command::Check(a) => cmd_check(a),
        Command::Partial(a) => cmd_run(Mode::Partial, a),
        Command::Intrinsic(a) => cmd_run(Mode::Intrinsic, a),
        Command::Extrinsic(a) => cmd_run(Mode::Extrinsic, a),
        Command::Embed(a) => cmd_run(Mode::Quasi, a),
        Command::Normalize { mode, run } => cmd_run(*mode, run),
        Command::Compare(a) => cmd_compare(a),
    };
    match out {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

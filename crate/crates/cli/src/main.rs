//! `jumpform`: verification runs on finite jump models, emitted as JSON.
//!
//! Exit codes: 0 success, 1 residual failure, 2 hypothesis violated,
//! 3 usage or input error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod source;
mod verdict;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jumpform::hardy_stein::{finite_horizon_check, hardy_stein_verify};
use jumpform::montecarlo::{Start, Z_BAND};
use jumpform::{
    comparability_scan, decompose_model, default_schedule, detailed_balance_check, empirical_pt_check,
    halfpower_inclusion_check, parse_model_document, pform_report, simulate_paths, simulate_stationary, validate_model,
    Error, ModelDocument, QuadratureConfig, StateFunction,
};
use serde_json::{json, Value};

use source::FunctionSource;
use verdict::{verdict_of, EXIT_RESIDUAL, EXIT_USAGE};

#[derive(Parser)]
#[command(
    name = "jumpform",
    version,
    about = "Hardy–Stein verification lab for finite jump models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check ||f||_p^p = p ∫ E_p[P_t f] dt for each p.
    Verify(VerifyArgs),
    /// Compare the three routes to the p-form E_p[u].
    Pform(PformArgs),
    /// Scan the comparability ratio for the optimal constants c_p, C_p.
    BregmanConstants(BregmanArgs),
    /// Tabulate max |K_t/t - J| off the diagonal against t.
    VagueLimit(VagueArgs),
    /// Simulate paths and compare with the spectral semigroup.
    Simulate(SimulateArgs),
    /// Recompute the exit status of a saved document.
    Verdict(VerdictArgs),
}

#[derive(Args)]
struct Output {
    /// Write the document here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include per-panel quadrature tables.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct ModelInput {
    /// Model-spec file (TOML).
    #[arg(long)]
    model: PathBuf,
    /// spec | random-zero-mean | random | indicator:K | constant[:c] | <path>
    #[arg(long = "f")]
    function: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    input: ModelInput,
    #[arg(long = "p", value_delimiter = ',', required = true)]
    p: Vec<f64>,
    /// Largest acceptable rel_residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Truncate once the tail bound is below this fraction of lhs.
    #[arg(long, default_value_t = 1e-10)]
    tail_tol: f64,
    /// Check the finite-horizon identity on [0, T] instead.
    #[arg(long)]
    horizon: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct PformArgs {
    #[command(flatten)]
    input: ModelInput,
    #[arg(long = "p", value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct BregmanArgs {
    #[arg(long = "p", value_delimiter = ',', required = true)]
    p: Vec<f64>,
    #[arg(long, default_value_t = 1e-8)]
    x_min: f64,
    #[arg(long, default_value_t = 1e8)]
    x_max: f64,
    #[arg(long, default_value_t = 4001)]
    nodes: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VagueArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "t", value_delimiter = ',', default_value = "1e-1,1e-2,1e-3,1e-4")]
    t: Vec<f64>,
    /// Residual at the smallest t must be below tol · max J.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: ModelInput,
    /// Start state, or `stationary`.
    #[arg(long, default_value = "0")]
    x0: String,
    #[arg(long = "t", default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct VerdictArgs {
    /// A document previously written by this tool.
    #[arg(long)]
    report: PathBuf,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } | Error::PanelBudget(_) => EXIT_RESIDUAL,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn load_model(path: &PathBuf) -> Result<ModelDocument, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let doc = parse_model_document(&text)?;
    let diag = validate_model(&doc.model);
    if !diag.violations.is_empty() {
        return Err(Error::InvalidModel(diag.violations).into());
    }
    Ok(doc)
}

fn resolve_function(
    input: &ModelInput,
    doc: &ModelDocument,
    fallback: &str,
) -> Result<(String, StateFunction), Failure> {
    let text = match (&input.function, &doc.function) {
        (Some(s), _) => s.clone(),
        (None, Some(_)) => "spec".to_string(),
        (None, None) => fallback.to_string(),
    };
    let source = FunctionSource::parse(&text).map_err(usage)?;
    let f = source
        .resolve(&doc.model, doc.function.as_deref(), input.seed)
        .map_err(usage)?;
    Ok((source.label(), f))
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("documents serialize")
}

fn cmd_verify(a: &VerifyArgs) -> Result<Value, Failure> {
    let doc = load_model(&a.input.model)?;
    let (label, f) = resolve_function(&a.input, &doc, "random-zero-mean")?;
    let (_, spec) = decompose_model(&doc.model)?;
    let cfg = QuadratureConfig {
        tail_tol: a.tail_tol,
        ..Default::default()
    };
    let mut reports = Vec::new();
    for &p in &a.p {
        let r = match a.horizon {
            Some(t) => finite_horizon_check(&spec, &doc.model, p, &f, t, &cfg, a.output.verbose)?,
            None => hardy_stein_verify(&spec, &doc.model, p, &f, &cfg, a.output.verbose)?,
        };
        reports.push(to_value(&r));
    }
    Ok(json!({
        "command": "verify",
        "model": a.input.model.display().to_string(),
        "n": doc.model.n(),
        "function_source": label,
        "f": f,
        "tolerance": a.tol,
        "tail_tolerance": a.tail_tol,
        "horizon": a.horizon,
        "spectrum": spec.summary(),
        "reports": reports,
    }))
}

fn cmd_pform(a: &PformArgs) -> Result<Value, Failure> {
    let doc = load_model(&a.input.model)?;
    let (label, u) = resolve_function(&a.input, &doc, "random")?;
    let (gen, spec) = decompose_model(&doc.model)?;
    let schedule = default_schedule();
    let mut reports = Vec::new();
    let mut halfpower = Vec::new();
    for &p in &a.p {
        reports.push(to_value(&pform_report(&doc.model, &gen, &spec, p, &u, &schedule)?));
        let scan = jumpform::default_comparability_scan(p)?;
        halfpower.push(to_value(&halfpower_inclusion_check(&doc.model, &spec, p, &u, &scan)?));
    }
    Ok(json!({
        "command": "pform",
        "model": a.input.model.display().to_string(),
        "n": doc.model.n(),
        "function_source": label,
        "u": u,
        "reports": reports,
        "halfpower": halfpower,
    }))
}

fn cmd_bregman(a: &BregmanArgs) -> Result<Value, Failure> {
    let scans =
        a.p.iter()
            .map(|&p| comparability_scan(p, a.x_min, a.x_max, a.nodes).map(|s| to_value(&s)))
            .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({ "command": "bregman-constants", "scans": scans }))
}

fn cmd_vague(a: &VagueArgs) -> Result<Value, Failure> {
    if let Some(t) = a.t.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(usage(format!("t must be positive, got {t}")));
    }
    let doc = load_model(&a.model)?;
    let (_, spec) = decompose_model(&doc.model)?;
    let mut rows = Vec::new();
    for &t in &a.t {
        let r = spec.vague_limit_residual(&doc.model, t)?;
        let half = spec.vague_limit_residual(&doc.model, 0.5 * t)?;
        let ratio = if half > 0.0 { Some(r / half) } else { None };
        rows.push(json!({ "t": t, "residual": r, "residual_half": half, "halving_ratio": ratio }));
    }
    Ok(json!({
        "command": "vague-limit",
        "model": a.model.display().to_string(),
        "max_jump": doc.model.max_jump(),
        "tolerance": a.tol,
        "rows": rows,
    }))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Value, Failure> {
    if a.paths < jumpform::montecarlo::MIN_PATHS_FOR_STATISTICS {
        return Err(usage(format!(
            "--paths must be at least {}",
            jumpform::montecarlo::MIN_PATHS_FOR_STATISTICS
        )));
    }
    let doc = load_model(&a.input.model)?;
    let (label, u) = resolve_function(&a.input, &doc, "random")?;
    let (_, spec) = decompose_model(&doc.model)?;
    let ens = if a.x0 == "stationary" {
        simulate_stationary(&doc.model, a.t, a.paths, a.input.seed)?
    } else {
        let x0 =
            a.x0.parse()
                .map_err(|_| usage(format!("--x0 must be a state index or `stationary`, got `{}`", a.x0)))?;
        simulate_paths(&doc.model, x0, a.t, a.paths, a.input.seed)?
    };
    let pt = empirical_pt_check(&ens, &spec, &u)?;
    let balance = match ens.start {
        Start::Stationary => Some(to_value(&detailed_balance_check(&ens)?)),
        Start::State(_) => None,
    };
    Ok(json!({
        "command": "simulate",
        "model": a.input.model.display().to_string(),
        "function_source": label,
        "u": u,
        "z_band": Z_BAND,
        "ensemble": ens,
        "pt_check": pt,
        "detailed_balance": balance,
    }))
}

fn emit(doc: &Value, out: Option<&PathBuf>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(doc).expect("documents serialize");
    match out {
        Some(path) => fs::write(path, text + "\n").map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            match writeln!(stdout, "{text}") {
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(usage(format!("cannot write output: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let (name, result, out) = match &cli.command {
        Command::Verify(a) => ("verify", cmd_verify(a), a.output.out.as_ref()),
        Command::Pform(a) => ("pform", cmd_pform(a), a.output.out.as_ref()),
        Command::BregmanConstants(a) => ("bregman-constants", cmd_bregman(a), a.output.out.as_ref()),
        Command::VagueLimit(a) => ("vague-limit", cmd_vague(a), a.output.out.as_ref()),
        Command::Simulate(a) => ("simulate", cmd_simulate(a), a.output.out.as_ref()),
        Command::Verdict(a) => {
            let text =
                fs::read_to_string(&a.report).map_err(|e| usage(format!("cannot read {}: {e}", a.report.display())))?;
            let doc: Value = serde_json::from_str(&text).map_err(|e| usage(format!("not a JSON document: {e}")))?;
            let v = verdict_of(&doc).map_err(usage)?;
            emit(&v.to_value(), None)?;
            return Ok(v.exit_code);
        }
    };
    match result {
        Ok(mut doc) => {
            let v = verdict_of(&doc).map_err(usage)?;
            doc["verdict"] = v.to_value();
            emit(&doc, out)?;
            if v.exit_code != 0 {
                eprintln!(
                    "jumpform {name}: {} (failing: {})",
                    v.status,
                    Value::from(v.failing.clone())
                );
            }
            Ok(v.exit_code)
        }
        Err(f) => {
            let doc = json!({ "command": name, "error": f.message, "exit_code": f.code });
            emit(&doc, out)?;
            Err(f)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("jumpform: {}", f.message);
            ExitCode::from(f.code as u8)
        }
    }
}

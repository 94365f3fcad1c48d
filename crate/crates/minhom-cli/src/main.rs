//! Batch front end: JSON documents in, structured reports out.
//!
//! Exit codes are part of the contract and depend only on the verdict or
//! solution status, never on timing:
//!
//! - 0: TRACTABLE classification, verified report, optimal solution, or
//!   emitted gadget
//! - 1: input, size, or verification error (diagnostics on stderr)
//! - 2: NP_HARD
//! - 3: OUTSIDE_ASSUMPTIONS
//! - 4: UNSAT

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use minhom::boolean::{reduce_maxcut, reduce_mis};
use minhom::classifier::{classify, Verdict};
use minhom::engine::brute_force_optimum;
use minhom::io::{
    digest_file, read_json, to_json_string, write_atomic, CostsDoc, GraphDoc, InstanceDoc,
    LanguageDoc,
};
use minhom::model::{ConstraintLanguage, CostSet, Instance};
use minhom::report::{
    build_report, build_solution, classification_from_report, verify_report, InputDigest,
    ReportDoc,
};
use minhom::solver::solve_tractable;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "minhom",
    version,
    about = "Classify and solve minimum-cost homomorphism problems over conservative languages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a language + cost set as TRACTABLE, NP_HARD, or
    /// OUTSIDE_ASSUMPTIONS, emitting a re-verifiable report.
    Classify {
        /// Language file: {"domain": n, "relations": [...]}
        #[arg(long)]
        language: PathBuf,
        /// Costs file: {"functions": [[...]]}
        #[arg(long)]
        costs: PathBuf,
        /// Also write the report here (atomically) in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance over a tractable language (or any instance with
    /// --oracle), emitting a solution document.
    Solve {
        /// Instance file; inline or path-referenced language and costs.
        #[arg(long)]
        instance: PathBuf,
        /// Reuse a stored classification report instead of re-classifying.
        /// The report is verified before its witness is trusted.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Fall back to brute force when the language is not TRACTABLE.
        #[arg(long)]
        oracle: bool,
        /// Also write the solution here (atomically) in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force an instance regardless of classification (desk-scale
    /// inputs only).
    Oracle {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a hardness-gadget instance for a graph problem.
    Gadget {
        /// Which reduction to apply.
        #[arg(value_enum)]
        kind: GadgetKind,
        /// Graph file: {"n": int, "edges": [[u, v]]}
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-check every witness in a stored report against the original
    /// inputs without re-running classification.
    Verify {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        language: PathBuf,
        #[arg(long)]
        costs: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GadgetKind {
    /// Maximum independent set: minimizing the instance measure over
    /// {0,1} computes |V| − α(G).
    Mis,
    /// Maximum cut: the optimal measure is 2|E| − 2·maxcut(G).
    Maxcut,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            1
        }
    };
    ExitCode::from(code)
}

/// Input and verification failures surface as `Err` (exit 1); verdicts and
/// solution statuses map to the documented codes.
fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Classify {
            language,
            costs,
            out,
        } => cmd_classify(&language, &costs, out.as_deref()),
        Command::Solve {
            instance,
            report,
            oracle,
            out,
        } => cmd_solve(&instance, report.as_deref(), oracle, out.as_deref()),
        Command::Oracle { instance, out } => cmd_oracle(&instance, out.as_deref()),
        Command::Gadget { kind, graph, out } => cmd_gadget(kind, &graph, out.as_deref()),
        Command::Verify {
            report,
            language,
            costs,
        } => cmd_verify(&report, &language, &costs),
    }
}

fn load_language_and_costs(
    language_path: &Path,
    costs_path: &Path,
) -> Result<(ConstraintLanguage, CostSet, Vec<InputDigest>), String> {
    let lang_doc: LanguageDoc = read_json(language_path).map_err(|e| e.to_string())?;
    let costs_doc: CostsDoc = read_json(costs_path).map_err(|e| e.to_string())?;
    let lang = lang_doc.to_model().map_err(|e| e.to_string())?;
    let costs = costs_doc.to_model(lang.domain()).map_err(|e| e.to_string())?;
    let inputs = vec![
        digest_of("language", language_path)?,
        digest_of("costs", costs_path)?,
    ];
    Ok((lang, costs, inputs))
}

fn digest_of(role: &str, path: &Path) -> Result<InputDigest, String> {
    Ok(InputDigest {
        role: role.to_string(),
        path: Some(path.display().to_string()),
        sha256: digest_file(path).map_err(|e| e.to_string())?,
    })
}

fn load_instance(path: &Path) -> Result<(Instance, Vec<InputDigest>), String> {
    let doc: InstanceDoc = read_json(path).map_err(|e| e.to_string())?;
    let base = path.parent().unwrap_or(Path::new("."));
    let instance = doc.to_model(base).map_err(|e| e.to_string())?;
    Ok((instance, vec![digest_of("instance", path)?]))
}

fn emit(document: &str, out: Option<&Path>) -> Result<(), String> {
    print!("{document}");
    if let Some(path) = out {
        write_atomic(path, document).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn verdict_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Tractable => 0,
        Verdict::NpHard => 2,
        Verdict::OutsideAssumptions => 3,
    }
}

fn cmd_classify(
    language_path: &Path,
    costs_path: &Path,
    out: Option<&Path>,
) -> Result<u8, String> {
    let (lang, costs, inputs) = load_language_and_costs(language_path, costs_path)?;
    let start = Instant::now();
    let classification = classify(&lang, &costs).map_err(|e| e.to_string())?;
    let timing_ms = start.elapsed().as_millis() as u64;
    let report = build_report(&classification, VERSION, inputs, timing_ms);
    emit(&to_json_string(&report), out)?;
    Ok(verdict_code(classification.verdict))
}

fn cmd_solve(
    instance_path: &Path,
    report_path: Option<&Path>,
    oracle: bool,
    out: Option<&Path>,
) -> Result<u8, String> {
    let (instance, mut inputs) = load_instance(instance_path)?;
    let classification = match report_path {
        Some(path) => {
            let report: ReportDoc = read_json(path).map_err(|e| e.to_string())?;
            inputs.push(digest_of("report", path)?);
            classification_from_report(instance.language(), instance.costs(), &report)
                .map_err(|failures| failures.join("; "))?
        }
        None => classify(instance.language(), instance.costs()).map_err(|e| e.to_string())?,
    };

    if classification.verdict != Verdict::Tractable && !oracle {
        eprintln!(
            "refusing to solve: classification is {}; pass --oracle to brute-force anyway",
            minhom::report::verdict_name(classification.verdict)
        );
        return Ok(verdict_code(classification.verdict));
    }

    let start = Instant::now();
    let (outcome, source) = if classification.verdict == Verdict::Tractable {
        (
            solve_tractable(&instance, &classification).map_err(|e| e.to_string())?,
            "solve",
        )
    } else {
        (
            brute_force_optimum(&instance).map_err(|e| e.to_string())?,
            "oracle",
        )
    };
    let timing_ms = start.elapsed().as_millis() as u64;
    let unsat = outcome.is_none();
    let solution = build_solution(&instance, outcome, source, VERSION, inputs, timing_ms);
    emit(&to_json_string(&solution), out)?;
    Ok(if unsat { 4 } else { 0 })
}

fn cmd_oracle(instance_path: &Path, out: Option<&Path>) -> Result<u8, String> {
    let (instance, inputs) = load_instance(instance_path)?;
    let start = Instant::now();
    let outcome = brute_force_optimum(&instance).map_err(|e| e.to_string())?;
    let timing_ms = start.elapsed().as_millis() as u64;
    let unsat = outcome.is_none();
    let solution = build_solution(&instance, outcome, "oracle", VERSION, inputs, timing_ms);
    emit(&to_json_string(&solution), out)?;
    Ok(if unsat { 4 } else { 0 })
}

fn cmd_gadget(kind: GadgetKind, graph_path: &Path, out: Option<&Path>) -> Result<u8, String> {
    let doc: GraphDoc = read_json(graph_path).map_err(|e| e.to_string())?;
    let graph = doc.to_model().map_err(|e| e.to_string())?;
    let instance = match kind {
        GadgetKind::Mis => reduce_mis(&graph),
        GadgetKind::Maxcut => reduce_maxcut(&graph),
    };
    emit(&to_json_string(&InstanceDoc::from_model(&instance)), out)?;
    Ok(0)
}

fn cmd_verify(report_path: &Path, language_path: &Path, costs_path: &Path) -> Result<u8, String> {
    let (lang, costs, _) = load_language_and_costs(language_path, costs_path)?;
    let report: ReportDoc = read_json(report_path).map_err(|e| e.to_string())?;
    match verify_report(&lang, &costs, &report) {
        Ok(()) => {
            println!("VERIFIED {}", report.verdict);
            Ok(0)
        }
        Err(failures) => {
            for failure in &failures {
                eprintln!("verification failure: {failure}");
            }
            Err(format!(
                "report failed verification with {} finding(s)",
                failures.len()
            ))
        }
    }
}

//! Command-line front end.
//!
//! Every subcommand reads one JSON document (a path, or `-` for standard
//! input) and writes either a document or a report to standard output, or
//! to the file named by `-o`. A one-line human summary goes to standard
//! error. Exit codes: 0 pass, 1 verdict fail or inconclusive, 2 usage or
//! input error, 3 numerical failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::cavity::{self, CavitySqueezerParams};
use crate::error::{QsrError, Result};
use crate::perturbation::{self, LocalOrder, PerturbedSystem};
use crate::special_class::{self, SpecialClassParams};
use crate::system::{self, QuantumLinearSystem, RealizabilityConfig, Verdict};
use crate::wire::{self, complex_to_wire, matrix_to_wire, Document, Payload, ReportDocument};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_TOL: f64 = system::DEFAULT_CHECK_TOL;

/// Parses `RE,IM`.
pub fn parse_complex(text: &str) -> std::result::Result<Complex64, String> {
    let (re, im) = text
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM, got {text:?}"))?;
    let part = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|e| format!("bad number {p:?} in {text:?}: {e}"))
            .and_then(|v| if v.is_finite() { Ok(v) } else { Err(format!("non-finite value in {text:?}")) })
    };
    Ok(Complex64::new(part(re)?, part(im)?))
}

#[derive(Parser, Debug)]
#[command(name = "qsr", version, about = "Realizability checks and singular perturbation reduction for linear quantum systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the system of a physical_params document.
    Realize {
        #[arg(default_value = "-")]
        input: String,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Test a system document for physical realizability.
    Check {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = system::DEFAULT_SAMPLE_COUNT)]
        samples: usize,
        #[arg(long, default_value_t = system::DEFAULT_SEED)]
        seed: u64,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Reduce a perturbed, special_class or cavity_squeezer document.
    Reduce {
        #[arg(default_value = "-")]
        input: String,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Evaluate the transfer function of a system at given points; fails
    /// when the (J,J)-unitarity defect exceeds the tolerance.
    Respond {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long = "s", value_name = "RE,IM", required = true, allow_hyphen_values = true, value_parser = parse_complex)]
        s: Vec<Complex64>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Factor a reduced special_class (or cavity_squeezer) model.
    Decompose {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Probe the first-order expansion over a decreasing epsilon sweep.
    Converge {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long = "s", value_name = "RE,IM", allow_hyphen_values = true, value_parser = parse_complex)]
        s: Complex64,
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        eps: Vec<f64>,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
    /// Emit a built-in example.
    Example {
        #[command(subcommand)]
        which: Example,
    },
}

#[derive(Subcommand, Debug)]
enum Example {
    /// Cavity coupled to a squeezer. Parameters are read as the scaled
    /// family (γ̃, χ̃); `--epsilon` selects the member γ = γ̃/ε, χ = χ̃/ε.
    CavitySqueezer {
        #[arg(long, allow_hyphen_values = true)]
        k1: f64,
        #[arg(long, allow_hyphen_values = true)]
        k2: f64,
        #[arg(long, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, value_name = "RE,IM", allow_hyphen_values = true, value_parser = parse_complex)]
        chi: Complex64,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value_t = Emit::System)]
        emit: Emit,
        #[arg(short = 'o')]
        output: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Emit {
    /// The full two-mode system.
    System,
    /// The cavity_squeezer parameter document.
    Params,
    /// The ε-free perturbed blocks.
    Perturbed,
    /// The special-class parameters.
    SpecialClass,
}

struct Outcome {
    text: String,
    summary: String,
    code: i32,
}

impl Outcome {
    fn document(doc: &Document, summary: String) -> Self {
        Outcome {
            text: doc.render(),
            summary,
            code: EXIT_PASS,
        }
    }

    fn report(report: &ReportDocument, summary: String) -> Self {
        let code = if report.verdict == Verdict::Pass.as_str() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        };
        Outcome {
            text: report.render(),
            summary: format!("{}: {} ({summary})", report.command, report.verdict),
            code,
        }
    }
}

struct Input {
    doc: Document,
    digest: String,
}

fn read_input(path: &str, stdin: &mut dyn Read) -> Result<Input> {
    let mut bytes = Vec::new();
    if path == "-" {
        stdin.read_to_end(&mut bytes)?;
    } else {
        bytes = std::fs::read(path)?;
    }
    let text = String::from_utf8(bytes).map_err(|e| QsrError::MalformedInput {
        line: 0,
        column: 0,
        message: format!("input is not UTF-8: {e}"),
    })?;
    Ok(Input {
        digest: wire::digest(text.as_bytes()),
        doc: wire::parse_document(&text)?,
    })
}

fn wrong_kind(command: &str, expected: &str, doc: &Document) -> QsrError {
    QsrError::invalid(format!(
        "{command} expects a {expected} document, got {}",
        doc.kind().as_str()
    ))
}

fn expect_system(command: &str, doc: &Document) -> Result<QuantumLinearSystem> {
    match &doc.payload {
        Payload::System(s) => Ok(s.clone()),
        _ => Err(wrong_kind(command, "system", doc)),
    }
}

fn expect_perturbed(command: &str, doc: &Document) -> Result<PerturbedSystem> {
    match &doc.payload {
        Payload::Perturbed(ps) => Ok(ps.clone()),
        Payload::SpecialClass(p) => special_class::to_perturbed(p),
        Payload::CavitySqueezer(p) => cavity::build_perturbed(p),
        _ => Err(wrong_kind(command, "perturbed, special_class or cavity_squeezer", doc)),
    }
}

fn expect_special(command: &str, doc: &Document) -> Result<SpecialClassParams> {
    match &doc.payload {
        Payload::SpecialClass(p) => Ok(p.clone()),
        Payload::CavitySqueezer(p) => cavity::special_class_params(p),
        _ => Err(wrong_kind(command, "special_class or cavity_squeezer", doc)),
    }
}

fn report_for(command: &str, input: &Input, tol: Option<f64>) -> ReportDocument {
    let mut r = ReportDocument::new(command, tol);
    r.inputs.insert("document".into(), input.digest.clone());
    r
}

fn complex_list(zs: &[Complex64]) -> Value {
    Value::Array(zs.iter().map(|&z| json!(complex_to_wire(z))).collect())
}

fn realize(input: &Input) -> Result<Outcome> {
    let Payload::PhysicalParams(p) = &input.doc.payload else {
        return Err(wrong_kind("realize", "physical_params", &input.doc));
    };
    let sys = system::realize(p)?;
    let summary = format!("realize: {} modes, {} fields", sys.n_modes(), sys.m_fields());
    let doc = Document::new(Payload::System(sys))
        .with_meta("source", "realize")
        .with_meta("input_sha256", input.digest.clone());
    Ok(Outcome::document(&doc, summary))
}

fn check(input: &Input, tol: f64, samples: usize, seed: u64) -> Result<Outcome> {
    if samples == 0 {
        return Err(QsrError::invalid("--samples must be at least 1"));
    }
    let sys = expect_system("check", &input.doc)?;
    let cfg = RealizabilityConfig::for_system(&sys, samples, seed, tol);
    let r = system::check_physical_realizability(&sys, &cfg);

    let mut report = report_for("check", input, Some(tol));
    report.residual("jj_unitarity", r.jj_residual_max);
    report.residual("scattering_off_diagonal", r.scattering.off_diagonal_residual);
    report.residual("scattering_unitarity", r.scattering.unitarity_residual);
    report.set_verdict(r.verdict);
    report.set_samples(&r.samples);
    report.outputs = json!({
        "minimality": {
            "controllability_rank": r.minimality.controllability_rank,
            "observability_rank": r.minimality.observability_rank,
            "state_dim": r.minimality.state_dim,
            "minimal": r.minimality.minimal,
        },
        "eigenvalue_pairs": {
            "eigenvalues": complex_list(&r.eigen_pairs.eigenvalues),
            "min_pair_sum": r.eigen_pairs.min_pair_sum,
            "pair": [r.eigen_pairs.pair.0, r.eigen_pairs.pair.1],
            "passed": r.eigen_pairs.passed,
        },
        "jj_passed": r.jj_passed,
        "jj_error": r.jj_error,
        "scattering_passed": r.scattering.passed,
        "canonical_m_hermiticity_residual": r.canonical_m_hermiticity_residual,
        "canonical_input_residual": r.canonical_input_residual,
    });
    let summary = format!(
        "jj {:.3e}, scattering {:.3e}, minimal {}, min pair sum {:.3e}",
        r.jj_residual_max,
        r.scattering.residual(),
        r.minimality.minimal,
        r.eigen_pairs.min_pair_sum
    );
    Ok(Outcome::report(&report, summary))
}

fn reduce(input: &Input) -> Result<Outcome> {
    let ps = expect_perturbed("reduce", &input.doc)?;
    let reduced = perturbation::reduce(&ps)?;
    let summary = format!(
        "reduce: {} slow + {} fast modes -> {} modes",
        ps.n_slow(),
        ps.n_fast(),
        reduced.n_modes()
    );
    let doc = Document::new(Payload::System(reduced))
        .with_meta("source", "reduce")
        .with_meta("input_kind", input.doc.kind().as_str())
        .with_meta("input_sha256", input.digest.clone());
    Ok(Outcome::document(&doc, summary))
}

fn respond(input: &Input, points: &[Complex64], tol: f64) -> Result<Outcome> {
    let sys = expect_system("respond", &input.doc)?;
    let mut worst = 0.0f64;
    let mut values = Vec::with_capacity(points.len());
    for &s in points {
        let phi = system::transfer_function(&sys, s)?;
        let defect = crate::linalg::max_abs(&system::jj_defect(&sys, s)?);
        worst = worst.max(defect);
        values.push(json!({
            "s": complex_to_wire(s),
            "phi": matrix_to_wire(&phi),
            "jj_defect": defect,
        }));
    }
    let mut report = report_for("respond", input, Some(tol));
    report.residual("jj_unitarity", worst);
    report.set_verdict(if worst < tol { Verdict::Pass } else { Verdict::Fail });
    report.set_samples(points);
    report.outputs = json!({ "transfer": values });
    Ok(Outcome::report(&report, format!("{} points, jj {worst:.3e}", points.len())))
}

fn decompose(input: &Input, tol: f64) -> Result<Outcome> {
    let p = expect_special("decompose", &input.doc)?;
    let verification = special_class::verify_decomposition(&p, tol)?;
    let d = special_class::decompose(&p)?;
    let reduced = special_class::reduce_special(&p)?;

    let mut report = report_for("decompose", input, Some(tol));
    for (name, value) in verification.residuals() {
        report.residual(name, value);
    }
    report.set_verdict(if verification.passed { Verdict::Pass } else { Verdict::Fail });
    let static_scattering = system::scattering_form_check(d.static_part.matrix(), tol);
    report.outputs = json!({
        "pr_params": Payload::PhysicalParams(d.pr_params).to_value(),
        "static_part": Payload::Bogoliubov(d.static_part).to_value(),
        "static_part_is_scattering": static_scattering.passed,
        "reduced": Payload::System(reduced).to_value(),
    });
    let summary = format!("max residual {:.3e}", verification.max_residual());
    Ok(Outcome::report(&report, summary))
}

fn order_value(o: Option<LocalOrder>) -> Value {
    match o {
        None => Value::Null,
        Some(LocalOrder::Exact) => json!("exact"),
        Some(LocalOrder::Value(v)) => json!(v),
    }
}

fn converge(input: &Input, s: Complex64, eps: &[f64]) -> Result<Outcome> {
    let ps = expect_perturbed("converge", &input.doc)?;
    let rows = perturbation::convergence_probe(&ps, s, eps)?;

    let mut report = report_for("converge", input, None);
    for (i, row) in rows.iter().enumerate() {
        report.residual(&format!("expansion_residual_{i:02}"), row.residual);
        report.residual(&format!("reduction_gap_{i:02}"), row.raw_residual);
    }
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let settled = |a: f64, b: f64| b < a || b <= perturbation::EXACT_RESIDUAL_FLOOR;
    let decreasing = settled(first.residual, last.residual) && settled(first.raw_residual, last.raw_residual);
    report.set_verdict(if decreasing { Verdict::Pass } else { Verdict::Fail });
    report.set_samples(&[s]);
    report.outputs = json!({
        "rows": rows.iter().map(|r| json!({
            "eps": r.eps,
            "expansion_residual": r.residual,
            "expansion_order": order_value(r.local_order),
            "reduction_gap": r.raw_residual,
            "reduction_order": order_value(r.raw_order),
        })).collect::<Vec<_>>(),
    });
    let orders: Vec<String> = rows[1..]
        .iter()
        .map(|r| match r.local_order {
            Some(LocalOrder::Value(v)) => format!("{v:.3}"),
            _ => "exact".into(),
        })
        .collect();
    Ok(Outcome::report(&report, format!("expansion orders [{}]", orders.join(", "))))
}

fn example_cavity(p: CavitySqueezerParams, epsilon: Option<f64>, emit: Emit) -> Result<Outcome> {
    let physical = match epsilon {
        Some(e) => p.scaled(e)?,
        None => p,
    };
    if epsilon.is_some() && matches!(emit, Emit::Perturbed | Emit::SpecialClass) {
        return Err(QsrError::invalid("--epsilon applies only to --emit system or params"));
    }
    let (payload, what) = match emit {
        Emit::System => (Payload::System(cavity::build_full(&physical)?), "system"),
        Emit::Params => (Payload::CavitySqueezer(physical), "parameters"),
        Emit::Perturbed => (Payload::Perturbed(cavity::build_perturbed(&p)?), "perturbed blocks"),
        Emit::SpecialClass => (Payload::SpecialClass(cavity::special_class_params(&p)?), "special-class parameters"),
    };
    let mut doc = Document::new(payload)
        .with_meta("source", "example cavity-squeezer")
        .with_meta("k1", p.k1.to_string())
        .with_meta("k2", p.k2.to_string())
        .with_meta("gamma", p.gamma.to_string())
        .with_meta("chi", format!("{},{}", p.chi.re, p.chi.im));
    if let Some(e) = epsilon {
        doc = doc.with_meta("epsilon", e.to_string());
    }
    Ok(Outcome::document(&doc, format!("example cavity-squeezer: {what}")))
}

fn execute(cli: Cli, stdin: &mut dyn Read) -> Result<(Outcome, Option<PathBuf>)> {
    let mut load = |path: &str| read_input(path, stdin);
    Ok(match cli.command {
        Command::Realize { input, output } => (realize(&load(&input)?)?, output),
        Command::Check {
            input,
            tol,
            samples,
            seed,
            output,
        } => (check(&load(&input)?, tol, samples, seed)?, output),
        Command::Reduce { input, output } => (reduce(&load(&input)?)?, output),
        Command::Respond { input, s, tol, output } => (respond(&load(&input)?, &s, tol)?, output),
        Command::Decompose { input, tol, output } => (decompose(&load(&input)?, tol)?, output),
        Command::Converge { input, s, eps, output } => (converge(&load(&input)?, s, &eps)?, output),
        Command::Example {
            which:
                Example::CavitySqueezer {
                    k1,
                    k2,
                    gamma,
                    chi,
                    epsilon,
                    emit,
                    output,
                },
        } => {
            let p = CavitySqueezerParams::new(k1, k2, gamma, chi)?;
            (example_cavity(p, epsilon, emit)?, output)
        }
    })
}

/// Runs one command line (including the program name) against the given
/// streams and returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                EXIT_USAGE
            } else {
                let _ = write!(stdout, "{}", e.render());
                EXIT_PASS
            };
            return code;
        }
    };

    let result = execute(cli, stdin).and_then(|(outcome, output)| {
        match output {
            Some(path) => std::fs::write(path, &outcome.text)?,
            None => stdout.write_all(outcome.text.as_bytes())?,
        }
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            let _ = writeln!(stderr, "{}", outcome.summary);
            let _ = stdout.flush();
            outcome.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

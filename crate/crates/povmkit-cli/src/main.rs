//! `povmkit` — measurement-ordering toolkit front end.
//!
//! Reports go to stdout as JSON; diagnostics go to stderr. Exit codes:
//! 0 = holds/clean/valid, 2 = fails/not-clean/invalid, 3 = unknown,
//! 1 = usage or parse error.

use std::path::{Path, PathBuf};
use std::process::exit;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use povmkit_cli::core::fixtures;
use povmkit_cli::core::order::{
    clean_classify, post_order, pre_equiv, pre_order, range_order_abelian, CleanMode, CleanVerdict,
};
use povmkit_cli::core::povm::{validate_povm, Povm};
use povmkit_cli::core::rng::Rng;
use povmkit_cli::core::verdict::{Status, Verdict};
use povmkit_cli::core::Tol;
use povmkit_cli::counterexamples;
use povmkit_cli::report;
use povmkit_cli::schema::{self, render};

#[derive(Parser)]
#[command(
    name = "povmkit",
    version,
    about = "Ordering, equivalence, and cleanness of finite-outcome quantum measurements"
)]
struct Cli {
    /// Serialize numbers as decimal strings that round-trip every double
    /// exactly (17 significant digits).
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a measurement file parses and satisfies positivity and
    /// completeness.
    Validate { path: PathBuf },
    /// Report structure flags: observable, effect pair, rank-one, abelian,
    /// informationally complete, trivial.
    Classify { path: PathBuf },
    /// Decide cleanness under quantum pre-processing.
    Clean {
        path: PathBuf,
        /// Compare against measurements of the same cardinality only
        /// (fixed) or of any cardinality (variable).
        #[arg(long, value_enum, default_value_t = ModeArg::Fixed)]
        mode: ModeArg,
        /// Also write the witness (or null) to this file.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Decide an ordering relation between two measurements.
    Order {
        /// pre = quantum pre-processing, post = classical post-processing,
        /// range-abelian = range inclusion against an abelian target.
        #[arg(long, value_enum)]
        relation: RelationArg,
        p: PathBuf,
        q: PathBuf,
        /// Also write the witness (or null) to this file.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Decide equivalence under quantum pre-processing.
    Equiv {
        p: PathBuf,
        q: PathBuf,
        /// Also write the witness (or null) to this file.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Decide whether a probability vector is reached by some state.
    Range {
        path: PathBuf,
        /// Comma-separated outcome probabilities, one per element.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        point: Vec<f64>,
    },
    /// Independently re-check the witness embedded in a report.
    Verify { report: PathBuf },
    /// Generate measurement and channel files (deterministic per seed).
    Fixtures {
        #[command(subcommand)]
        kind: FixtureCmd,
    },
    /// Run the bundled impossibility demonstrations and verify their
    /// numerical claims.
    Counterexamples,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Fixed,
    Variable,
}

#[derive(Clone, Copy, ValueEnum)]
enum RelationArg {
    Pre,
    Post,
    RangeAbelian,
}

#[derive(Subcommand)]
enum FixtureCmd {
    /// Sharp observable: the basis projectors of the given dimension.
    Observable {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tetrahedral qubit measurement: four rank-one elements of trace 1/2.
    Sic2 {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random measurement via compression of a sharp observable on a
    /// larger space.
    RandomPovm {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        outcomes: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random unital channel built from Gaussian Kraus operators.
    RandomChannel {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        kraus: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-outcome measurement {E, 1-E} from a random effect whose
    /// smallest and largest eigenvalues are pinned to --lo and --hi.
    Effect {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0.25)]
        lo: f64,
        #[arg(long, default_value_t = 0.75)]
        hi: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with a process exit code. An empty message means the diagnostic
/// was already written.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                exit(0);
            }
            _ => {
                eprint!("{e}");
                exit(1);
            }
        },
    };
    let tol = match tol_from_env() {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("{msg}");
            exit(1);
        }
    };
    match run(cli, &tol) {
        Ok(code) => exit(code),
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("{}", f.message);
            }
            exit(f.code);
        }
    }
}

fn tol_from_env() -> Result<Tol, String> {
    match std::env::var("POVM_CLEAN_TOL") {
        Err(std::env::VarError::NotPresent) => Ok(Tol::default()),
        Err(e) => Err(format!("POVM_CLEAN_TOL: {e}")),
        Ok(s) => {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|e| format!("POVM_CLEAN_TOL: {e} (value {s:?})"))?;
            if !v.is_finite() || v <= 0.0 {
                return Err(format!(
                    "POVM_CLEAN_TOL must be a positive finite number, got {s:?}"
                ));
            }
            Ok(Tol::with_feas(v))
        }
    }
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn emit(report: &Value) {
    print!("{}", render(report));
}

fn write_witness(path: &Path, witness: &Value) -> CliResult<()> {
    std::fs::write(path, render(witness))
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Load and validate a measurement file. A structural problem is a usage
/// error (exit 1). A semantically invalid measurement prints an `invalid`
/// report for `command` and exits 2.
fn load_povm(path: &Path, command: &str, tol: &Tol, exact: bool) -> CliResult<Povm> {
    let raw = read_json(path)?;
    let file = schema::parse_povm(&raw, "$")
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Err(e) = validate_povm(&file.elements, tol) {
        let query = json!({ "command": command, "p": raw });
        let notes = vec![format!("{}: {e}", path.display())];
        emit(&report::report_value(query, "invalid", &[], None, false, None, &notes, exact));
        eprintln!("{}: {e}", path.display());
        return Err(Failure { code: 2, message: String::new() });
    }
    Povm::with_labels(file.elements, file.labels, tol)
        .map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

fn status_note(v: &Verdict, notes: &mut Vec<String>) {
    if v.status == Status::Unknown {
        notes.push(
            "the feasibility search plateaued without a certificate either way; a plateau \
             is evidence, not proof — the relation may still hold, or be obstructed by a \
             connecting map that is positive but not completely positive"
                .into(),
        );
    }
    if v.witness_pending {
        notes.push(
            "the rigorous criterion held but witness synthesis stalled; the verdict stands \
             with witness_pending = true"
                .into(),
        );
    }
}

fn run(cli: Cli, tol: &Tol) -> CliResult<i32> {
    let exact = cli.exact;
    match cli.cmd {
        Cmd::Validate { path } => {
            let raw = read_json(&path)?;
            let file = schema::parse_povm(&raw, "$")
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            match validate_povm(&file.elements, tol) {
                Ok(()) => {
                    let p = Povm::with_labels(file.elements, file.labels, tol)
                        .map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })?;
                    let query = json!({ "command": "validate", "p": schema::povm_value(&p, exact) });
                    let notes = vec![format!(
                        "measurement is valid: {} outcomes on dimension {}",
                        p.len(),
                        p.dim()
                    )];
                    emit(&report::report_value(query, "valid", &[], None, false, None, &notes, exact));
                    Ok(0)
                }
                Err(e) => {
                    let query = json!({ "command": "validate", "p": raw });
                    let notes = vec![format!("{}: {e}", path.display())];
                    emit(&report::report_value(query, "invalid", &[], None, false, None, &notes, exact));
                    eprintln!("{}: {e}", path.display());
                    Ok(2)
                }
            }
        }
        Cmd::Classify { path } => {
            let p = load_povm(&path, "classify", tol, exact)?;
            let flags = p
                .classify(tol)
                .map_err(|e| Failure::usage(format!("classification failed: {e}")))?;
            let query = json!({ "command": "classify", "p": schema::povm_value(&p, exact) });
            let notes = vec![format!(
                "{} outcomes on dimension {}",
                p.len(),
                p.dim()
            )];
            let mut rep =
                report::report_value(query, "valid", &[], None, false, None, &notes, exact);
            rep.as_object_mut().expect("report is an object").insert(
                "structure".into(),
                json!({
                    "observable": flags.observable,
                    "effect_pair": flags.effect_pair,
                    "rank_one": flags.rank_one,
                    "abelian": flags.abelian,
                    "infocomplete": flags.infocomplete,
                    "trivial": flags.trivial,
                }),
            );
            emit(&rep);
            Ok(0)
        }
        Cmd::Clean { path, mode, witness } => {
            let p = load_povm(&path, "clean", tol, exact)?;
            let mode_str = match mode {
                ModeArg::Fixed => "fixed",
                ModeArg::Variable => "variable",
            };
            let core_mode = match mode {
                ModeArg::Fixed => CleanMode::FixedCardinality,
                ModeArg::Variable => CleanMode::VariableCardinality,
            };
            let cr = clean_classify(&p, core_mode, tol)
                .map_err(|e| Failure::usage(format!("cleanness query failed: {e}")))?;
            let verdict = match cr.verdict {
                CleanVerdict::Clean => "clean",
                CleanVerdict::NotClean => "not-clean",
                CleanVerdict::Unknown => "unknown",
            };
            let witness_value = cr
                .dominating
                .as_ref()
                .map(|(dp, w)| report::domination_value(dp, w, exact));
            let mut notes = vec![format!("decision rule: {}", cr.reason)];
            if witness_value.is_some() {
                notes.push(
                    "a strictly dominating measurement and the map carrying it onto the \
                     input are embedded as the witness"
                        .into(),
                );
            }
            let query = json!({
                "command": "clean",
                "mode": mode_str,
                "p": schema::povm_value(&p, exact),
            });
            let rep = report::report_value(
                query,
                verdict,
                &[cr.reason],
                None,
                false,
                witness_value.clone(),
                &notes,
                exact,
            );
            emit(&rep);
            if let Some(out) = witness {
                write_witness(&out, &witness_value.unwrap_or(Value::Null))?;
            }
            Ok(report::exit_for(verdict))
        }
        Cmd::Order { relation, p, q, witness } => {
            let pv = load_povm(&p, "order", tol, exact)?;
            let qv = load_povm(&q, "order", tol, exact)?;
            let (rel_str, verdict) = match relation {
                RelationArg::Pre => ("pre", pre_order(&pv, &qv, tol)),
                RelationArg::Post => ("post", post_order(&pv, &qv, tol)),
                RelationArg::RangeAbelian => ("range-abelian", range_order_abelian(&pv, &qv, tol)),
            };
            let verdict =
                verdict.map_err(|e| Failure::usage(format!("ordering query failed: {e}")))?;
            let query = json!({
                "command": "order",
                "relation": rel_str,
                "p": schema::povm_value(&pv, exact),
                "q": schema::povm_value(&qv, exact),
            });
            let witness_value = report::witness_for_report(&verdict, exact);
            let mut notes = Vec::new();
            status_note(&verdict, &mut notes);
            let rep = report::verdict_report(query, &verdict, witness_value.clone(), &notes, exact);
            emit(&rep);
            if let Some(out) = witness {
                write_witness(&out, &witness_value.unwrap_or(Value::Null))?;
            }
            Ok(report::exit_for(report::status_str(verdict.status)))
        }
        Cmd::Equiv { p, q, witness } => {
            let pv = load_povm(&p, "equiv", tol, exact)?;
            let qv = load_povm(&q, "equiv", tol, exact)?;
            let verdict = pre_equiv(&pv, &qv, tol)
                .map_err(|e| Failure::usage(format!("equivalence query failed: {e}")))?;
            let query = json!({
                "command": "equiv",
                "p": schema::povm_value(&pv, exact),
                "q": schema::povm_value(&qv, exact),
            });
            let witness_value = report::witness_for_report(&verdict, exact);
            let mut notes = Vec::new();
            status_note(&verdict, &mut notes);
            let rep = report::verdict_report(query, &verdict, witness_value.clone(), &notes, exact);
            emit(&rep);
            if let Some(out) = witness {
                write_witness(&out, &witness_value.unwrap_or(Value::Null))?;
            }
            Ok(report::exit_for(report::status_str(verdict.status)))
        }
        Cmd::Range { path, point } => {
            let p = load_povm(&path, "range", tol, exact)?;
            let verdict = p
                .range_membership(&point, tol)
                .map_err(|e| Failure::usage(format!("range query failed: {e}")))?;
            let query = json!({
                "command": "range",
                "p": schema::povm_value(&p, exact),
                "point": point
                    .iter()
                    .map(|&x| schema::number_value(x, exact))
                    .collect::<Vec<_>>(),
            });
            let witness_value = report::witness_for_report(&verdict, exact);
            let mut notes = Vec::new();
            status_note(&verdict, &mut notes);
            let rep = report::verdict_report(query, &verdict, witness_value, &notes, exact);
            emit(&rep);
            Ok(report::exit_for(report::status_str(verdict.status)))
        }
        Cmd::Verify { report: report_path } => {
            let raw = read_json(&report_path)?;
            let outcome = report::verify_report(&raw, tol)
                .map_err(|e| Failure::usage(format!("{}: {e}", report_path.display())))?;
            let verdict = if outcome.passed { "valid" } else { "invalid" };
            let query = json!({ "command": "verify" });
            emit(&report::report_value(
                query,
                verdict,
                &[],
                None,
                false,
                None,
                &outcome.details.iter().cloned().collect::<Vec<String>>(),
                exact,
            ));
            if !outcome.passed {
                for line in &outcome.details {
                    eprintln!("{line}");
                }
            }
            Ok(if outcome.passed { 0 } else { 2 })
        }
        Cmd::Fixtures { kind } => {
            let (value, out) = fixture_value(kind, tol, exact)?;
            let text = render(&value);
            match out {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Cmd::Counterexamples => {
            let rep = counterexamples::run(tol);
            emit(&rep.to_value(exact));
            Ok(if rep.confirmed { 0 } else { 2 })
        }
    }
}

fn fixture_value(kind: FixtureCmd, tol: &Tol, exact: bool) -> CliResult<(Value, Option<PathBuf>)> {
    match kind {
        FixtureCmd::Observable { dim, out } => {
            if dim == 0 {
                return Err(Failure::usage("--dim must be at least 1"));
            }
            Ok((schema::povm_value(&fixtures::observable(dim), exact), out))
        }
        FixtureCmd::Sic2 { dim, out } => {
            if dim != 2 {
                return Err(Failure::usage(format!(
                    "unsupported dimension {dim}: the tetrahedral fixture exists only for dimension 2"
                )));
            }
            Ok((schema::povm_value(&fixtures::sic2(), exact), out))
        }
        FixtureCmd::RandomPovm { dim, outcomes, seed, out } => {
            if dim == 0 || outcomes == 0 {
                return Err(Failure::usage("--dim and --outcomes must be at least 1"));
            }
            let mut rng = Rng::new(seed);
            let p = fixtures::random_povm(dim, outcomes, &mut rng, tol);
            Ok((schema::povm_value(&p, exact), out))
        }
        FixtureCmd::RandomChannel { dim, kraus, seed, out } => {
            if dim == 0 || kraus == 0 {
                return Err(Failure::usage("--dim and --kraus must be at least 1"));
            }
            let mut rng = Rng::new(seed);
            let ch = fixtures::random_unital_channel(dim, kraus, &mut rng, tol);
            Ok((schema::channel_value(&ch, exact), out))
        }
        FixtureCmd::Effect { dim, lo, hi, seed, out } => {
            if dim == 0 {
                return Err(Failure::usage("--dim must be at least 1"));
            }
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(Failure::usage(
                    "--lo and --hi must satisfy 0 <= lo <= hi <= 1",
                ));
            }
            let mut rng = Rng::new(seed);
            let e = fixtures::random_effect(dim, lo, hi, &mut rng, tol);
            let p = fixtures::pair_from_effect(&e, tol)
                .map_err(|e| Failure::usage(format!("effect fixture failed validation: {e}")))?;
            Ok((schema::povm_value(&p, exact), out))
        }
    }
}

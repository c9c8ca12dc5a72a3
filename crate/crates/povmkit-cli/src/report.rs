//! Machine-readable result documents and their independent re-check.
//!
//! A report embeds the full query (including the measurement operators), the
//! verdict, the names of the exact rules that decided it, residuals, and a
//! serialized witness. Everything needed to re-check a positive verdict
//! travels inside the document, so `verify` never touches the original input
//! files — and its checker is written against the raw matrix operations, not
//! the decision procedures that produced the witness.

use povmkit_core::mat::{herm_eig, Mat};
use povmkit_core::order::StochasticMatrix;
use povmkit_core::povm::{validate_povm, Povm};
use povmkit_core::verdict::{Status, Verdict, Witness};
use povmkit_core::Tol;
use serde_json::{json, Map, Value};

use crate::schema::{
    self, arr, field, matrix_from, matrix_value, number, obj, povm_value, string, SchemaError,
    SCHEMA_REPORT,
};

/// Acceptance thresholds of the independent re-check. Every witness the
/// toolkit emits was validated at least at the solver feasibility level
/// (1e-7) or the constructive-witness level (1e-6) before serialization, and
/// JSON round-trips floats exactly, so these bounds hold with a wide margin
/// for genuine reports while still rejecting corrupted ones.
const ACTION_GAP: f64 = 2e-6;
const UNITARITY: f64 = 1e-7;
const STOCHASTICITY: f64 = 1e-9;
const STATE_NEGATIVITY: f64 = 1e-6;

pub fn status_str(s: Status) -> &'static str {
    match s {
        Status::Holds => "holds",
        Status::Fails => "fails",
        Status::Unknown => "unknown",
    }
}

/// Exit code contract: 0 = holds/clean/valid, 2 = fails/not-clean/invalid,
/// 3 = unknown, 1 = usage or parse error.
pub fn exit_for(verdict: &str) -> i32 {
    match verdict {
        "holds" | "clean" | "valid" => 0,
        "fails" | "not-clean" | "invalid" => 2,
        _ => 3,
    }
}

pub fn witness_value(w: &Witness, exact: bool) -> Value {
    match w {
        Witness::Channel(ch) => json!({
            "kind": "channel",
            "channel": schema::channel_value(ch, exact),
        }),
        Witness::ChannelPair(f, g) => json!({
            "kind": "channel-pair",
            "forward": schema::channel_value(f, exact),
            "backward": schema::channel_value(g, exact),
        }),
        Witness::Stochastic(m) => json!({
            "kind": "stochastic",
            "rows": m.rows(),
            "cols": m.cols(),
            "entries": m.entries().iter().map(|&x| schema::number_value(x, exact)).collect::<Vec<_>>(),
        }),
        Witness::Unitary(u) => json!({
            "kind": "unitary",
            "dim": u.rows(),
            "matrix": matrix_value(u, exact),
        }),
        Witness::State(r) => json!({
            "kind": "state",
            "dim": r.rows(),
            "matrix": matrix_value(r, exact),
        }),
    }
}

/// Witness of a strict domination: a measurement together with the map that
/// carries it onto the one under test.
pub fn domination_value(dominating: &Povm, map: &Witness, exact: bool) -> Value {
    json!({
        "kind": "domination",
        "dominating": povm_value(dominating, exact),
        "map": witness_value(map, exact),
    })
}

/// Assemble the result document. `verdict` is one of holds/fails/unknown/
/// clean/not-clean/valid/invalid; `certificates` names the exact rules used.
pub fn report_value(
    query: Value,
    verdict: &str,
    certificates: &[&str],
    residual: Option<f64>,
    witness_pending: bool,
    witness: Option<Value>,
    notes: &[String],
    exact: bool,
) -> Value {
    json!({
        "schema": SCHEMA_REPORT,
        "query": query,
        "verdict": verdict,
        "certificates": certificates,
        "residual": residual.map(|r| schema::number_value(r, exact)).unwrap_or(Value::Null),
        "witness_pending": witness_pending,
        "witness": witness.unwrap_or(Value::Null),
        "notes": notes,
    })
}

/// Shorthand for reports backed by a three-valued `Verdict`.
pub fn verdict_report(query: Value, v: &Verdict, witness: Option<Value>, notes: &[String], exact: bool) -> Value {
    let certs: Vec<&str> = v.certificate.into_iter().collect();
    report_value(
        query,
        status_str(v.status),
        &certs,
        v.residual,
        v.witness_pending,
        witness,
        notes,
        exact,
    )
}

/// Outcome of the independent re-check: `passed` plus a transcript of every
/// check performed (or the first failure).
pub struct VerifyOutcome {
    pub passed: bool,
    pub details: Vec<String>,
}

fn fail(details: &mut Vec<String>, msg: String) -> VerifyOutcome {
    details.push(format!("FAIL: {msg}"));
    VerifyOutcome { passed: false, details: std::mem::take(details) }
}

struct ParsedWitness {
    kind: String,
    value: Value,
}

fn witness_of(report: &Map<String, Value>) -> Result<Option<ParsedWitness>, SchemaError> {
    match report.get("witness") {
        None | Some(Value::Null) => Ok(None),
        Some(w) => {
            let m = obj(w, "$.witness")?;
            Ok(Some(ParsedWitness {
                kind: string(field(m, "kind", "$.witness")?, "$.witness.kind")?,
                value: w.clone(),
            }))
        }
    }
}

fn parse_povm_checked(v: &Value, path: &str, tol: &Tol) -> Result<Povm, String> {
    let f = schema::parse_povm(v, path).map_err(|e| e.to_string())?;
    validate_povm(&f.elements, tol).map_err(|e| format!("{path}: {e}"))?;
    Povm::with_labels(f.elements, f.labels, tol).map_err(|e| format!("{path}: {e}"))
}

fn parse_kraus(v: &Value, path: &str) -> Result<(usize, usize, Vec<Mat>), String> {
    let f = schema::parse_channel(v, path).map_err(|e| e.to_string())?;
    Ok((f.din, f.dout, f.kraus))
}

/// X ↦ Σ K†XK, straight from the serialized Kraus operators. Complete
/// positivity is automatic in this form; unitality is what gets measured.
fn kraus_apply(kraus: &[Mat], x: &Mat) -> Mat {
    let dout = kraus[0].cols();
    let mut out = Mat::zeros(dout, dout);
    for k in kraus {
        out = out.add(&k.adjoint().mul(x).mul(k));
    }
    out
}

fn kraus_unital_residual(kraus: &[Mat]) -> f64 {
    let dout = kraus[0].cols();
    let mut s = Mat::zeros(dout, dout);
    for k in kraus {
        s = s.add(&k.adjoint().mul(k));
    }
    s.sub(&Mat::identity(dout)).max_abs()
}

/// Largest deviation over outcomes between the channel image of `p` and `q`,
/// padding the shorter family with vanishing elements.
fn channel_action_gap(kraus: &[Mat], p: &Povm, q: &Povm) -> f64 {
    let n = p.len().max(q.len());
    let p = p.padded(n);
    let q = q.padded(n);
    let mut worst: f64 = 0.0;
    for (pe, qe) in p.elements().iter().zip(q.elements()) {
        worst = worst.max(kraus_apply(kraus, pe).sub(qe).max_abs());
    }
    worst
}

fn check_channel_witness(
    v: &Value,
    p: &Povm,
    q: &Povm,
    details: &mut Vec<String>,
) -> Result<(), String> {
    let m = obj(v, "$.witness").map_err(|e| e.to_string())?;
    let (din, dout, kraus) =
        parse_kraus(field(m, "channel", "$.witness").map_err(|e| e.to_string())?, "$.witness.channel")?;
    if din != p.dim() || dout != q.dim() {
        return Err(format!(
            "witness channel is {din}->{dout} but the measurements live on {}->{}",
            p.dim(),
            q.dim()
        ));
    }
    let unital = kraus_unital_residual(&kraus);
    if unital > ACTION_GAP {
        return Err(format!("witness channel unitality residual {unital:.3e} exceeds {ACTION_GAP:.0e}"));
    }
    let gap = channel_action_gap(&kraus, p, q);
    if gap > ACTION_GAP {
        return Err(format!("witness channel action gap {gap:.3e} exceeds {ACTION_GAP:.0e}"));
    }
    details.push(format!(
        "channel witness re-checked: unitality residual {unital:.3e}, action gap {gap:.3e}"
    ));
    Ok(())
}

fn check_stochastic_witness(
    v: &Value,
    p: &Povm,
    q: &Povm,
    details: &mut Vec<String>,
) -> Result<(), String> {
    let m = obj(v, "$.witness").map_err(|e| e.to_string())?;
    let rows = schema::dimension(field(m, "rows", "$.witness").map_err(|e| e.to_string())?, "$.witness.rows")
        .map_err(|e| e.to_string())?;
    let cols = schema::dimension(field(m, "cols", "$.witness").map_err(|e| e.to_string())?, "$.witness.cols")
        .map_err(|e| e.to_string())?;
    let ea = arr(field(m, "entries", "$.witness").map_err(|e| e.to_string())?, "$.witness.entries")
        .map_err(|e| e.to_string())?;
    if rows != q.len() || cols != p.len() || ea.len() != rows * cols {
        return Err(format!(
            "witness table is {rows}x{cols} with {} entries; expected {}x{}",
            ea.len(),
            q.len(),
            p.len()
        ));
    }
    let mut entries = Vec::with_capacity(ea.len());
    for (k, e) in ea.iter().enumerate() {
        entries.push(number(e, &format!("$.witness.entries[{k}]")).map_err(|e| e.to_string())?);
    }
    for (k, &x) in entries.iter().enumerate() {
        if !(-STOCHASTICITY..=1.0 + STOCHASTICITY).contains(&x) {
            return Err(format!("table entry {k} = {x} is outside [0, 1]"));
        }
    }
    for j in 0..cols {
        let s: f64 = (0..rows).map(|i| entries[i * cols + j]).sum();
        if (s - 1.0).abs() > STOCHASTICITY {
            return Err(format!("table column {j} sums to {s}, not 1"));
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..rows {
        let mut img = Mat::zeros(p.dim(), p.dim());
        for j in 0..cols {
            img = img.add(&p.element(j).scale_re(entries[i * cols + j]));
        }
        worst = worst.max(img.sub(q.element(i)).max_abs());
    }
    if worst > ACTION_GAP {
        return Err(format!("witness table action gap {worst:.3e} exceeds {ACTION_GAP:.0e}"));
    }
    details.push(format!("stochastic witness re-checked: action gap {worst:.3e}"));
    Ok(())
}

fn check_unitary_witness(
    v: &Value,
    p: &Povm,
    q: &Povm,
    details: &mut Vec<String>,
) -> Result<(), String> {
    let m = obj(v, "$.witness").map_err(|e| e.to_string())?;
    let d = schema::dimension(field(m, "dim", "$.witness").map_err(|e| e.to_string())?, "$.witness.dim")
        .map_err(|e| e.to_string())?;
    if d != p.dim() || p.dim() != q.dim() {
        return Err(format!("witness unitary dimension {d} does not match the measurements"));
    }
    let u = matrix_from(
        field(m, "matrix", "$.witness").map_err(|e| e.to_string())?,
        d,
        d,
        "$.witness.matrix",
    )
    .map_err(|e| e.to_string())?;
    let ortho = u.adjoint().mul(&u).sub(&Mat::identity(d)).max_abs();
    if ortho > UNITARITY {
        return Err(format!("witness unitarity residual {ortho:.3e} exceeds {UNITARITY:.0e}"));
    }
    let n = p.len().max(q.len());
    let (pp, qq) = (p.padded(n), q.padded(n));
    let mut worst: f64 = 0.0;
    for (pe, qe) in pp.elements().iter().zip(qq.elements()) {
        worst = worst.max(u.mul(pe).mul(&u.adjoint()).sub(qe).max_abs());
    }
    if worst > ACTION_GAP {
        return Err(format!("witness conjugation gap {worst:.3e} exceeds {ACTION_GAP:.0e}"));
    }
    details.push(format!(
        "unitary witness re-checked: unitarity residual {ortho:.3e}, conjugation gap {worst:.3e}"
    ));
    Ok(())
}

fn check_state_witness(
    v: &Value,
    p: &Povm,
    point: &[f64],
    tol: &Tol,
    details: &mut Vec<String>,
) -> Result<(), String> {
    let m = obj(v, "$.witness").map_err(|e| e.to_string())?;
    let d = schema::dimension(field(m, "dim", "$.witness").map_err(|e| e.to_string())?, "$.witness.dim")
        .map_err(|e| e.to_string())?;
    if d != p.dim() {
        return Err(format!("witness state dimension {d} does not match the measurement"));
    }
    let rho = matrix_from(
        field(m, "matrix", "$.witness").map_err(|e| e.to_string())?,
        d,
        d,
        "$.witness.matrix",
    )
    .map_err(|e| e.to_string())?;
    if rho.herm_residual() > 1e-9 {
        return Err("witness state is not Hermitian".into());
    }
    let eig = herm_eig(&rho.hermitize(), tol).map_err(|e| format!("eigensolver: {e}"))?;
    let lmin = eig.values.first().copied().unwrap_or(0.0);
    if lmin < -STATE_NEGATIVITY {
        return Err(format!("witness state has negative eigenvalue {lmin:.3e}"));
    }
    let tr = rho.trace().re;
    if (tr - 1.0).abs() > 1e-6 {
        return Err(format!("witness state trace {tr} differs from 1"));
    }
    let mut worst: f64 = 0.0;
    for (e, &target) in p.elements().iter().zip(point) {
        worst = worst.max((e.mul(&rho).trace().re - target).abs());
    }
    if worst > ACTION_GAP {
        return Err(format!("witness state probability gap {worst:.3e} exceeds {ACTION_GAP:.0e}"));
    }
    details.push(format!(
        "state witness re-checked: min eigenvalue {lmin:.3e}, probability gap {worst:.3e}"
    ));
    Ok(())
}

/// Map a generic relation witness (channel / stochastic / unitary /
/// channel-pair) against source `p` and target `q`.
fn check_relation_witness(
    w: &ParsedWitness,
    p: &Povm,
    q: &Povm,
    details: &mut Vec<String>,
) -> Result<(), String> {
    match w.kind.as_str() {
        "channel" => check_channel_witness(&w.value, p, q, details),
        "stochastic" => check_stochastic_witness(&w.value, p, q, details),
        "unitary" => check_unitary_witness(&w.value, p, q, details),
        "channel-pair" => {
            let m = obj(&w.value, "$.witness").map_err(|e| e.to_string())?;
            let fwd = json!({
                "kind": "channel",
                "channel": field(m, "forward", "$.witness").map_err(|e| e.to_string())?.clone(),
            });
            let bwd = json!({
                "kind": "channel",
                "channel": field(m, "backward", "$.witness").map_err(|e| e.to_string())?.clone(),
            });
            check_channel_witness(&fwd, p, q, details)?;
            check_channel_witness(&bwd, q, p, details)?;
            Ok(())
        }
        other => Err(format!("unsupported witness kind \"{other}\" for this query")),
    }
}

/// Re-check a report independently: parse the embedded inputs, re-validate
/// them, and confirm that the embedded witness actually performs the mapping
/// the verdict claims. Positive verdicts must carry a witness unless they
/// are explicitly flagged witness-pending.
pub fn verify_report(report: &Value, tol: &Tol) -> Result<VerifyOutcome, SchemaError> {
    let m = obj(report, "$")?;
    let schema_tag = string(field(m, "schema", "$")?, "$.schema")?;
    if schema_tag != SCHEMA_REPORT {
        return Err(SchemaError(format!(
            "$.schema: expected \"{SCHEMA_REPORT}\", found \"{schema_tag}\""
        )));
    }
    let query = obj(field(m, "query", "$")?, "$.query")?;
    let command = string(field(query, "command", "$.query")?, "$.query.command")?;
    let verdict = string(field(m, "verdict", "$")?, "$.verdict")?;
    let pending = m.get("witness_pending").and_then(Value::as_bool).unwrap_or(false);
    let witness = witness_of(m)?;

    let mut details = vec![format!("report: command={command}, verdict={verdict}")];

    let positive = matches!(verdict.as_str(), "holds" | "not-clean");
    if !positive {
        if let Some(w) = &witness {
            details.push(format!(
                "note: verdict \"{verdict}\" carries a witness of kind \"{}\" that nothing obliges; ignored",
                w.kind
            ));
        }
        details.push("nothing to re-check for this verdict".into());
        return Ok(VerifyOutcome { passed: true, details });
    }
    if witness.is_none() {
        if pending {
            details.push(
                "witness-pending verdict: the rigorous criterion held but witness synthesis \
                 stalled; nothing further to re-check"
                    .into(),
            );
            return Ok(VerifyOutcome { passed: true, details });
        }
        return Ok(fail(&mut details, "positive verdict carries no witness and is not flagged pending".into()));
    }
    let w = witness.unwrap();

    let outcome = match command.as_str() {
        "order" | "equiv" => {
            let p = match parse_povm_checked(field(query, "p", "$.query")?, "$.query.p", tol) {
                Ok(p) => p,
                Err(e) => return Ok(fail(&mut details, e)),
            };
            let q = match parse_povm_checked(field(query, "q", "$.query")?, "$.query.q", tol) {
                Ok(q) => q,
                Err(e) => return Ok(fail(&mut details, e)),
            };
            check_relation_witness(&w, &p, &q, &mut details)
        }
        "clean" => {
            let p = match parse_povm_checked(field(query, "p", "$.query")?, "$.query.p", tol) {
                Ok(p) => p,
                Err(e) => return Ok(fail(&mut details, e)),
            };
            if w.kind != "domination" {
                Err(format!("cleanness verdicts carry a domination witness, found \"{}\"", w.kind))
            } else {
                let wm = obj(&w.value, "$.witness")?;
                match parse_povm_checked(
                    field(wm, "dominating", "$.witness")?,
                    "$.witness.dominating",
                    tol,
                ) {
                    Err(e) => Err(e),
                    Ok(dominating) => {
                        details.push(format!(
                            "dominating measurement re-validated: {} outcomes on dimension {}",
                            dominating.len(),
                            dominating.dim()
                        ));
                        match wm.get("map") {
                            None | Some(Value::Null) => {
                                Err("domination witness carries no map".into())
                            }
                            Some(mv) => {
                                // The map carries the dominating measurement
                                // onto the one under test.
                                let mm = obj(mv, "$.witness.map")?;
                                let kind = string(
                                    field(mm, "kind", "$.witness.map")?,
                                    "$.witness.map.kind",
                                )?;
                                let inner = ParsedWitness { kind, value: mv.clone() };
                                check_relation_witness(&inner, &dominating, &p, &mut details)
                            }
                        }
                    }
                }
            }
        }
        "range" => {
            let p = match parse_povm_checked(field(query, "p", "$.query")?, "$.query.p", tol) {
                Ok(p) => p,
                Err(e) => return Ok(fail(&mut details, e)),
            };
            let pa = arr(field(query, "point", "$.query")?, "$.query.point")?;
            let mut point = Vec::with_capacity(pa.len());
            for (k, x) in pa.iter().enumerate() {
                point.push(number(x, &format!("$.query.point[{k}]"))?);
            }
            if point.len() != p.len() {
                Err(format!("point has {} entries for {} outcomes", point.len(), p.len()))
            } else if w.kind != "state" {
                Err(format!("range verdicts carry a state witness, found \"{}\"", w.kind))
            } else {
                check_state_witness(&w.value, &p, &point, tol, &mut details)
            }
        }
        other => Err(format!("command \"{other}\" does not produce checkable witnesses")),
    };

    match outcome {
        Ok(()) => {
            details.push("witness re-check passed".into());
            Ok(VerifyOutcome { passed: true, details })
        }
        Err(e) => Ok(fail(&mut details, e)),
    }
}

/// Convert a witness produced by an in-process query into the exact value a
/// report would embed — used by witness output files as well.
pub fn witness_for_report(v: &Verdict, exact: bool) -> Option<Value> {
    v.witness.as_ref().map(|w| witness_value(w, exact))
}

/// Stochastic matrices round-trip through reports; expose the parse for
/// in-process re-use.
pub fn stochastic_from_value(v: &Value, tol: &Tol) -> Result<StochasticMatrix, SchemaError> {
    let m = obj(v, "$.witness")?;
    let rows = schema::dimension(field(m, "rows", "$.witness")?, "$.witness.rows")?;
    let cols = schema::dimension(field(m, "cols", "$.witness")?, "$.witness.cols")?;
    let ea = arr(field(m, "entries", "$.witness")?, "$.witness.entries")?;
    let mut entries = Vec::with_capacity(ea.len());
    for (k, e) in ea.iter().enumerate() {
        entries.push(number(e, &format!("$.witness.entries[{k}]"))?);
    }
    StochasticMatrix::new(rows, cols, entries, tol)
        .map_err(|e| SchemaError(format!("$.witness: {e}")))
}

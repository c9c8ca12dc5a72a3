//! End-to-end tests driving the installed binary: exit codes, report
//! round-trips through `verify`, deterministic fixtures, and the exact
//! serialization mode.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn povmkit() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_povmkit"));
    c.env_remove("POVM_CLEAN_TOL");
    c
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn finish(out: Output) -> Run {
    Run {
        code: out.status.code().expect("process exited with a code"),
        stdout: String::from_utf8(out.stdout).expect("stdout is UTF-8"),
        stderr: String::from_utf8(out.stderr).expect("stderr is UTF-8"),
    }
}

fn run(args: &[&str]) -> Run {
    finish(povmkit().args(args).output().expect("spawn povmkit"))
}

fn run_in(dir: &Path, args: &[&str]) -> Run {
    finish(povmkit().current_dir(dir).args(args).output().expect("spawn povmkit"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("temp paths are UTF-8")
}

fn fixture(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut full: Vec<&str> = vec!["fixtures"];
    full.extend_from_slice(args);
    full.push("--out");
    full.push(path_str(&out));
    let r = run(&full);
    assert_eq!(r.code, 0, "fixture {name} failed: {}", r.stderr);
    out
}

fn json_of(text: &str) -> Value {
    serde_json::from_str(text).expect("output parses as JSON")
}

#[test]
fn fixtures_are_byte_deterministic() {
    let args = ["fixtures", "random-povm", "--dim", "3", "--outcomes", "5", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout, "identical seeds must give identical bytes");
    assert!(!a.stdout.is_empty());

    let s1 = run(&["fixtures", "sic2"]);
    let s2 = run(&["fixtures", "sic2"]);
    assert_eq!(s1.code, 0);
    assert_eq!(s1.stdout, s2.stdout);

    let e1 = run(&["--exact", "fixtures", "random-povm", "--dim", "2", "--outcomes", "3", "--seed", "9"]);
    let e2 = run(&["--exact", "fixtures", "random-povm", "--dim", "2", "--outcomes", "3", "--seed", "9"]);
    assert_eq!(e1.code, 0);
    assert_eq!(e1.stdout, e2.stdout);
    assert!(e1.stdout.contains("e-") || e1.stdout.contains("e0"), "exact mode writes decimal strings");
}

#[test]
fn exit_codes_cover_the_contract() {
    let dir = tempfile::tempdir().expect("tempdir");
    let obs2 = fixture(dir.path(), "obs2.json", &["observable", "--dim", "2"]);

    // Valid input: exit 0, verdict "valid".
    let ok = run(&["validate", path_str(&obs2)]);
    assert_eq!(ok.code, 0, "stderr: {}", ok.stderr);
    assert_eq!(json_of(&ok.stdout)["verdict"], "valid");

    // Semantically invalid input (elements do not sum to the identity):
    // exit 2, an `invalid` report on stdout, a diagnostic on stderr.
    let text = std::fs::read_to_string(&obs2).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["elements"][0][0][0] = Value::from(0.75);
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, doc.to_string()).unwrap();
    let bad = run(&["validate", path_str(&broken)]);
    assert_eq!(bad.code, 2);
    assert_eq!(json_of(&bad.stdout)["verdict"], "invalid");
    assert!(!bad.stderr.is_empty(), "diagnostic expected on stderr");

    // Structurally malformed JSON: usage error, exit 1.
    let garbled = dir.path().join("garbled.json");
    std::fs::write(&garbled, "{ not json").unwrap();
    let g = run(&["validate", path_str(&garbled)]);
    assert_eq!(g.code, 1);

    // Unknown flag: exit 1. Help: exit 0.
    assert_eq!(run(&["validate", "--no-such-flag", path_str(&obs2)]).code, 1);
    let help = run(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("povmkit"));

    // Tolerance override: malformed value refuses to run, valid value runs.
    let mut c = povmkit();
    c.env("POVM_CLEAN_TOL", "abc").args(["validate", path_str(&obs2)]);
    assert_eq!(finish(c.output().unwrap()).code, 1);
    let mut c = povmkit();
    c.env("POVM_CLEAN_TOL", "1e-5").args(["validate", path_str(&obs2)]);
    assert_eq!(finish(c.output().unwrap()).code, 0);
}

#[test]
fn order_report_verifies_and_rejects_corruption() {
    let dir = tempfile::tempdir().expect("tempdir");
    let obs3 = fixture(dir.path(), "obs3.json", &["observable", "--dim", "3"]);
    let r33 = fixture(
        dir.path(),
        "r33.json",
        &["random-povm", "--dim", "3", "--outcomes", "3", "--seed", "11"],
    );

    // A sharp observable reaches any same-dimension measurement through a
    // measure-and-prepare channel, so the pre-processing order holds.
    let rep = run(&["order", "--relation", "pre", path_str(&obs3), path_str(&r33)]);
    assert_eq!(rep.code, 0, "stderr: {}", rep.stderr);
    let doc = json_of(&rep.stdout);
    assert_eq!(doc["verdict"], "holds");
    assert_eq!(doc["witness"]["kind"], "channel");
    let rep_path = dir.path().join("order_report.json");
    std::fs::write(&rep_path, &rep.stdout).unwrap();

    let v = run(&["verify", path_str(&rep_path)]);
    assert_eq!(v.code, 0, "verify said: {}{}", v.stdout, v.stderr);
    assert_eq!(json_of(&v.stdout)["verdict"], "valid");

    // Corrupt one Kraus entry of the embedded witness: the independent
    // re-check must reject the report.
    let mut doc = doc;
    let entry = &mut doc["witness"]["channel"]["kraus"][0][0][0];
    let bumped = entry.as_f64().unwrap() + 0.05;
    *entry = Value::from(bumped);
    let bad_path = dir.path().join("order_report_corrupt.json");
    std::fs::write(&bad_path, doc.to_string()).unwrap();
    let bad = run(&["verify", path_str(&bad_path)]);
    assert_eq!(bad.code, 2, "corrupted witness must fail verification");
    assert_eq!(json_of(&bad.stdout)["verdict"], "invalid");
    assert!(bad.stderr.contains("FAIL"), "stderr: {}", bad.stderr);
}

#[test]
fn post_order_stochastic_witness_round_trips() {
    let dir = tempfile::tempdir().expect("tempdir");
    let r34 = fixture(
        dir.path(),
        "r34.json",
        &["random-povm", "--dim", "3", "--outcomes", "4", "--seed", "23"],
    );

    // Coarse-grain outcomes 0 and 1 by hand; the fine measurement then
    // dominates the coarse one under classical post-processing.
    let text = std::fs::read_to_string(&r34).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    let els = doc["elements"].as_array().unwrap();
    let mut merged = els[0].clone();
    {
        let m = merged.as_array_mut().unwrap();
        for (k, pair) in m.iter_mut().enumerate() {
            let p = pair.as_array_mut().unwrap();
            for part in 0..2 {
                let a = p[part].as_f64().unwrap();
                let b = els[1][k][part].as_f64().unwrap();
                p[part] = Value::from(a + b);
            }
        }
    }
    let coarse = serde_json::json!({
        "schema": "povm/1",
        "dim": 3,
        "elements": [merged, els[2].clone(), els[3].clone()],
    });
    let coarse_path = dir.path().join("coarse.json");
    std::fs::write(&coarse_path, coarse.to_string()).unwrap();

    let rep = run(&["order", "--relation", "post", path_str(&r34), path_str(&coarse_path)]);
    assert_eq!(rep.code, 0, "stderr: {}", rep.stderr);
    let doc = json_of(&rep.stdout);
    assert_eq!(doc["verdict"], "holds");
    assert_eq!(doc["witness"]["kind"], "stochastic");
    let rep_path = dir.path().join("post_report.json");
    std::fs::write(&rep_path, &rep.stdout).unwrap();
    let v = run(&["verify", path_str(&rep_path)]);
    assert_eq!(v.code, 0, "verify said: {}{}", v.stdout, v.stderr);
}

#[test]
fn clean_domination_witness_round_trips() {
    let dir = tempfile::tempdir().expect("tempdir");
    let r32 = fixture(
        dir.path(),
        "r32.json",
        &["random-povm", "--dim", "3", "--outcomes", "2", "--seed", "5"],
    );

    let wfile = dir.path().join("witness.json");
    let rep = run(&[
        "clean",
        path_str(&r32),
        "--mode",
        "variable",
        "--witness",
        path_str(&wfile),
    ]);
    assert_eq!(rep.code, 2, "a generic higher-rank measurement is not clean");
    let doc = json_of(&rep.stdout);
    assert_eq!(doc["verdict"], "not-clean");
    assert_eq!(doc["witness"]["kind"], "domination");
    let wdoc: Value = serde_json::from_str(&std::fs::read_to_string(&wfile).unwrap()).unwrap();
    assert_eq!(wdoc["kind"], "domination", "--witness file carries the same witness");

    let rep_path = dir.path().join("clean_report.json");
    std::fs::write(&rep_path, &rep.stdout).unwrap();
    let v = run(&["verify", path_str(&rep_path)]);
    assert_eq!(v.code, 0, "verify said: {}{}", v.stdout, v.stderr);
    assert_eq!(json_of(&v.stdout)["verdict"], "valid");
}

#[test]
fn range_report_verifies() {
    let dir = tempfile::tempdir().expect("tempdir");
    let obs3 = fixture(dir.path(), "obs3.json", &["observable", "--dim", "3"]);

    let rep = run_in(
        dir.path(),
        &[
            "range",
            "obs3.json",
            "--point",
            "0.3333333333333333,0.3333333333333334,0.3333333333333333",
        ],
    );
    assert_eq!(rep.code, 0, "stderr: {}", rep.stderr);
    let doc = json_of(&rep.stdout);
    assert_eq!(doc["verdict"], "holds");
    assert_eq!(doc["witness"]["kind"], "state");
    let rep_path = dir.path().join("range_report.json");
    std::fs::write(&rep_path, &rep.stdout).unwrap();
    let v = run(&["verify", path_str(&rep_path)]);
    assert_eq!(v.code, 0, "verify said: {}{}", v.stdout, v.stderr);

    // A quasi-probability with a negative coordinate is never reached.
    let neg = run(&["range", path_str(&obs3), "--point", "0.9,0.6,-0.5"]);
    assert_eq!(neg.code, 2);
    assert_eq!(json_of(&neg.stdout)["verdict"], "fails");
}

#[test]
fn exact_mode_round_trips_bit_for_bit() {
    let dir = tempfile::tempdir().expect("tempdir");
    let plain = fixture(
        dir.path(),
        "plain.json",
        &["random-povm", "--dim", "3", "--outcomes", "4", "--seed", "41"],
    );
    let exact = dir.path().join("exact.json");
    let r = run(&[
        "--exact",
        "fixtures",
        "random-povm",
        "--dim",
        "3",
        "--outcomes",
        "4",
        "--seed",
        "41",
        "--out",
        path_str(&exact),
    ]);
    assert_eq!(r.code, 0);

    // Validating either file re-embeds the parsed operators in plain form;
    // byte-identical reports mean the decimal strings restored every double
    // exactly.
    let vp = run(&["validate", path_str(&plain)]);
    let ve = run(&["validate", path_str(&exact)]);
    assert_eq!(vp.code, 0);
    assert_eq!(ve.code, 0);
    assert_eq!(vp.stdout, ve.stdout, "exact serialization must round-trip bit-for-bit");
}

#[test]
fn classify_reports_structure_flags() {
    let dir = tempfile::tempdir().expect("tempdir");
    let obs3 = fixture(dir.path(), "obs3.json", &["observable", "--dim", "3"]);
    let r = run(&["classify", path_str(&obs3)]);
    assert_eq!(r.code, 0);
    let doc = json_of(&r.stdout);
    assert_eq!(doc["structure"]["observable"], true);
    assert_eq!(doc["structure"]["rank_one"], true);
    assert_eq!(doc["structure"]["abelian"], true);
    assert_eq!(doc["structure"]["trivial"], false);

    let sic = fixture(dir.path(), "sic2.json", &["sic2"]);
    let s = run(&["classify", path_str(&sic)]);
    assert_eq!(s.code, 0);
    let sdoc = json_of(&s.stdout);
    assert_eq!(sdoc["structure"]["observable"], false);
    assert_eq!(sdoc["structure"]["rank_one"], true);
    assert_eq!(sdoc["structure"]["infocomplete"], true);
}

#[test]
fn counterexample_demos_confirm() {
    let r = run(&["counterexamples"]);
    assert_eq!(r.code, 0, "stderr: {}", r.stderr);
    let doc = json_of(&r.stdout);
    assert_eq!(doc["confirmed"], true);
    assert_eq!(doc["positivity_preserved"], true);
}

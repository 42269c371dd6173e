use std::path::PathBuf;
use std::process::{Command, Output};

use capsafe_cli::input::ModelJson;
use capsafe_cli::schema::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "core", "fixtures", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn capsafe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capsafe")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

/// Parses `--json` output into `T` and checks nothing was lost on the way.
fn json<T: DeserializeOwned + Serialize>(args: &[&str]) -> (T, i32) {
    let mut full = vec!["--json"];
    full.extend_from_slice(args);
    let o = capsafe(&full);
    let raw: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{args:?}: {e}"));
    let typed: T = serde_json::from_value(raw.clone()).unwrap();
    assert_eq!(serde_json::to_value(&typed).unwrap(), raw, "{args:?}");
    (typed, code(&o))
}

fn scratch_file(name: &str, body: &str) -> String {
    let dir = std::env::temp_dir().join(format!("capsafe-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn joint_session_is_safe() {
    let o = capsafe(&["check-safe", &fixture("telco.cap"), "--init", "c1,c2,c3,c5,c7,c8"]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "safe\n"));
}

#[test]
fn bf_lists_the_h6_witness() {
    let o = capsafe(&["bf", &fixture("telco.cap")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l == "{c3,c10}"));
}

#[test]
fn closure_of_empty_model() {
    let o = capsafe(&["closure", &fixture("empty.cap")]);
    assert_eq!((code(&o), stdout(&o).as_str()), (0, "{}\n"));
}

#[test]
fn exit_codes() {
    let unsafe_run = capsafe(&["check-safe", "@telco-and-violation", "--init", "c3,c10"]);
    assert_eq!(code(&unsafe_run), 1);
    assert_eq!(stdout(&unsafe_run), "unsafe: reaches {c12}\n");
    assert_eq!(code(&capsafe(&["no-such-command"])), 2);
    assert_eq!(code(&capsafe(&["closure", "/definitely/missing.cap"])), 2);
    assert_eq!(code(&capsafe(&["closure", "@telco", "--init", "zz"])), 2);
    assert_eq!(code(&capsafe(&["bench-gap", "--sizes", "8,4"])), 2);
    assert_eq!(code(&capsafe(&["--help"])), 0);
    let bad = scratch_file("bad.cap", "edge a -> a\n");
    let o = capsafe(&["closure", &bad]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn json_outputs_follow_their_schema() {
    let (c, _) = json::<ClosureOut>(&["closure", "@telco", "--init", "c1,c2"]);
    let depth = |a: &str| c.depths.iter().find(|d| d.atom == a).unwrap().depth;
    assert_eq!((depth("c6"), depth("c9")), (2, 2));

    let (s, code) = json::<CheckSafeOut>(&["check-safe", "@telco", "--init", "c3,c10"]);
    assert_eq!((s.safe, s.reached_forbidden, code), (false, vec!["c12".to_string()], 1));

    let (a, _) = json::<AuditOut>(&["audit", "@telco", "--init", "c1,c2", "--k", "3"]);
    assert_eq!(a.emergent, ["c6", "c9"]);
    assert_eq!(a.k, 3);

    let (b, _) = json::<BfOut>(&["bf", "@telco"]);
    assert!(b.complete && b.witnesses.contains(&vec!["c3".to_string(), "c10".to_string()]));

    let (w, _) = json::<WhyOut>(&["why", "@telco", "--atom", "c9", "--universe", "c1,c2"]);
    assert_eq!(w.entries[0].witnesses, [["c1", "c2"]]);

    let (cert, _) = json::<CertificateOut>(&["certify", "@telco", "--init", "c1,c2", "--atom", "c9", "--minimal"]);
    assert_eq!(cert.base, ["c1", "c2"]);
    let (v, code) = json::<VerifyOut>(&["certify", "@telco", "--verify", &cert.text]);
    assert_eq!((v.valid, code), (true, 0));
    let (none, code) = json::<Option<CertificateOut>>(&["certify", "@telco", "--init", "c1", "--atom", "c9"]);
    assert_eq!((none, code), (None, 1));

    let args = ["coalition", "@telco-and-violation", "--config", "c1,c2,c3,c4,c5", "--config", "c1,c2,c10"];
    let (co, code) = json::<CoalitionOut>(&args);
    assert_eq!((co.safe, co.witness, code), (false, Some(vec!["c3".into(), "c10".into()]), 1));

    let (e, _) = json::<EncodeOut>(&["encode", "@telco"]);
    assert!(e.program.contains("forbidden :- has(c12)."));

    let ops = scratch_file("ops.txt", "insert c3 c5 -> c11\ndelete c1 -> c3 # drop\n");
    let (t, _) = json::<DredTraceOut>(&["dred-trace", "@telco", "--init", "c1,c2", "--ops", &ops, "--check"]);
    assert_eq!(t.updates.len(), 2);
    assert_eq!(t.updates[0].cone, ["c11"]);

    let (rows, _) = json::<Vec<GapRowOut>>(&["bench-gap", "--sizes", "2,8", "--trials", "1"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1].naive_closure_evals, 11);

    let (probes, _) = json::<Vec<ProbeRowOut>>(&["oracle-probes", "--k-max", "3"]);
    assert_eq!(probes.len(), 2 * (1 + 2 + 3 + 3));
}

#[test]
fn encode_then_decode_reproduces_the_model() {
    let enc = capsafe(&["encode", "@telco"]);
    let path = scratch_file("telco.dl", &stdout(&enc));
    let dec = capsafe(&["decode", &path]);
    assert_eq!(code(&dec), 0);
    let original = std::fs::read_to_string(fixture("telco.cap")).unwrap();
    let (orig_sm, _) = capsafe::modelfile::parse_model(&original).unwrap();
    let empty = capsafe::AtomSet::new();
    assert_eq!(stdout(&dec), capsafe::modelfile::to_text(&orig_sm, &empty));
    let (back, _) = json::<ModelJson>(&["decode", &path]);
    assert_eq!(back.forbidden, ["c12"]);
}

#[test]
fn json_models_match_text_models() {
    let j = r#"{"edges":[{"tail":["a","b"],"heads":["c","d"]},{"heads":["a"]}],"forbidden":["d"],"init":["b"]}"#;
    let path = scratch_file("m.json", j);
    let o = capsafe(&["--format", "json", "closure", &path]);
    assert_eq!(stdout(&o), "{a,b,c,d}\n");
    let text = scratch_file("m.cap", "edge a b -> c d\nedge -> a\nforbidden d\ninit b\n");
    assert_eq!(stdout(&capsafe(&["closure", &text])), stdout(&o));
    let bad = scratch_file("bad.json", r#"{"edges":[],"extra":1}"#);
    assert_eq!(code(&capsafe(&["--format", "json", "closure", &bad])), 2);
}

#[test]
fn containment_command() {
    let p1 = scratch_file("p1.dl", "% atoms a, b, c\nb :- a.\nc :- b.\n");
    let p2 = scratch_file("p2.dl", "% atoms a, b, c\nb :- a.\nc :- a.\nc :- b.\n");
    assert_eq!(code(&capsafe(&["contain", &p1, &p2])), 0);
    let o = capsafe(&["contain", &p2, &p1]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let p3 = scratch_file("p3.dl", "% atoms a, b, c\nc :- a.\n");
    assert_eq!(stdout(&capsafe(&["contain", &p1, &p3])), "not contained\n");
    // only databases holding `a` give `a`, under either program
    assert_eq!(code(&capsafe(&["contain", &p1, &p3, "--query", "a"])), 0);
    // {b} gives c under p1 alone
    assert_eq!(code(&capsafe(&["contain", &p1, &p3, "--query", "c"])), 1);
}

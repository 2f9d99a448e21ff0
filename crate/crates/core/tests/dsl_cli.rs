use causal_audit::audit::{classify_biases, corpus, parse_spec, render_report, render_spec, Format};
use causal_audit::cli;

fn fixture(rel: &str) -> String {
    format!("{}/../../fixtures/{rel}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["causal-audit"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn every_fixture_round_trips() {
    for f in corpus::FIXTURES {
        let spec = parse_spec(f.source).unwrap_or_else(|e| panic!("{}: {e}", f.path));
        let printed = render_spec(&spec);
        let again = parse_spec(&printed).unwrap_or_else(|e| panic!("{} reprinted: {e}\n{printed}", f.path));
        assert_eq!(spec, again, "{}", f.path);
        assert_eq!(printed, render_spec(&again));
    }
}

#[test]
fn first_case_study_shape_and_labels() {
    let spec = parse_spec(corpus::find("cs1").unwrap().source).unwrap();
    assert_eq!(spec.graph.len(), 5);
    assert_eq!(spec.graph.directed_edges().count(), 8);
    let report = classify_biases(&spec);
    let json = render_report(&report, Format::Machine);
    assert!(json.contains(r#""bias_labels":["confounding"]"#), "{json}");
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["bias_labels", "spec", "verdicts", "version"].iter().collect::<Vec<_>>());
    assert!(json.starts_with(r#"{"spec":"#));
    assert_eq!(json, render_report(&classify_biases(&spec), Format::Machine));
    assert_eq!(render_report(&report, Format::Human), render_report(&report, Format::Human));
}

#[test]
fn undeclared_endpoint_reports_line() {
    let err = parse_spec("graph g {\n    node X, Z;\n    X -> Y;\n}\n").unwrap_err();
    assert_eq!(err.to_string(), "line 3:10: unknown node `Y`");
}

#[test]
fn audit_machine_output() {
    let (code, out, _) = run(&["audit", &fixture("cs01/cs1.audit"), "--format", "machine"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"confounding\""));
    serde_json::from_str::<serde_json::Value>(out.trim_end()).unwrap();
    let (code, again, _) = run(&["audit", &fixture("cs01/cs1.audit"), "--format", "machine"]);
    assert_eq!((code, again), (0, out));
}

#[test]
fn fail_on_bias() {
    assert_eq!(run(&["audit", &fixture("cs01/cs1.audit"), "--fail-on-bias"]).0, 1);
    assert_eq!(run(&["audit", &fixture("fig3_collider.audit"), "--fail-on-bias"]).0, 0);
}

#[test]
fn dsep_command() {
    let (code, out, _) = run(&["dsep", &fixture("fig3_chain.audit"), "X", "Z", "--given", "Y"]);
    assert_eq!(code, 0);
    assert_eq!(out, "d-separated: true\n");
    let (code, out, _) = run(&["dsep", &fixture("fig3_collider.audit"), "X", "Z", "--given", "Y"]);
    assert_eq!(code, 0);
    assert_eq!(out, "d-separated: false\nopen path: X -> Y <- Z\n");
    assert_eq!(run(&["dsep", &fixture("fig3_chain.audit"), "X", "Q"]).0, 2);
}

#[test]
fn single_query_commands() {
    let (code, out, _) = run(&["identify", &fixture("fig4_i.audit"), "X", "Z"]);
    assert_eq!(code, 0);
    assert!(out.contains("identified-by-backdoor {A, G, M}"));
    assert!(out.contains("sum_{A,G,M} P(Z | X=x, A, G, M) * P(A, G, M)"));

    let (code, out, _) = run(&["selection", &fixture("fig5_ii.audit"), "X", "Z", "--adjust", "V"]);
    assert_eq!(code, 0);
    assert!(out.contains("not-recoverable"));

    let (code, out, _) = run(&["transport", &fixture("fig6_ii.audit"), "X", "Z"]);
    assert_eq!(code, 0);
    assert!(out.contains("not-established (discrepancy-on-target)"));

    let (code, out, _) = run(&["quantify", &fixture("fig4_i.audit"), "X=1", "Z=1"]);
    assert_eq!(code, 0);
    assert!(out.contains("do=0.642000"), "{out}");

    // Selection needs a selection node.
    let (code, _, err) = run(&["selection", &fixture("fig4_i.audit"), "X", "Z"]);
    assert_eq!(code, 2);
    assert!(err.contains("selection"));
}

#[test]
fn input_errors_exit_2() {
    let (code, _, err) = run(&["identify", "missing.audit", "X", "Z"]);
    assert_eq!(code, 2);
    assert!(err.contains("missing.audit"));
    assert_eq!(run(&[]).0, 2);
    assert_eq!(run(&["bogus"]).0, 2);
    assert_eq!(run(&["quantify", &fixture("fig4_i.audit"), "X", "Z=1"]).0, 2);

    let path = std::env::temp_dir().join(format!("causal-audit-bad-{}.audit", std::process::id()));
    std::fs::write(&path, "graph g {\n  node X\n}\n").unwrap();
    let (code, _, err) = run(&["audit", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert_eq!(code, 2);
    assert!(err.contains("3:1"), "{err}");
}

#[test]
fn fixtures_command() {
    let (code, out, _) = run(&["fixtures", "run"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.ends_with("21/21 fixtures passed\n"));
    let (code, out, _) = run(&["fixtures", "run", "--only", "cs1"]);
    assert_eq!((code, out.as_str()), (0, "PASS cs01\n1/1 fixtures passed\n"));
    assert_eq!(run(&["fixtures", "run", "--only", "cs99"]).0, 2);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_causal-audit");
    let status = std::process::Command::new(exe).args(["identify", "missing.audit", "X", "Z"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let ok = std::process::Command::new(exe)
        .args(["dsep", &fixture("fig3_chain.audit"), "X", "Z", "--given", "Y"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout), "d-separated: true\n");
}

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_parsheaf"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    child
        .stdin
        .as_mut()
        .expect("stdin piped")
        .write_all(input.as_bytes())
        .expect("stdin accepts input");
    child.wait_with_output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf8 stderr")
}

#[test]
fn repro_targets_self_verify() {
    for target in [
        "dependence_chart",
        "log_point_closure",
        "my_comparison",
        "stable_slice",
        "pullback_classification",
        "envelope_examples",
        "pushforward_unit",
    ] {
        let out = run(&["repro", target]);
        let text = stdout_of(&out);
        assert_eq!(out.status.code(), Some(0), "{target} failed:\n{text}");
        assert!(text.contains("PASS"), "{target} printed no PASS lines");
        assert!(!text.contains("MISMATCH"), "{target} mismatched:\n{text}");
    }
}

#[test]
fn non_simplicial_mismatch_is_reported_honestly() {
    let out = run(&["repro", "non_simplicial", "--degree", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout_of(&out);
    assert!(text.contains("degree 5 witness slope: expected m + 3, computed m + 5/2"));
    assert!(text.contains("MISMATCH"));
    assert!(text.contains("degree 5 slope: m + 13/6 [worked-example] PASS"));
}

#[test]
fn unknown_repro_target_is_an_input_error() {
    let out = run(&["repro", "no_such_target"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown repro target"));
}

#[test]
fn repro_json_reports_per_check_outcomes() {
    let out = run(&["repro", "non_simplicial", "--degree", "3", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid JSON");
    assert_eq!(v["target"], "non_simplicial");
    assert_eq!(v["pass"], false);
    let checks = v["checks"].as_array().expect("checks array");
    assert_eq!(checks.len(), 5);
    let failed: Vec<&serde_json::Value> =
        checks.iter().filter(|c| c["pass"] == false).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0]["label"], "degree 3 witness slope");
    assert_eq!(failed[0]["source"], "worked-example");
    for c in checks {
        let s = c["source"].as_str().expect("source string");
        assert!(["worked-example", "recomputed", "direct"].contains(&s));
    }
}

#[test]
fn validate_accepts_fixtures() {
    for name in [
        "dependence_o20.json",
        "dependence_o11.json",
        "non_simplicial_d5.json",
        "log_point_level1.json",
        "log_point_level2.json",
        "my_filtration.json",
        "stable_slice_line.json",
        "unit_tower_line.json",
    ] {
        let path = fixture(name);
        let out = run(&["sheaf", "validate", "--input", path.to_str().expect("utf8 path")]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", stdout_of(&out));
        assert_eq!(stdout_of(&out), "ok\n");
    }
}

#[test]
fn validate_rejects_bad_input_with_exit_two() {
    let out = run_with_stdin(&["sheaf", "validate"], "not json");
    assert_eq!(out.status.code(), Some(2));

    let out = run_with_stdin(&["sheaf", "validate"], "{\"version\": 7}");
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_of(&out).contains("unsupported document version 7"));

    let out = run_with_stdin(&["sheaf", "validate", "--json"], "{\"version\": 7}");
    assert_eq!(out.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid JSON");
    assert_eq!(v["ok"], false);
}

#[test]
fn slope_depends_on_the_chart() {
    let path = fixture("dependence_o20.json");
    let path = path.to_str().expect("utf8 path");
    let std_out = run(&["sheaf", "slope", "--input", path]);
    assert_eq!(std_out.status.code(), Some(0));
    assert!(stdout_of(&std_out).contains("slope: m^2 + 3m + 2"));

    let rel_out = run(&["sheaf", "slope", "--input", path, "--chart", "relation"]);
    assert_eq!(rel_out.status.code(), Some(0));
    assert!(stdout_of(&rel_out).contains("slope: m^2 + (3/2)m + 1/2"));

    let missing = run(&["sheaf", "slope", "--input", path, "--chart", "nope"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr_of(&missing).contains("unknown generating chart"));
}

#[test]
fn slope_json_round_trips_polynomials() {
    let path = fixture("dependence_o11.json");
    let out = run(&[
        "sheaf",
        "slope",
        "--input",
        path.to_str().expect("utf8 path"),
        "--chart",
        "relation",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid JSON");
    assert_eq!(v["slope"]["coeffs"], serde_json::json!(["-1", "3/2", "1"]));
    assert_eq!(v["modified_hilbert"]["coeffs"], serde_json::json!(["-16", "24", "16"]));
    let gammas: Vec<&str> = v["groups"]
        .as_array()
        .expect("groups")
        .iter()
        .map(|g| g["gamma"].as_str().expect("gamma string"))
        .collect();
    assert_eq!(gammas, ["1/8", "1/8", "1/8", "5/8"]);
}

#[test]
fn piece_reports_class_twist_and_euler() {
    let path = fixture("dependence_o20.json");
    let out = run(&[
        "sheaf",
        "piece",
        "--input",
        path.to_str().expect("utf8 path"),
        "-1/2,0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("weight (-1/2,0): class 1, twist (0,0)"));
    assert!(text.contains("summands: (2,0)"));
    assert!(text.contains("euler: m^2 + 4m + 3"));
}

#[test]
fn verdict_expectations_drive_the_exit_code() {
    let path = fixture("log_point_level2.json");
    let path = path.to_str().expect("utf8 path");
    let ok = run(&["sheaf", "verdict", "--input", path, "--expect", "semistable"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout_of(&ok).contains("expectation semistable: holds"));

    let bad = run(&["sheaf", "verdict", "--input", path, "--expect", "stable"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout_of(&bad).contains("expectation stable: failed, found strictly-semistable"));

    let nonsense = run(&["sheaf", "verdict", "--input", path, "--expect", "great"]);
    assert_eq!(nonsense.status.code(), Some(2));
    assert!(stderr_of(&nonsense).contains("unknown expectation"));
}

#[test]
fn stability_verdict_matches_sheaf_verdict() {
    let path = fixture("non_simplicial_d5.json");
    let path = path.to_str().expect("utf8 path");
    let a = run(&["sheaf", "verdict", "--input", path]);
    let b = run(&["stability", "verdict", "--input", path]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout_of(&a), stdout_of(&b));
    assert!(stdout_of(&a).contains("status: unstable"));
}

#[test]
fn verdict_cap_refuses_oversized_classes() {
    let path = fixture("log_point_level2.json");
    let out = run(&[
        "sheaf",
        "verdict",
        "--input",
        path.to_str().expect("utf8 path"),
        "--cap",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("cap exceeded"));
}

#[test]
fn hn_steps_decrease_in_slope() {
    let path = fixture("non_simplicial_d5.json");
    let out = run(&[
        "stability",
        "hn",
        "--input",
        path.to_str().expect("utf8 path"),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).expect("valid JSON");
    let steps = v["steps"].as_array().expect("steps");
    assert_eq!(steps.len(), 2);
    assert_eq!(steps[0]["slope"]["coeffs"], serde_json::json!(["5/2", "1"]));
    assert_eq!(steps[1]["slope"]["coeffs"], serde_json::json!(["2", "1"]));
}

#[test]
fn jh_splits_the_pullback_into_two_slices() {
    let path = fixture("log_point_level2.json");
    let out = run(&["stability", "jh", "--input", path.to_str().expect("utf8 path")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("common slope: 1"));
    assert!(text.contains("factor 1: summands per class [1, 0]"));
    assert!(text.contains("factor 2: summands per class [0, 1]"));
}

#[test]
fn sequiv_compares_two_documents() {
    let path = fixture("log_point_level2.json");
    let path = path.to_str().expect("utf8 path");
    let same = run(&["stability", "sequiv", "--input", path, path]);
    assert_eq!(same.status.code(), Some(0));
    let text = stdout_of(&same);
    assert!(text.contains("s-equivalent: yes"));
    assert!(text.contains("isomorphic: yes"));
}

#[test]
fn pullback_pushforward_round_trip_is_byte_identical() {
    let path = fixture("stable_slice_line.json");
    let original = std::fs::read_to_string(&path).expect("fixture readable");
    let up = run(&[
        "rootops",
        "pullback",
        "--input",
        path.to_str().expect("utf8 path"),
        "--level",
        "2",
    ]);
    assert_eq!(up.status.code(), Some(0));
    let up_doc = stdout_of(&up);
    let down = run_with_stdin(&["rootops", "pushforward"], &up_doc);
    assert_eq!(down.status.code(), Some(0));
    assert_eq!(stdout_of(&down), original);
}

#[test]
fn pullback_accepts_an_explicit_step() {
    let path = fixture("unit_tower_line.json");
    let out = run(&[
        "rootops",
        "pullback",
        "--input",
        path.to_str().expect("utf8 path"),
        "--step",
        "{\"target_q\": [[\"1/3\"]]}",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_of(&out);
    assert!(text.contains("\"1/3\""));

    let conflict = run(&[
        "rootops",
        "pullback",
        "--input",
        path.to_str().expect("utf8 path"),
        "--level",
        "2",
        "--step",
        "{\"level\": 3}",
    ]);
    assert_eq!(conflict.status.code(), Some(2));
}

#[test]
fn rootops_output_parses_as_a_document() {
    let path = fixture("unit_tower_line.json");
    let out = run(&[
        "rootops",
        "pullback",
        "--input",
        path.to_str().expect("utf8 path"),
        "--level",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = parsheaf::doc::parse_document(&stdout_of(&out)).expect("output is a valid document");
    assert_eq!(doc.sheaf.classes.len(), 4);
}

#[test]
fn twist_offsets_agree_on_pure_pullbacks_only() {
    // A pure pullback pushes forward to the same line at every offset.
    let path = fixture("unit_tower_line.json");
    let up = run(&[
        "rootops",
        "pullback",
        "--input",
        path.to_str().expect("utf8 path"),
        "--level",
        "3",
    ]);
    assert_eq!(up.status.code(), Some(0));
    let up_doc = stdout_of(&up);
    let plain = run_with_stdin(&["rootops", "twist", "0"], &up_doc);
    assert_eq!(plain.status.code(), Some(0));
    let down = run_with_stdin(&["rootops", "pushforward"], &up_doc);
    assert_eq!(stdout_of(&plain), stdout_of(&down));
    let shifted = run_with_stdin(&["rootops", "twist", "1"], &up_doc);
    assert_eq!(shifted.status.code(), Some(0));
    assert_eq!(stdout_of(&shifted), stdout_of(&plain));

    // A sheaf with uneven weights separates the offsets.
    let mixed = fixture("twisted_tower.json");
    let mixed = mixed.to_str().expect("utf8 path");
    let t0 = run(&["rootops", "twist", "--input", mixed, "0"]);
    let t2 = run(&["rootops", "twist", "--input", mixed, "2"]);
    assert_eq!(t0.status.code(), Some(0));
    assert_eq!(t2.status.code(), Some(0));
    assert_ne!(stdout_of(&t0), stdout_of(&t2));

    let out_of_range = run(&["rootops", "twist", "--input", mixed, "3"]);
    assert_eq!(out_of_range.status.code(), Some(2));
}

#[test]
fn adjunction_reports_direction_and_exit() {
    let small = fixture("unit_tower_line.json");
    let small = small.to_str().expect("utf8 path");
    let unit = run(&["rootops", "adjunction", "--input", small, "--level", "2"]);
    assert_eq!(unit.status.code(), Some(0));
    let text = stdout_of(&unit);
    assert!(text.contains("comparison: unit"));
    assert!(text.contains("isomorphism: yes"));

    let up = run(&["rootops", "pullback", "--input", small, "--level", "2"]);
    let descent = run_with_stdin(&["rootops", "adjunction", "--level", "1"], &stdout_of(&up));
    assert_eq!(descent.status.code(), Some(0));
    assert!(stdout_of(&descent).contains("comparison: descent"));
}

#[test]
fn monoid_commands_read_fragments_from_stdin() {
    let square = "{\"ambient_rank\": 2, \"generators\": [[2,0],[1,1],[0,2]]}";
    let info = run_with_stdin(&["monoid", "info"], square);
    assert_eq!(info.status.code(), Some(0));
    let text = stdout_of(&info);
    assert!(text.contains("indecomposables: (0,2), (1,1), (2,0)"));
    assert!(text.contains("relation: 2*(1,1) = 1*(0,2) + 1*(2,0)"));

    let envelope = run_with_stdin(&["monoid", "envelope"], square);
    assert_eq!(envelope.status.code(), Some(0));
    assert!(stdout_of(&envelope).contains("envelope: <(0,1), (1,0)>"));

    let refused = run_with_stdin(
        &["monoid", "envelope"],
        "{\"ambient_rank\": 1, \"generators\": [[2],[3]]}",
    );
    assert_eq!(refused.status.code(), Some(2));
    assert!(stderr_of(&refused)
        .contains("two indecomposables [2], [3] on one extremal ray"));

    let quotient = run_with_stdin(
        &["monoid", "quotient"],
        "{\"p\": {\"ambient_rank\": 1, \"generators\": [[1]]}, \"q\": [[\"1/2\"]]}",
    );
    assert_eq!(quotient.status.code(), Some(0));
    let text = stdout_of(&quotient);
    assert!(text.contains("weight classes: 2"));
    assert!(text.contains("invariant factors: 2"));
}

#[test]
fn missing_input_file_is_an_input_error() {
    let out = run(&["sheaf", "validate", "--input", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("/no/such/file.json"));
}

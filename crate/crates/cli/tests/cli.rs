use serde_json::Value;
use std::process::{Command, Output};

fn cardy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cardy"))
        .args(args)
        .current_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures"))
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = cardy(&all);
    let v = serde_json::from_slice(&out.stdout).expect("report is JSON");
    (out.status.code().unwrap(), v)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn semisimple_algebra_reports_its_idempotents() {
    let (code, v) = json(&["algebra", "algebra_x2_minus_1.json"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["tool"], "cardy");
    assert_eq!(v["seed"], 0);
    assert_eq!(v["tolerances"]["eps_structural"], 1e-9);
    let e = &v["results"]["idempotents"];
    // (1 ∓ x)/2 in canonical order
    assert_eq!(e[0], serde_json::json!([[0.5, 0.0], [-0.5, 0.0]]));
    assert_eq!(e[1], serde_json::json!([[0.5, 0.0], [0.5, 0.0]]));
    assert!(v.get("wall_time_ms").is_none());
}

#[test]
fn dual_numbers_fail_semisimplicity() {
    let (code, v) = json(&["algebra", "algebra_dual_numbers.json"]);
    assert_eq!(code, 1);
    assert_eq!(v["status"], "fail");
}

#[test]
fn branes_pass_and_zero_weight_is_an_input_error() {
    let (code, v) = json(&["branes", "branes.json"]);
    assert_eq!(code, 0, "{v}");
    let out = cardy(&["branes", "branes_zero_weight.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("degenerate trace"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn square_root_family_has_swap_monodromy() {
    let (code, v) = json(&["family", "family_sqrt_circle.json"]);
    assert_eq!(code, 0);
    let m = v["results"]["monodromy"].as_array().unwrap();
    assert_eq!(m[0]["permutation"], "(1 2)");
    assert_eq!(m[1]["permutation"], "()");
    let text = String::from_utf8(cardy(&["family", "family_sqrt_circle.json"]).stdout).unwrap();
    assert!(text.contains("(1 2)"));
    assert_eq!(json(&["family", "family_sqrt_fan.json"]).0, 0);
}

#[test]
fn malformed_input_names_the_json_pointer() {
    let out = cardy(&["family", "family_malformed.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("at /potential/1/monomial/1"), "{}", stderr(&out));
    let out = cardy(&["algebra", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupted_bdr_cocycle_is_located() {
    assert_eq!(json(&["bdr", "bdr_coherent.json"]).0, 0);
    let (code, v) = json(&["bdr", "bdr_corrupt.json"]);
    assert_eq!(code, 1);
    assert_eq!(v["results"]["suspect_edges"], serde_json::json!(["1->2"]));
    let triple = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "bdr_triple")
        .unwrap();
    let failing = triple["records"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["status"] == "fail")
        .unwrap();
    assert!(failing["location"].as_str().unwrap().contains("triangle 0,1,2"));
}

#[test]
fn twisted_subcommands() {
    assert_eq!(json(&["twisted", "validate", "line_omega.json"]).0, 0);
    assert_eq!(
        json(&[
            "twisted",
            "iso",
            "bundle_rank2_omega.json",
            "bundle_rank2_omega_conj.json"
        ])
        .0,
        0
    );
    assert_eq!(json(&["twisted", "iso", "line_omega.json", "line_trivial.json"]).0, 1);
    assert_eq!(json(&["twisted", "azumaya", "algebra_bundle_end.json"]).0, 0);
    let (code, _) = json(&[
        "twisted",
        "psi",
        "line_omega.json",
        "--reps",
        "line_trivial.json",
        "line_omega.json",
        "line_omega_inv.json",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn pipeline_runs_and_timing_is_opt_in() {
    let (code, v) = json(&["pipeline", "pipeline_fan.json"]);
    assert_eq!(code, 0);
    assert!(v.get("wall_time_ms").is_none());
    let (_, v) = json(&["pipeline", "pipeline_circle.json", "--timing"]);
    assert!(v["wall_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn out_flag_writes_the_report() {
    let dir = std::env::temp_dir().join(format!("cardy-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = cardy(&[
        "algebra",
        "algebra_x2_minus_1.json",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["status"], "pass");
    std::fs::remove_dir_all(dir).unwrap();
}

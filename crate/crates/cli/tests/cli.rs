use nsedge::linalg::{real_vector, Hermitian};
use nsedge::{fixtures, io, Assemblage, Scenario};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn golden() -> f64 {
    (3.0 - 5f64.sqrt()) / 2.0
}

fn nsedge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsedge")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("bad JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

/// Example assemblage mixed with box 0 ⊗ |0⟩⟨0| at weight `w`.
fn mixed_example(w: f64) -> Assemblage {
    let s = Scenario::binary_bipartite(2);
    let lhs = Assemblage::deterministic(&s, &s.box_at(0), &Hermitian::ket_projector(&real_vector(&[1.0, 0.0]))).unwrap();
    lhs.mix(&fixtures::example1_assemblage(), w).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&nsedge(&["--help"])), 0);
    assert_eq!(code(&nsedge(&["--version"])), 0);
    assert_eq!(code(&nsedge(&["edge", "--help"])), 0);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&nsedge(&["frobnicate"])), 64);
    assert_eq!(code(&nsedge(&["edge", "--no-such-flag"])), 64);
    assert_eq!(code(&nsedge(&["edge"])), 64);
    assert_eq!(code(&nsedge(&["edge", "--fixture", "nope"])), 64);
    assert_eq!(code(&nsedge(&["edge", "/nonexistent/file.json"])), 64);
    assert_eq!(code(&nsedge(&["--tol-ns", "-1", "validate", "--fixture", "example1"])), 64);
}

#[test]
fn validate_fixture_and_corrupted_files() {
    assert_eq!(code(&nsedge(&["validate", "--fixture", "example1"])), 0);

    let dir = tempfile::tempdir().unwrap();
    let good = io::assemblage_to_json(&fixtures::example1_assemblage());

    let mut negated = good.clone();
    negated["blocks"]["10|01"][0][0] = serde_json::json!([-0.5, 0.0]);
    let path = write(dir.path(), "neg.json", &negated);
    let out = nsedge(&["validate", &path]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("10|01"));

    let mut skew = good.clone();
    skew["blocks"]["11|10"][0][1] = serde_json::json!([0.3, 0.0]);
    let path = write(dir.path(), "skew.json", &skew);
    let out = nsedge(&["validate", "--json", &path]);
    assert_eq!(code(&out), 2);
    assert_eq!(stdout_json(&out)["violations"][0]["position"], "11|10");

    let text = good.to_string();
    let path = dir.path().join("trunc.json");
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&nsedge(&["validate", path.to_str().unwrap()])), 64);

    // a well-formed file with inconsistent dimensions is invalid data
    let mut wrong_d = good.clone();
    wrong_d["scenario"]["d"] = serde_json::json!(3);
    let path = write(dir.path(), "wrongd.json", &wrong_d);
    assert_eq!(code(&nsedge(&["edge", &path])), 65);
    // invalid assemblages are refused by the analysis commands
    let path = write(dir.path(), "neg2.json", &negated);
    assert_eq!(code(&nsedge(&["edge", &path])), 65);
}

#[test]
fn edge_examples() {
    let out = nsedge(&["edge", "--fixture", "example1", "--json"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["on_edge"], true);
    assert_eq!(v["per_box"].as_array().unwrap().len(), 16);

    let out = nsedge(&["edge", "--fixture", "example1", "--mix-lhs", "0.3", "--json"]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["on_edge"], false);
    assert!(v["epsilon"].as_f64().unwrap() >= 0.3 - 1e-12);
    assert!(v["witness_vector"].is_array());

    let out = nsedge(&["edge", "--fixture", "pr-box-d1", "--diagnostics", "--json"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    // every response table meets a zero of the PR box
    let pr = fixtures::pr_box_d1();
    let s = pr.scenario();
    for k in 0..16 {
        let l = s.box_at(k);
        assert!(s.support_indices(&l).iter().any(|&i| pr.block_at(i).trace() == 0.0));
    }
    assert!(v["diagnostics"]["min_det"].as_f64().unwrap() > 0.5);
}

#[test]
fn subtract_examples() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&nsedge(&["subtract", "--fixture", "example1"])), 1);
    assert_eq!(code(&nsedge(&["subtract", "--fixture", "pr-box-d1"])), 1);

    let a = mixed_example(0.3);
    let input = write(dir.path(), "mixed.json", &io::assemblage_to_json(&a));
    let out_path = dir.path().join("sub.json");
    let out = nsedge(&["subtract", &input, "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let eps = v["epsilon"].as_f64().unwrap();
    assert!(eps >= 0.3 - 1e-12);
    // reconstruction: residual + ε·L ⊗ |ψ⟩⟨ψ| gives the input back
    let residual = io::assemblage_from_json(&v["residual"]).unwrap();
    let psi = io::vector_from_json(&v["vector"]).unwrap();
    let l = io::box_from_json(a.scenario(), &v["box"]).unwrap();
    let part = Assemblage::deterministic(a.scenario(), &l, &Hermitian::ket_projector(&psi)).unwrap().scaled(eps);
    assert!(residual.add(&part).unwrap().max_deviation(&a) < 1e-12);

    assert_eq!(code(&nsedge(&["subtract", &input, "--box", "99"])), 64);
}

#[test]
fn witness_certificate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("cert.json");
    let cert = cert_path.to_str().unwrap();
    let out = nsedge(&["witness", "--fixture", "example1", "--out", cert, "--json"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert!((v["epsilon"].as_f64().unwrap() - golden()).abs() < 1e-9);
    let loaded = io::parse_certificate(&std::fs::read_to_string(&cert_path).unwrap()).unwrap();
    assert!((loaded.epsilon - golden()).abs() < 1e-9);
    assert_eq!(loaded.meta.as_ref().unwrap()["source"], "fixture:example1");

    let out = nsedge(&["evaluate", "--certificate", cert, "--fixture", "example1-sigma-p", "--p", "0.3", "--json"]);
    assert_eq!(code(&out), 0);
    let value = stdout_json(&out)["value"].as_f64().unwrap();
    assert!((value + golden()).abs() < 1e-8, "{value}");

    let out = nsedge(&["witness", "--fixture", "example1", "--check-lhs", "1000", "--json"]);
    assert_eq!(code(&out), 0);
    assert!(stdout_json(&out)["check_lhs"]["min"].as_f64().unwrap() >= -1e-9);

    assert_eq!(code(&nsedge(&["witness", "--fixture", "example1", "--epsilon", "0.5"])), 64);
    let mixed = write(dir.path(), "mixed.json", &io::assemblage_to_json(&mixed_example(0.2)));
    assert_eq!(code(&nsedge(&["witness", &mixed])), 1);
}

#[test]
fn realize_examples() {
    let dir = tempfile::tempdir().unwrap();
    let product = serde_json::json!({"dims": [2, 2, 2], "vector": io::vector_to_json(&fixtures::product_bell_vector())});
    let path = write(dir.path(), "phi.json", &product);
    let asm = dir.path().join("asm.json");
    let out = nsedge(&["realize", "thm2", &path, "--json", "--assemblage-out", asm.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["provenance"], "pure-state/product-A");
    assert_eq!(code(&nsedge(&["edge", asm.to_str().unwrap()])), 0);
    let recipe = io::recipe_from_json(&stdout_json(&out)).unwrap();
    assert!(nsedge::is_on_edge(&recipe.assemblage().unwrap(), &Default::default()).unwrap().on_edge);

    let out = nsedge(&["realize", "thm2", "--fixture", "ghz", "--seed", "11", "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["provenance"], "pure-state/random-search");

    let mut v = vec![0.0; 8];
    v[0] = 1.0;
    let product = serde_json::json!({"dims": [2, 2, 2], "vector": io::vector_to_json(&real_vector(&v))});
    let path = write(dir.path(), "prod.json", &product);
    assert_eq!(code(&nsedge(&["realize", "thm2", &path])), 65);

    assert_eq!(code(&nsedge(&["realize", "thm4", "--fixture", "example1"])), 0);
    assert_eq!(code(&nsedge(&["realize", "thm4", "--random", "3", "--seed", "5"])), 0);
}

#[test]
fn sampling_is_reproducible() {
    let a = nsedge(&["scan", "--rank", "3", "--samples", "20", "--seed", "9", "--json"]);
    let b = nsedge(&["scan", "--rank", "3", "--samples", "20", "--seed", "9", "--json"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let v = stdout_json(&a);
    assert_eq!(v["edge_verdicts"], 0);
    assert_eq!(v["config"]["seed"], 9);

    let a = nsedge(&["realize", "thm2", "--fixture", "ghz", "--seed", "4", "--json"]);
    let b = nsedge(&["realize", "thm2", "--fixture", "ghz", "--seed", "4", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn scan_examples() {
    assert_eq!(code(&nsedge(&["scan", "--rank", "4", "--samples", "10", "--seed", "1"])), 0);
    assert_eq!(code(&nsedge(&["scan", "--rank", "3", "--samples", "10", "--kind", "povm", "--family", "structured"])), 0);
    assert_eq!(code(&nsedge(&["scan", "--rank", "2", "--samples", "10"])), 64);
}

#[test]
fn boxes_listing() {
    let out = nsedge(&["boxes", "--json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["count"], 16);
    let out = nsedge(&["boxes", "--settings", "2,2,2", "--json"]);
    assert_eq!(stdout_json(&out)["count"], 64);
    let out = nsedge(&["boxes", "--fixture", "example1"]);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("16 deterministic boxes"));
}

#[test]
fn human_output_uses_six_digits() {
    let out = nsedge(&["witness", "--fixture", "example1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("epsilon 0.381966 "), "{text}");
}

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::Command;
use symcocycle::cocycle::CocycleSystem;
use symcocycle::domination::DominationCertificate;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("symcocycle-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Runs the binary and returns the exit code and stderr.
fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_symcocycle")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn run_to(args: &[&str], report: &Path) -> i32 {
    let mut all: Vec<&str> = args.to_vec();
    let r = report.to_str().unwrap();
    all.extend(["--output", r]);
    run(&all).0
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn check_exit_codes() {
    let dir = scratch("check");
    assert_eq!(run_to(&["check", "--input", &data("identity.json")], &dir.join("id.json")), 0);
    assert_eq!(run_to(&["check", "--input", &data("non_symplectic.json")], &dir.join("bad.json")), 1);
    let csv = std::fs::read_to_string(dir.join("id.csv")).unwrap();
    assert!(csv.starts_with("orbit,index,re,im,log_modulus"));
}

#[test]
fn invalid_arguments_fail() {
    let (code, err) = run(&["check"]);
    assert_eq!(code, 2);
    assert!(err.contains("--input"));
    let (code, err) = run(&["dichotomy", "--input", &data("identity.json"), "--epsilon", "0"]);
    assert_eq!(code, 2);
    assert!(err.contains("epsilon"));
}

#[test]
fn dominated_sample_certificate_revalidates() {
    let dir = scratch("dominate");
    let report = dir.join("dom.json");
    assert_eq!(run_to(&["dominate", "--input", &data("dominated_dim4.json")], &report), 0);
    let sys = CocycleSystem::from_json(&std::fs::read_to_string(data("dominated_dim4.json")).unwrap()).unwrap();
    let v = read_json(&report);
    let found: Vec<&Value> = v["results"].as_array().unwrap().iter().filter(|r| r["found"] == true).collect();
    assert!(!found.is_empty());
    for r in found {
        let cert: DominationCertificate = serde_json::from_value(r["certificate"].clone()).unwrap();
        assert!(cert.revalidate(&sys).unwrap().is_certified());
    }
    assert!(std::fs::read_to_string(dir.join("dom.csv")).unwrap().starts_with("index,orbit,point,n,ratio"));

    let report = dir.join("dich.json");
    assert_eq!(run_to(&["dichotomy", "--input", &data("dominated_dim4.json")], &report), 0);
    assert_eq!(read_json(&report)["revalidated"], true);
}

#[test]
fn elliptic_sample_emits_reloadable_cocycle() {
    let dir = scratch("elliptic");
    for name in ["elliptic_dim2.json", "elliptic_dim4.json"] {
        let report = dir.join(name);
        assert_eq!(run_to(&["dichotomy", "--input", &data(name), "--epsilon", "0.4"], &report), 0);
        let stem = name.trim_end_matches(".json");
        let text = std::fs::read_to_string(dir.join(format!("{stem}.cocycle.json"))).unwrap();
        let sys = CocycleSystem::from_json(&text).unwrap();
        sys.validate().unwrap();
        let v = read_json(&report);
        assert!(v["revalidated_residual"].as_f64().unwrap() <= 1e-6);
        assert!(sys.symplectic_issues().is_empty());
    }
}

#[test]
fn elliptic_on_dominated_sample_fails() {
    let (code, err) = run(&["elliptic", "--input", &data("dominated_dim4.json")]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
}

#[test]
fn missing_transitions_are_named() {
    let dir = scratch("missing");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(data("elliptic_dim2.json")).unwrap()).unwrap();
    v["transitions"] = Value::Array(vec![]);
    let input = dir.join("no_transitions.json");
    std::fs::write(&input, v.to_string()).unwrap();
    let (code, err) = run(&["elliptic", "--input", input.to_str().unwrap(), "--epsilon", "0.4"]);
    assert_ne!(code, 0);
    assert!(err.to_lowercase().contains("transition"), "{err}");
}

#[test]
fn runs_are_deterministic() {
    let dir = scratch("determinism");
    let mut reports = Vec::new();
    for k in 0..2 {
        let report = dir.join(format!("run{k}.json"));
        assert_eq!(run_to(&["dichotomy", "--input", &data("elliptic_dim2.json"), "--epsilon", "0.4"], &report), 0);
        reports.push((
            std::fs::read_to_string(&report).unwrap(),
            std::fs::read_to_string(dir.join(format!("run{k}.cocycle.json"))).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn glue_reports_locality() {
    let dir = scratch("glue");
    let report = dir.join("glue.json");
    assert_eq!(run_to(&["glue", "--input", "quadratic:1,0.2", "--grid", "24", "--beta", "0.1"], &report), 0);
    let v = read_json(&report);
    assert!(v["inner_error"].as_f64().unwrap() < 1e-10);
    assert!(v["outer_error"].as_f64().unwrap() < 1e-10);
    assert!(v["symplectic_defect"].as_f64().unwrap() < 1e-8);
}

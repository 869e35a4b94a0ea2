use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qem")).args(args).output().expect("qem runs")
}

fn report(dir: &Path, name: &str, args: &[&str]) -> (i32, Value) {
    let out = dir.join(name);
    let mut all = args.to_vec();
    let out_s = out.to_str().unwrap();
    all.extend(["--out", out_s]);
    let o = qem(&all);
    let v = serde_json::from_str(&std::fs::read_to_string(&out).expect("report written")).unwrap();
    (o.status.code().unwrap(), v)
}

fn check<'a>(checks: &'a Value, name: &str) -> &'a Value {
    checks.as_array().unwrap().iter().find(|c| c["name"] == name).unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn verify_single_entry_reports_scalar_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = report(dir.path(), "v.json", &["verify", "--entry", "T1-II", "--m", "2", "--rho", "0", "--lambda", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["pass"], true);
    let e = &v["entries"][0];
    assert_eq!(e["entry"], "T1-II");
    assert!((e["expected"]["scalar_curvature"].as_f64().unwrap() - 8.0 / 3.0).abs() < 1e-12);
    let r = check(&e["checks"], "scalar_curvature");
    assert_eq!(r["pass"], true);
    assert!(r["tolerance"]["rel"].as_f64().unwrap() == 1e-9);
    assert_eq!(v["config"]["samples"], 100);
    assert_eq!(v["config"]["seed"], 42);
}

#[test]
fn verify_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = report(dir.path(), "all.json", &["verify", "--entry", "all"]);
    assert_eq!(code, 0);
    let entries = v["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 15);
    assert!(entries.iter().all(|e| e["pass"] == true));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["verify", "--entry", "T1-II", "--m", "1"][..],
        &["verify", "--entry", "NOPE"],
        &["identities", "--m", "-1"],
        &["integrate", "--zeta2", "1", "--zeta3", "2", "--step", "0"],
        &["frobnicate"],
        &["verify"],
    ] {
        assert_eq!(qem(args).status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn failing_checks_exit_two() {
    // a tolerance nothing can meet
    let o = qem(&["verify", "--entry", "T1-II", "--abs-tol", "0", "--rel-tol", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn reports_are_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["verify", "--entry", "C62-II", "--samples", "20"];
    let (_, mut a) = report(dir.path(), "a.json", &args);
    let (_, mut b) = report(dir.path(), "b.json", &args);
    a.as_object_mut().unwrap().remove("wall_time_s");
    b.as_object_mut().unwrap().remove("wall_time_s");
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn integrate_generic_start_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let (code, v) = report(
        dir.path(),
        "i.json",
        &["integrate", "--zeta2", "1", "--zeta3", "2", "--m", "2", "--rho", "0", "--lambda", "1", "--csv", csv.to_str().unwrap()],
    );
    assert_eq!(code, 0, "{v:#}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,zeta2,zeta3,X,p,h,f,k,Q,branch_zeta3_zero,branch_product,branch_quadratic,branch_q_zero,generic"
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[8].parse::<f64>().unwrap(), -5.0);
    assert_eq!(v["exact"], false);
    assert_eq!(v["k_constant"], false);
    assert_eq!(v["termination"], "Q_singular");
    assert_eq!(check(&v["checks"], "defect_identity")["pass"], true);
    assert_eq!(v["nodes"].as_u64().unwrap() as usize, text.lines().count() - 1);
}

#[test]
fn integrate_branch_start_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = report(dir.path(), "c.json", &["integrate", "--zeta2", "0.7", "--zeta3", "0", "--s0", "2", "--s-end", "2.5"]);
    assert_eq!(code, 0, "{v:#}");
    assert_eq!(v["closed_form"]["case"], "Cot");
    assert!(v["closed_form"]["mismatch"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["exact"], true);
    for name in ["radial_curvature", "second_order_zeta2", "second_order_zeta3", "k_constant", "reconstruction_qe"] {
        assert_eq!(check(&v["checks"], name)["pass"], true, "{name}");
    }
    let (code, v) = report(dir.path(), "h.json", &["integrate", "--zeta2", "0.5", "--zeta3", "0", "--lambda", "-3", "--s-end", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["closed_form"]["case"], "Tanh");
}

#[test]
fn integrate_singular_start_is_reported_not_failed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, v) = report(dir.path(), "q.json", &["integrate", "--zeta2", "0", "--zeta3", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["termination"], "Q_singular");
    assert_eq!(v["nodes"], 1);
    assert_eq!(v["pass"], true);
}

#[test]
fn identities_sweep_and_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let (code, a) = report(dir.path(), "a.json", &["identities", "--samples", "200"]);
    assert_eq!(code, 0);
    assert_eq!(a["checks"].as_array().unwrap().len(), 15);
    assert!(a["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
    assert_eq!(a["config"]["tolerance"]["rel"], 1e-10);
    let (code, b) = report(dir.path(), "b.json", &["identities", "--samples", "200", "--seed", "7"]);
    assert_eq!(code, 0);
    assert_ne!(a["blocks"][0]["first_triple"], b["blocks"][0]["first_triple"]);
}

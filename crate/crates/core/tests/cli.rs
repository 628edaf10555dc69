use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

use ncrat::scalar::{q, qi};
use ncrat::series::SeriesJson;
use ncrat::wfa::RepresentationJson;
use ncrat::{LinearRepresentation, SeriesTable, Word};

fn ncrat(args: &[&str]) -> (i32, Value, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ncrat"))
        .args(args)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).expect("utf-8");
    let json = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    (out.status.code().expect("exit code"), json, stdout)
}

fn resolvent() -> LinearRepresentation {
    LinearRepresentation::new(
        vec![q(1, 2)],
        vec![vec![vec![q(1, 2)]], vec![vec![qi(0)]]],
        vec![qi(1)],
    )
    .unwrap()
}

fn write_json(dir: &Path, name: &str, v: &impl serde::Serialize) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn rank_of_resolvent_table() {
    let dir = TempDir::new().unwrap();
    let series = write_json(
        dir.path(),
        "z.json",
        &SeriesJson::from(&resolvent().tabulate(10)),
    );
    let (code, json, _) = ncrat(&["rank", "--series", s(&series), "--kmax", "4"]);
    assert_eq!(code, 0);
    assert_eq!(json["status"], "stabilized");
    assert_eq!(json["rank"], 1);
}

#[test]
fn growing_rank_is_a_negative_certificate() {
    let dir = TempDir::new().unwrap();
    // α_v = 1 / (|v| + 1)! on words in letter 1
    let mut fact = qi(1);
    let mut z = SeriesTable::zero(1, 10);
    for n in 0..=10usize {
        fact *= qi(n as i64 + 1);
        z.set(Word::power(ncrat::Letter::new(1), n), qi(1) / fact.clone())
            .unwrap();
    }
    let series = write_json(dir.path(), "z.json", &SeriesJson::from(&z));
    let (code, json, _) = ncrat(&["rank", "--series", s(&series), "--kmax", "4"]);
    assert_eq!(code, 2);
    assert_eq!(json["status"], "growing");
}

#[test]
fn kronecker_of_constant_sequence() {
    let dir = TempDir::new().unwrap();
    let coeffs = write_json(dir.path(), "ones.json", &vec!["1"; 9]);
    let (code, json, _) = ncrat(&["kronecker1d", "--coeffs", s(&coeffs)]);
    assert_eq!(code, 0);
    assert_eq!(json["rank"], 1);
}

#[test]
fn learn_minimize_realize_chain() {
    let dir = TempDir::new().unwrap();
    let series = write_json(
        dir.path(),
        "z.json",
        &SeriesJson::from(&resolvent().tabulate(10)),
    );
    let learned = dir.path().join("learned.json");
    let (code, _, _) = ncrat(&[
        "learn",
        "--series",
        s(&series),
        "--kmax",
        "3",
        "--out",
        s(&learned),
    ]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(&learned).unwrap()).unwrap();
    assert_eq!(report["dim"], 1);
    let rep = write_json(dir.path(), "rep.json", &report["representation"]);

    // a padded, non-minimal copy
    let padded = resolvent().sum(&LinearRepresentation::zero(2)).unwrap();
    let padded = padded.sum(&resolvent().scalar_mul(&qi(0))).unwrap();
    let padded_path = write_json(
        dir.path(),
        "padded.json",
        &RepresentationJson::from(&padded),
    );
    let (code, json, _) = ncrat(&["minimize", "--rep", s(&padded_path)]);
    assert_eq!(code, 0);
    assert_eq!(json["input_dim"], 2);
    assert_eq!(json["dim"], 1);

    let (code, json, _) = ncrat(&["realize", "--rep", s(&rep), "--N", "8", "--mmax", "40"]);
    assert_eq!(code, 0);
    assert_eq!(json["status"], "converged");
    assert!(json["report"]["residual"].as_f64().unwrap() < 1e-12);
    assert!((json["coefficients"]["1 1"].as_f64().unwrap() - 0.125).abs() < 1e-12);
}

#[test]
fn diverging_representation_is_rejected() {
    let dir = TempDir::new().unwrap();
    let r = LinearRepresentation::new(vec![qi(1)], vec![vec![vec![qi(2)]]], vec![qi(1)]).unwrap();
    let rep = write_json(dir.path(), "rep.json", &RepresentationJson::from(&r));
    let (code, json, _) = ncrat(&["realize", "--rep", s(&rep)]);
    assert_eq!(code, 2);
    assert_eq!(json["status"], "not_converging");
}

#[test]
fn pipeline_on_resolvent() {
    let (code, json, _) = ncrat(&[
        "pipeline",
        "--expr",
        "(5/2 - s1)^-1",
        "--d",
        "2",
        "--N",
        "12",
    ]);
    assert_eq!(code, 0, "{json}");
    assert_eq!(json["status"], "certified");
    let st = &json["stages"];
    assert_eq!(st["hankel"]["rank"], 1);
    assert_eq!(st["learn"]["dim"], 1);
    assert!(st["realize"]["series_residual"].as_f64().unwrap() < 1e-6);
    assert_eq!(st["commutators"]["ranks"][0]["rank_n"], 1);
    assert_eq!(st["commutators"]["ranks"][1]["rank_n"], 0);
}

#[test]
fn pipeline_status_is_conjunction_of_stages() {
    let (code, json, _) = ncrat(&[
        "pipeline",
        "--expr",
        "s1*s2 - 2*s1 + 3",
        "--N",
        "8",
        "--L",
        "10",
    ]);
    assert_eq!(code, 0, "{json}");
    let stages = json["stages"].as_object().unwrap();
    assert_eq!(stages.len(), 5);
    assert!(stages.values().all(|s| s["ok"] == true));
    // a tolerance the truncated solve cannot meet within the budget
    let (code, json, _) = ncrat(&[
        "pipeline",
        "--expr",
        "(3 - s1 - s2)^-1",
        "--N",
        "8",
        "--budget",
        "200",
    ]);
    assert_eq!(code, 2);
    assert_eq!(json["status"], "failed");
    assert_eq!(json["stages"]["series"]["ok"], false);
}

#[test]
fn haagerup_family() {
    let dir = TempDir::new().unwrap();
    let fam = SeriesTable::from_terms(
        2,
        3,
        vec![
            ("1 2 1".parse().unwrap(), qi(1)),
            ("2 2 1".parse().unwrap(), q(-1, 2)),
        ],
    )
    .unwrap();
    let path = write_json(dir.path(), "fam.json", &SeriesJson::from(&fam));
    let (code, json, _) = ncrat(&["haagerup", "--coeffs", s(&path)]);
    assert_eq!(code, 0);
    assert_eq!(json["scalar"]["truncation"], 7);
    assert!(json["scalar"]["lhs"].as_f64().unwrap() <= json["scalar"]["rhs"].as_f64().unwrap());
}

#[test]
fn fock_verify_small() {
    let (code, json, _) = ncrat(&["fock-verify", "--d", "2", "--N", "5"]);
    assert_eq!(code, 0);
    assert_eq!(json["ok"], true);
}

#[test]
fn malformed_input_exits_one_with_report() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"d\": 2}").unwrap();
    let out = dir.path().join("report.json");
    let (code, json, _) = ncrat(&["rank", "--series", s(&bad), "--out", s(&out)]);
    assert_eq!(code, 1);
    assert_eq!(json["status"], "error");
    assert!(out.exists());
    let (code, json, _) = ncrat(&["pipeline", "--expr", "s1 +"]);
    assert_eq!(code, 1);
    assert_eq!(json["status"], "error");
    let (code, _, _) = ncrat(&["rank", "--kmax", "four"]);
    assert_eq!(code, 1);
}

#[test]
fn exact_reports_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let series = write_json(
        dir.path(),
        "z.json",
        &SeriesJson::from(&resolvent().tabulate(10)),
    );
    let a = ncrat(&["learn", "--series", s(&series), "--kmax", "4"]).2;
    let b = ncrat(&["learn", "--series", s(&series), "--kmax", "4"]).2;
    assert_eq!(a, b);
    let a = ncrat(&["pipeline", "--expr", "s1*s1 - s2"]).2;
    let b = ncrat(&["pipeline", "--expr", "s1*s1 - s2"]).2;
    assert_eq!(a, b);
}

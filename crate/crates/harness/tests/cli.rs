use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lichnerowicz"));
    c.env("EL_WORKERS", "2");
    c
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

#[test]
fn constants_prints_c6() {
    let out = bin().args(["constants", "--n", "6"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.2"));
}

#[test]
fn sweep_expect_sets_exit_code() {
    let ok = bin().args(["sweep", "--config", &data("defocus.ini"), "--expect", "Stable-band"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = bin().args(["sweep", "--config", &data("defocus.ini"), "--expect", "VanishingLimit"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn focusing_sweep_is_an_error() {
    let out = bin().args(["sweep", "--config", &data("focus.ini")]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.ini");
    std::fs::write(&p, "[geometry]\ndim = 3\nbogus = 1\n").unwrap();
    let out = bin().args(["sweep", "--config", p.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut tables = Vec::new();
    for k in 0..2 {
        let csv = dir.path().join(format!("run{k}.csv"));
        let json = dir.path().join(format!("run{k}.json"));
        let out = bin()
            .args(["sweep", "--config", &data("defocus.ini"), "--csv"])
            .arg(&csv)
            .arg("--json")
            .arg(&json)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&json).unwrap()).unwrap();
        assert_eq!(v["summary"]["verdict"], "Stable-band");
        tables.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn instability_single_lambda() {
    let out = bin().args(["instability3", "--lambdas", "1.5"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1.4953"));
}

#[test]
fn verify_selected_group_passes() {
    let out = bin().args(["verify", "--select", "green"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let none = bin().args(["verify", "--select", "nothing"]).output().unwrap();
    assert_eq!(none.status.code(), Some(1));
}

use std::path::Path;
use std::process::{Command, Output};

fn gsnmf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsnmf"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn example1_gspa_and_gsfgm() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(
        gsnmf(&["synth", "--generator", "example1", "--out", "ex"], p)
            .status
            .success()
    );

    let out = gsnmf(
        &["run", "ex/matrix.csv", "--algo", "gspa", "--rank", "4"],
        p,
    );
    assert!(out.status.success());
    let first = stdout(&out).lines().next().unwrap().to_string();
    assert!(
        first == "K1={1,2,3} K2={5}" || first == "K1={2} K2={1,4,5}",
        "{first}"
    );

    let out = gsnmf(
        &[
            "run",
            "ex/matrix.csv",
            "--algo",
            "gsfgm",
            "--r1",
            "2",
            "--r2",
            "2",
            "--out",
            "res",
        ],
        p,
    );
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("K1={1,2} K2={4,5}\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("res/report.json")).unwrap()).unwrap();
    assert_eq!(report["cols_one_based"], serde_json::json!([1, 2]));
    assert_eq!(report["rows_one_based"], serde_json::json!([4, 5]));

    let out = gsnmf(
        &[
            "metrics",
            "ex/matrix.csv",
            "--decomposition",
            "res/decomposition.json",
        ],
        p,
    );
    assert!(out.status.success());
    assert!(stdout(&out).contains("K1={1,2} K2={4,5}"));
}

#[test]
fn empty_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = gsnmf(&["run", "empty.csv", "--rank", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));
}

#[test]
fn gsfgm_without_split_ranks_fails() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gsnmf(&["synth", "--generator", "example1", "--out", "ex"], p);
    let out = gsnmf(
        &["run", "ex/matrix.csv", "--algo", "gsfgm", "--rank", "4"],
        p,
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn synth_then_score_against_truth() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let synth = [
        "synth", "--m", "20", "--n", "18", "--r1", "3", "--r2", "3", "--seed", "4", "--out", "inst",
    ];
    assert!(gsnmf(&synth, p).status.success());
    let out = gsnmf(
        &[
            "run",
            "inst/matrix.csv",
            "--algo",
            "gsfgm",
            "--r1",
            "3",
            "--r2",
            "3",
            "--out",
            "res",
        ],
        p,
    );
    assert!(out.status.success());
    let out = gsnmf(
        &[
            "metrics",
            "inst/matrix.csv",
            "--decomposition",
            "res/decomposition.json",
            "--truth",
            "inst",
        ],
        p,
    );
    let text = stdout(&out);
    assert!(text.contains("accuracy: 1.000000"), "{text}");
    assert!(text.contains("distance:"));
}

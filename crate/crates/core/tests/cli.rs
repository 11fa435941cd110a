use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn toy(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy").join(file)
}

fn homeadv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homeadv")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_prints_season_counts() {
    let out = homeadv(&["ingest", "--matches", path(&toy("matches.csv")), "--calendar", path(&toy("calendar.csv"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Alpha"));
    assert!(text.contains("2019/20"));
}

#[test]
fn rate_fits_one_window() {
    let out = homeadv(&[
        "rate",
        "--matches",
        path(&toy("matches.csv")),
        "--calendar",
        path(&toy("calendar.csv")),
        "--league",
        "Beta",
        "--season",
        "2018/19",
        "--end-matchweek",
        "14",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("Beta A"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = homeadv(&["ingest", "--matches", path(&missing), "--calendar", path(&toy("calendar.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn malformed_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("matches.csv");
    std::fs::write(&bad, "league,season,matchweek\nL,2019/20,1\n").unwrap();
    let out = homeadv(&["ingest", "--matches", path(&bad), "--calendar", path(&toy("calendar.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_rejected() {
    let out = homeadv(&["report", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn series_then_test_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (matches, calendar) = (toy("matches.csv"), toy("calendar.csv"));
    let common = [
        "--matches",
        path(&matches),
        "--calendar",
        path(&calendar),
        "--trials",
        "2000",
        "--out",
        path(dir.path()),
    ];
    let out = homeadv(&[&["series"][..], &common[..]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let estimates = dir.path().join("estimates.csv");
    assert!(estimates.exists());

    let out = homeadv(&["test", "--estimates", path(&estimates), "--out", path(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let overall = std::fs::read_to_string(dir.path().join("tests_overall.csv")).unwrap();
    assert_eq!(overall.lines().count(), 1 + 6);
}

#[test]
fn report_is_byte_identical_across_runs() {
    let run = |dir: &Path| {
        let out = homeadv(&[
            "report",
            "--matches",
            path(&toy("matches.csv")),
            "--calendar",
            path(&toy("calendar.csv")),
            "--trials",
            "5000",
            "--seed",
            "11",
            "--out",
            path(dir),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(a.path());
    run(b.path());
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for name in names {
        let left = std::fs::read(a.path().join(&name)).unwrap();
        let right = std::fs::read(b.path().join(&name)).unwrap();
        assert!(left == right, "{name:?} differs");
    }
}

use assert_cmd::Command;
use predicates::prelude::*;

fn abp() -> Command {
    Command::cargo_bin("abp").unwrap()
}

#[test]
fn seed_is_mandatory() {
    abp()
        .args(["cones"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("--seed"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    abp().args(["nope", "--seed", "1"]).assert().code(2);
}

#[test]
fn unknown_fixture_is_a_usage_error() {
    abp()
        .args(["fixtures", "--seed", "1", "--fixture", "klein_bottle"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("unknown fixture kind"));
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    abp()
        .args(["abp", "--seed", "1", "--tol-grad", "-0.1"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("gradient tolerance"));
}

#[test]
fn cones_run_writes_report_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    abp()
        .args([
            "cones",
            "--seed",
            "7",
            "--samples",
            "20000",
            "--plot",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success()
        .stdout(predicate::str::contains("[PASS] cones/two_point_exact"));
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["config"]["seed"], 7);
    assert!(dir.path().join("cone_sweep.csv").exists());
    assert!(dir.path().join("cone_sweep.svg").exists());
}

#[test]
fn point_set_input_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("square.txt");
    std::fs::write(
        &file,
        "1 1 0.2 0.7071067811865476 0.7071067811865476\n-1 1 0.5 -0.7071067811865476 0.7071067811865476\n\
         -1 -1 0.1 -0.7071067811865476 -0.7071067811865476\n1 -1 0.9 0.7071067811865476 -0.7071067811865476\n",
    )
    .unwrap();
    abp()
        .args(["cones", "--seed", "3", "--samples", "5000"])
        .arg(&file)
        .assert()
        .success()
        .stdout(predicate::str::contains("input_0_rho_1_exact"));
}

#[test]
fn fixtures_are_written() {
    let dir = tempfile::tempdir().unwrap();
    abp()
        .args([
            "fixtures",
            "--seed",
            "1",
            "--h",
            "0.1",
            "--fixture",
            "half_disk",
            "--fixture",
            "flat_half_disk_embedded(4)",
            "--out",
        ])
        .arg(dir.path())
        .assert()
        .success();
    assert!(dir.path().join("fixtures/00_half_disk.json").exists());
    assert!(dir
        .path()
        .join("fixtures/01_flat_half_disk_embedded.json")
        .exists());
}

#[test]
fn failing_input_gives_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("broken.json");
    std::fs::write(&bad, "{}").unwrap();
    abp()
        .args(["quotient", "--seed", "1", "--h", "0.1"])
        .arg(&bad)
        .assert()
        .code(1)
        .stdout(predicate::str::contains("[FAIL] quotient"));
}

#[test]
fn identical_configs_give_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        abp()
            .args(["cones", "--seed", "11", "--samples", "5000", "--out"])
            .arg(d.path())
            .assert()
            .success();
    }
    let read = |d: &tempfile::TempDir| {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.path().join("report.json")).unwrap())
                .unwrap();
        v["runtime_seconds"] = serde_json::Value::Null;
        v["config"]["out"] = serde_json::Value::Null;
        v
    };
    assert_eq!(read(&a), read(&b));
}

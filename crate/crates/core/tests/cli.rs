use std::path::Path;
use std::process::{Command, Output};

fn gdl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdl"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("spawn gdl")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn passing_checks_exit_zero() {
    for args in [
        vec!["constants"],
        vec!["verify", "remark1"],
        vec!["verify", "lemma2", "--grid", "u=1.6:20:64"],
        vec!["scan-L", "--frustum", "1,0.2", "--points", "64"],
    ] {
        let o = gdl(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["verify", "no-such-check"],
        vec!["verify", "lemma1", "--grid", "t=1:0:10"],
        vec!["verify", "lemma1", "--grid", "q=0:1:10"],
        vec!["verify", "lemma1", "--grid", "t0:1:10"],
        vec!["scan-L"],
        vec!["scan-L", "--frustum", "1"],
        vec!["scan-L", "--cone", "1,0,0.5"],
        vec!["compare", "--family", "ball", "--params", "1", "--t-grid", "0:2:5"],
        vec!["symmetrize", "--family", "ball", "--n", "2", "--params", "1", "--r-grid", "0.1:1:5"],
        vec!["constants", "--tolerance", "-1"],
        vec!["frobnicate"],
    ] {
        let o = gdl(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
}

#[test]
fn a_failing_assertion_exits_one() {
    // No counterexample below y = 10.
    let o = gdl(&["remark2", "--y-min", "1", "--y-max", "10", "--count", "40"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn malformed_profile_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "r,f\n# comment\n0,1\n0.5,0.8\n0.4,0.2\n").unwrap();
    let o = gdl(&["scan-L", "--profile", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));

    std::fs::write(&path, "r,f\n0,1\n0.5,abc\n").unwrap();
    let o = gdl(&["scan-L", "--profile", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    // Convex, not concave.
    std::fs::write(&path, "r,f\n0,1\n0.5,0.1\n1,-0.2\n").unwrap();
    let o = gdl(&["scan-L", "--profile", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn json_is_byte_identical_across_runs() {
    for args in [
        vec!["constants", "--format", "json"],
        vec!["verify", "lemma1", "--format", "json", "--rows", "--grid", "t=-10:10:101"],
        vec!["remark2", "--format", "json", "--count", "50"],
        vec!["scan-L", "--cone", "2,1,-2", "--points", "64", "--format", "json"],
        vec![
            "compare", "--family", "polydisc", "--params", "0.7,1.1", "--t-grid", "0.5:2:7", "--mc", "--samples",
            "20000", "--seed", "7", "--format", "json",
        ],
        vec!["symmetrize", "--family", "ball", "--n", "3", "--params", "1.4", "--r-grid", "0:1.4:32", "--format", "json"],
    ] {
        let a = gdl(&args);
        let b = gdl(&args);
        assert_eq!(a.status.code(), b.status.code());
        assert!(!a.stdout.is_empty(), "{args:?}: {}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
        assert_eq!(v["schema"], "v1");
        assert!(v["pass"].is_boolean());
        assert!(v.get("elapsed_ms").is_none());
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["verify", "lemma3-ii", "--format", "json", "--grid", "u=1.6:12:40", "--grid", "y=-10:0.7:40"];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_gdl"))
            .args(args)
            .env("GDL_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn timings_only_on_request() {
    let o = gdl(&["verify", "remark1", "--format", "json", "--timings"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["elapsed_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn csv_has_one_row_per_grid_point() {
    let o = gdl(&["verify", "lemma3-i", "--format", "csv", "--grid", "u=0.01:1.5:13", "--grid", "y=-10:10:11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), ["u", "y", "margin"]);
    assert_eq!(reader.records().count(), 13 * 11);

    let o = gdl(&["scan-L", "--frustum", "1,0.2", "--points", "33", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 34);

    let o = gdl(&["compare", "--family", "ball", "--n", "3", "--params", "1.5", "--t-grid", "0:3:13", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 14);
}

#[test]
fn json_rows_match_grid_size() {
    let o = gdl(&["verify", "thm3-tail", "--format", "json", "--rows", "--grid", "s=0.95:8:9", "--grid", "t=1:10:5"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 45);
    let o = gdl(&["verify", "thm3-tail", "--format", "json", "--grid", "s=0.95:8:9"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.get("rows").is_none());
}

#[test]
fn constants_json_fields() {
    let o = gdl(&["constants", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["H"].as_f64().unwrap() - 0.724_206_665_597_033).abs() < 1e-13);
    assert!((v["c"].as_f64().unwrap() - 0.648_104_436_669_331).abs() < 1e-13);
    assert!((v["s0"].as_f64().unwrap() - 0.930_918_810_676_740_5).abs() < 1e-13);
    assert_eq!(v["K"].as_f64(), Some(3.0));
    assert_eq!(v["pass"], true);
}

#[test]
fn output_file_and_symmetrize_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("ball.csv");
    let p = profile.to_str().unwrap();
    let o = gdl(&["symmetrize", "--family", "ball", "--n", "2", "--params", "1.2", "--r-grid", "0:1.2:64", "--output", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&profile).unwrap();
    assert!(text.starts_with('#'));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 65);

    let report = dir.path().join("scan.json");
    let o = gdl(&["scan-L", "--profile", p, "--width", "1.2", "--format", "json", "--output", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["config"].get("output").is_none());
    assert!(!Path::new(&report).with_extension("tmp").exists());
}

#[test]
fn cone_with_positive_slope_is_rejected() {
    let o = gdl(&["scan-L", "--cone", "1,0,0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

//! End-to-end runs of the `waverate` binary: exit codes, file formats,
//! environment handling and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn waverate(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waverate"))
        .current_dir(dir)
        .env_remove("WAVERATE_GRID_LEVEL")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn db2_gaussian_rate_is_quadratic() {
    let dir = tempfile::tempdir().unwrap();
    let o = waverate(
        dir.path(),
        &[
            "rate",
            "--family",
            "daubechies:2",
            "--function",
            "gaussian",
            "--j",
            "3..9",
            "-o",
            "rate.json",
        ],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("rate.json")).unwrap())
            .unwrap();
    let slope = report["slope"].as_f64().unwrap();
    assert!((1.8..=2.2).contains(&slope), "slope {slope}");
    let line = stdout(&o);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("rate daubechies:2 gaussian: slope"));
}

#[test]
fn haar_sweep_flips_between_point_nine_and_one_point_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = waverate(
        dir.path(),
        &["sobolev", "--family", "haar", "--sweep-s", "0.1..2.0:0.1"],
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = std::fs::read_to_string(dir.path().join("waverate-sobolev.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let (s_col, v_col) = (
        header.iter().position(|h| *h == "s").unwrap(),
        header.iter().position(|h| *h == "value").unwrap(),
    );
    let rows: Vec<(f64, bool)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[s_col].parse().unwrap(), cells[v_col] == "DIVERGED")
        })
        .collect();
    assert_eq!(rows.len(), 20);
    let flip = rows.iter().position(|r| r.1).unwrap();
    assert!(rows[flip..].iter().all(|r| r.1));
    assert!(
        rows[flip - 1].0 >= 0.9 - 1e-9 && rows[flip].0 <= 1.1 + 1e-9,
        "flip at {}",
        rows[flip].0
    );
}

#[test]
fn inverted_level_range_is_a_usage_error_with_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = waverate(
        dir.path(),
        &["kernel", "--family", "haar", "--j", "6..0", "--check-bound"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(files_in(dir.path()).is_empty());
    assert_eq!(String::from_utf8_lossy(&o.stderr).trim().lines().count(), 1);
}

#[test]
fn unknown_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["family", "--family", "morlet"][..],
        &[
            "rate",
            "--family",
            "haar",
            "--function",
            "gaussian",
            "--j",
            "3..4",
        ],
        &[
            "rate",
            "--family",
            "haar",
            "--function",
            "gaussian",
            "--window",
            "-9,1",
        ],
        &[
            "rate",
            "--family",
            "haar",
            "--function",
            "step",
            "--window",
            "-0.5,0.5",
        ],
        &["sobolev", "--family", "haar", "--epsilon", "0"],
        &["spline", "--function", "sine", "--order", "0"],
        &["suite", "--only", "nothing"],
        &["family", "--family", "haar", "--jobs", "0"],
    ] {
        let o = waverate(dir.path(), args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
    }
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn computational_failures_exit_with_two() {
    // Too coarse a tabulation breaks the orthonormality of DB6 translates.
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_waverate"))
        .current_dir(dir.path())
        .env("WAVERATE_GRID_LEVEL", "4")
        .args(["family", "--family", "daubechies:6"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("orthonormality"), "{err}");
    assert!(files_in(dir.path()).is_empty());
}

#[test]
fn grid_level_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |level: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_waverate"));
        c.current_dir(dir.path())
            .args(["family", "--family", "haar"]);
        match level {
            Some(l) => c.env("WAVERATE_GRID_LEVEL", l),
            None => c.env_remove("WAVERATE_GRID_LEVEL"),
        };
        c.output().unwrap()
    };
    let o = run(Some("6"));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("level 6"));
    let o = run(None);
    assert!(stdout(&o).contains(&format!("level {}", waverate::DEFAULT_LEVEL)));
    for bad in ["2", "17", "many"] {
        assert_eq!(run(Some(bad)).status.code(), Some(1), "{bad}");
    }
}

#[test]
fn csv_output_follows_the_numeric_contract() {
    let dir = tempfile::tempdir().unwrap();
    let o = waverate(
        dir.path(),
        &[
            "expand",
            "--family",
            "haar",
            "--function",
            "gaussian",
            "--j1",
            "2",
            "--format",
            "csv",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let bytes = std::fs::read(dir.path().join("waverate-expand.csv")).unwrap();
    assert!(!bytes.contains(&b'\r'));
    assert!(bytes.ends_with(b"\n"));
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(text.lines().next().unwrap(), "kind,j,k,value");
    for line in text.lines().skip(1) {
        let value = line.split(',').nth(3).unwrap();
        let mantissa = value.trim_start_matches('-').split('e').next().unwrap();
        assert_eq!(mantissa.replace('.', "").len(), 17, "{value}");
        assert!(value.parse::<f64>().is_ok());
    }
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (name, jobs) in [("a.json", "1"), ("b.json", "4")] {
        let o = waverate(
            dir.path(),
            &[
                "--jobs",
                jobs,
                "spline",
                "--function",
                "sine",
                "--mesh-levels",
                "2..6",
                "-o",
                name,
            ],
        );
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn existing_outputs_are_replaced_whole() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    std::fs::write(
        &path,
        "stale contents that are much longer than nothing at all\n".repeat(1000),
    )
    .unwrap();
    let o = waverate(
        dir.path(),
        &["kernel", "--family", "haar", "--j", "0..2", "-o", "out.csv"],
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("j,u,M\n"));
    assert!(!text.contains("stale"));
    // No temporary files are left beside the target.
    assert_eq!(files_in(dir.path()), vec!["out.csv".to_string()]);

    // A failed run leaves the previous file untouched.
    let o = waverate(
        dir.path(),
        &[
            "kernel", "--family", "haar", "--j", "0..11", "-o", "out.csv",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn suite_can_run_only_the_kernel_group() {
    let dir = tempfile::tempdir().unwrap();
    let o = waverate(dir.path(), &["suite", "--only", "kernel", "-o", "report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let summary = std::fs::read_to_string(dir.path().join("report/summary.csv")).unwrap();
    let ids: Vec<&str> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(ids, ["3", "3-shannon", "4"]);
    assert!(summary.contains("expected-fail"));
    assert_eq!(stdout(&o).lines().count(), 1);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ruin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, seed: &str) -> std::path::PathBuf {
    let csv = dir.join("claims.csv");
    let out = ruin(&["generate", "--out", path(&csv), "--seed", seed]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    csv
}

#[test]
fn analyze_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path(), "7");
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "n_paths=2000\nbootstrap=200\nhorizon=24\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = ruin(&[
        "analyze",
        "--input",
        path(&csv),
        "--config",
        path(&cfg),
        "--out",
        path(&out_dir),
        "--grid",
        "0,100,200,400,800,1600",
        "--loading",
        "fixed:0.2",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "summary.csv",
        "fits.csv",
        "dependence.csv",
        "ruin_curves.csv",
        "tests.csv",
        "report.json",
    ] {
        assert!(out_dir.join(name).is_file(), "{name} missing");
    }
    for seg in ["Motor", "Householders", "FireAllied", "Overall"] {
        let fig = fs::read_to_string(out_dir.join(format!("figure_{seg}.csv"))).unwrap();
        let mut lines = fig.lines();
        assert_eq!(lines.next(), Some("u0,psi_dependent,psi_independent"));
        assert_eq!(lines.count(), 6);
    }
    let curves = fs::read_to_string(out_dir.join("ruin_curves.csv")).unwrap();
    assert!(curves.starts_with("product,assumption,u0,psi_hat,std_error\n"));
    assert_eq!(curves.lines().count(), 1 + 4 * 2 * 6);
    let tests = fs::read_to_string(out_dir.join("tests.csv")).unwrap();
    assert!(tests.starts_with("test,statistic,dof,p_value\n"));
    assert!(tests
        .lines()
        .any(|l| l.starts_with("friedman,") && l.split(',').nth(2) == Some("2")));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["config"]["loading"]["value"], 0.2);
    assert_eq!(report["segments"].as_array().unwrap().len(), 4);
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let csv = generate(dir.path(), "3");
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = ruin(&[
            "analyze",
            "--input",
            path(&csv),
            "--out",
            path(&out_dir),
            "--paths",
            "1000",
            "--seed",
            "99",
            "--grid",
            "0,250,500,1000,2000",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let a = run("a");
    let b = run("b");
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for name in names {
        let (fa, fb) = (
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
        );
        if name == "report.json" {
            // The embedded output path differs between the two runs.
            let strip = |bytes: &[u8]| {
                let mut v: serde_json::Value = serde_json::from_slice(bytes).unwrap();
                v["config"]["out"] = serde_json::Value::Null;
                v
            };
            assert_eq!(strip(&fa), strip(&fb));
        } else {
            assert_eq!(fa, fb, "{name:?} differs");
        }
    }
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ruin(&[
        "analyze",
        "--input",
        path(&dir.path().join("absent.csv")),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage ingest"));
}

#[test]
fn bad_arguments_are_input_errors() {
    assert_eq!(ruin(&["analyze", "--grid", "0,x"]).status.code(), Some(1));
    assert_eq!(
        ruin(&["analyze", "--loading", "fixed:-2"]).status.code(),
        Some(1)
    );
    assert_eq!(ruin(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ruin(&["--help"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "grid=5,1\n").unwrap();
    let out = ruin(&["analyze", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn degenerate_counts_are_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("flat.csv");
    let mut text = String::from("period,product,premium,claims_paid,claim_count\n");
    for m in 0..40 {
        text.push_str(&format!("{m},Motor,1000.0,{}.5,3\n", 500 + 7 * m));
    }
    fs::write(&csv, text).unwrap();
    let out = ruin(&[
        "analyze",
        "--input",
        path(&csv),
        "--out",
        path(&dir.path().join("out")),
        "--paths",
        "1000",
        "--config",
        path(&{
            let cfg = dir.path().join("motor.cfg");
            fs::write(&cfg, "products=Motor\nbootstrap=200\n").unwrap();
            cfg
        }),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage frequency_fit"));
}

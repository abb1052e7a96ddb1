use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_hra-forge"));
    c.env_remove("HRA_FORGE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn quantify_examples() {
    let o = run(&["quantify", "--occurred", "10", "--potential", "20"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("composite_hep=0.5\n"), "{}", stdout(&o));

    let o = run(&[
        "quantify",
        "--occurred",
        "10",
        "--potential",
        "20",
        "--level",
        "A=Expansive time",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("composite_hep="))
        .unwrap()
        .to_string();
    let v: f64 = line["composite_hep=".len()..].parse().unwrap();
    assert!((v - 0.009901).abs() < 5e-7, "{v}");

    let o = run(&[
        "quantify",
        "--occurred",
        "10",
        "--potential",
        "20",
        "--level",
        "A=Plenty of time",
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Plenty of time"), "{}", stderr(&o));
}

#[test]
fn pipeline_rejects_zero_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "pipeline",
        "--max-iterations",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn pipeline_stopped_early_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "pipeline",
        "--max-iterations",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let status = fs::read_to_string(dir.path().join("status.txt")).unwrap();
    assert!(status.contains("reason=max-iterations"), "{status}");
}

#[test]
fn pipeline_reruns_are_identical_and_report_renders() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(&["pipeline", "--out", d.path().to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    let first = summary.lines().nth(1).unwrap();
    assert!(first.starts_with("1,") && first.contains("Procedures"), "{summary}");
    assert_eq!(tree(a.path()), tree(b.path()));

    let o = run(&["report", "--out", a.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let svg = fs::read_to_string(a.path().join("report/01_hep.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 15);
    for name in ["01_residual_normal", "01_residual_vs_predicted", "01_reliability"] {
        assert!(a.path().join(format!("report/{name}.svg")).is_file(), "{name}");
        assert!(a.path().join(format!("report/{name}.csv")).is_file(), "{name}");
    }
    let again = run(&["report", "--out", a.path().to_str().unwrap()]);
    assert_eq!(code(&again), 0);
    assert_eq!(fs::read_to_string(a.path().join("report/01_hep.svg")).unwrap(), svg);
}

#[test]
fn report_lists_missing_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("summary.csv"), "{}", stderr(&o));

    fs::write(dir.path().join("summary.csv"), "iteration,active\n1,ABCDEFGH\n").unwrap();
    let o = run(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("metrics.csv") && err.contains("fit.csv"), "{err}");
}

#[test]
fn bad_thread_count_is_an_input_error() {
    let o = bin()
        .env("HRA_FORGE_THREADS", "zero")
        .args(["quantify", "--occurred", "1", "--potential", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("HRA_FORGE_THREADS"));

    let o = bin()
        .env("HRA_FORGE_THREADS", "2")
        .args(["quantify", "--occurred", "1", "--potential", "2"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}

/// Two-level factorial plus center runs: every quadratic column is the
/// same vector, so any model with two squared terms is rank deficient.
fn factorial_design(k: usize, with_responses: bool) -> String {
    let letters = &"ABCDEFGH"[..k];
    let mut s = format!(
        "std,run,{},reliability\n",
        letters.chars().map(String::from).collect::<Vec<_>>().join(",")
    );
    let mut rows: Vec<Vec<f64>> = (0..1usize << k)
        .map(|i| (0..k).map(|b| if (i >> b) & 1 == 1 { 0.8 } else { 0.2 }).collect())
        .collect();
    rows.extend(std::iter::repeat_n(vec![0.5; k], 4));
    for (i, r) in rows.iter().enumerate() {
        let levels: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        let resp = if with_responses {
            format!("{}", 80.0 + 5.0 * r[0] + 3.0 * r[1] + (i % 3) as f64 * 0.1)
        } else {
            String::new()
        };
        s += &format!("{},{},{},{resp}\n", i + 1, i + 1, levels.join(","));
    }
    s
}

#[test]
fn rank_deficient_model_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.csv");
    fs::write(&path, factorial_design(2, true)).unwrap();
    let o = run(&[
        "anova",
        "--design",
        path.to_str().unwrap(),
        "--model",
        "A, B, A^2, B^2",
        "--power",
        "1",
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn numerical_failure_in_pipeline_leaves_a_trail() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.csv");
    fs::write(&path, factorial_design(8, false)).unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "pipeline",
        "--design",
        path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let status = fs::read_to_string(out.join("status.txt")).unwrap();
    assert!(status.contains("status=failed"), "{status}");
}

use std::path::Path;
use std::process::{Command, Output};

use blocksplit::validation::random_desk_instance;
use blocksplit::CSV_HEADER;

fn blocksplit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blocksplit"))
        .args(args)
        .output()
        .unwrap()
}

fn small_problem(dir: &Path) -> String {
    let path = dir.join("problem.json");
    std::fs::write(
        &path,
        serde_json::to_string(&random_desk_instance(12).unwrap()).unwrap(),
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn run_writes_the_exact_header_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    let args = [
        "run",
        "--problem",
        &problem,
        "--alpha",
        "0.5",
        "--seed",
        "3",
        "--epochs",
        "40",
    ];
    let a = blocksplit(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(a.stdout, blocksplit(&args).stdout);
    let r = rows(&text);
    assert!(r.windows(2).all(|w| w[0][0] < w[1][0] && w[0][1] <= w[1][1]));
    assert!(r.last().unwrap()[1] >= 40.0);
    assert!(r.last().unwrap()[2] < -20.0);
}

#[test]
fn both_algorithms_write_one_file_each_and_a_plot() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    let out = dir.path().join("trace.csv");
    let plot = dir.path().join("plot.svg");
    let o = blocksplit(&[
        "run",
        "--problem",
        &problem,
        "--algorithm",
        "both",
        "--alpha",
        "0.5",
        "--epochs",
        "10",
        "--out",
        out.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["trace-dr.csv", "trace-ps.csv"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.starts_with(CSV_HEADER));
    }
    let svg = std::fs::read_to_string(plot).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"problem": {problem:?}, "algorithm": "ps", "alpha": 0.5, "epochs": 6}}"#),
    )
    .unwrap();
    let from_cfg = blocksplit(&["run", "--config", cfg.to_str().unwrap()]);
    assert!(
        from_cfg.status.success(),
        "{}",
        String::from_utf8_lossy(&from_cfg.stderr)
    );
    let explicit = blocksplit(&[
        "run",
        "--problem",
        &problem,
        "--algorithm",
        "ps",
        "--alpha",
        "0.5",
        "--epochs",
        "6",
    ]);
    assert_eq!(from_cfg.stdout, explicit.stdout);
    let overridden = blocksplit(&["run", "--config", cfg.to_str().unwrap(), "--epochs", "3"]);
    let last = rows(&String::from_utf8(overridden.stdout).unwrap()).pop().unwrap();
    assert!(last[1] >= 3.0 && last[1] < 6.0);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    assert_eq!(blocksplit(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        blocksplit(&["run", "--config", "/nonexistent/cfg.json"]).status.code(),
        Some(2)
    );
    assert_eq!(blocksplit(&["run"]).status.code(), Some(2));
    assert_eq!(
        blocksplit(&["run", "--problem", &problem, "--alpha", "1.5"])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alhpa": 1}"#).unwrap();
    let o = blocksplit(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alhpa"));
}

#[test]
fn solver_failures_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    let o = blocksplit(&["reference", "--problem", &problem, "--max-iterations", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reference"));
}

#[test]
fn stored_reference_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    let reference = dir.path().join("ref.json");
    let o = blocksplit(&["reference", "--problem", &problem, "--out", reference.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let args = ["run", "--problem", &problem, "--epochs", "5"];
    let computed = blocksplit(&args);
    let mut with_ref = args.to_vec();
    with_ref.extend(["--reference", reference.to_str().unwrap()]);
    assert_eq!(computed.stdout, blocksplit(&with_ref).stdout);
}

#[test]
fn compare_writes_grid_traces_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let problem = small_problem(dir.path());
    let out = dir.path().join("mean.csv");
    let traces = dir.path().join("traces");
    let plot = dir.path().join("cmp.svg");
    let o = blocksplit(&[
        "compare",
        "--problem",
        &problem,
        "--alphas",
        "0.5,1.0",
        "--seeds",
        "3",
        "--epochs",
        "8",
        "--out",
        out.to_str().unwrap(),
        "--trace-dir",
        traces.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mean = std::fs::read_to_string(out).unwrap();
    assert!(mean.starts_with("algorithm,alpha,epochs,error_db\n"));
    for cell in ["dr,0.5,", "dr,1,", "ps,0.5,", "ps,1,"] {
        assert!(mean.contains(cell), "{cell}");
    }
    assert_eq!(std::fs::read_dir(traces).unwrap().count(), 12);
    assert_eq!(std::fs::read_to_string(plot).unwrap().matches("<polyline").count(), 4);
}

#[test]
fn export_round_trips_a_benchmark() {
    let o = blocksplit(&["export", "--experiment", "exp2"]);
    assert!(o.status.success());
    let spec: blocksplit::ProblemSpec = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(spec, blocksplit::experiments::Experiment::Exp2.build(1).unwrap());
}

#[test]
fn validate_passes_on_a_clean_build() {
    let o = blocksplit(&["validate"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 8);
}

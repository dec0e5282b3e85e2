//! Black-box checks of the binary: exit codes, table shapes, determinism.

use std::process::Command;

fn cipm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cipm"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = cipm().args(args).output().expect("spawn cipm");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn solve_builtin_success() {
    let (code, stdout, _) = run(&[
        "solve",
        "--problem",
        "qp_eq",
        "--strategy",
        "hykkt",
        "--gamma",
        "1e7",
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("status      optimal"));
    assert!(stdout.contains("objective"));
    assert!(stdout.contains("factorize"));
}

#[test]
fn solve_unknown_problem_lists_available() {
    let (code, _, stderr) = run(&["solve", "--problem", "missing_name"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown problem"));
    assert!(stderr.contains("qp_eq"), "should list available problems");
}

#[test]
fn gamma_with_lifted_is_a_config_error() {
    let (code, _, stderr) = run(&[
        "solve",
        "--problem",
        "qp_eq",
        "--strategy",
        "lifted",
        "--gamma",
        "1e7",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--gamma"));
}

#[test]
fn solver_failure_maps_to_exit_one() {
    let (code, stdout, _) = run(&["solve", "--problem", "infeasible_lp"]);
    assert_eq!(code, 1);
    assert!(stdout.contains("status"));
}

#[test]
fn solve_qp_file_and_trace() {
    let dir = std::env::temp_dir();
    let qp_path = dir.join(format!("cipm_cli_{}.json", std::process::id()));
    let trace_path = dir.join(format!("cipm_cli_{}_trace.csv", std::process::id()));
    std::fs::write(
        &qp_path,
        r#"{"n": 2, "me": 1, "mi": 0,
            "Q": [[0,0,1.0],[1,1,1.0]], "c": [0.0, 0.0],
            "A_eq": [[0,0,1.0],[0,1,1.0]], "b_eq": [-1.0],
            "A_in": [], "b_in": [], "bounded": []}"#,
    )
    .unwrap();
    let (code, stdout, _) = run(&[
        "solve",
        "--qp",
        qp_path.to_str().unwrap(),
        "--trace",
        trace_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("optimal"));
    let trace = std::fs::read_to_string(&trace_path).unwrap();
    assert!(trace.starts_with("iteration,mu,"));
    assert!(trace.lines().count() >= 2);
    std::fs::remove_file(qp_path).ok();
    std::fs::remove_file(trace_path).ok();
}

#[test]
fn bench_covers_suite_and_is_deterministic() {
    let (code, first, _) = run(&["bench", "--tol", "1e-6", "--lifted-tol", "1e-6"]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = first.lines().collect();
    assert!(rows[0].starts_with("problem,strategy,status"));
    assert!(rows.len() - 1 >= 30, "only {} rows", rows.len() - 1);

    let (_, second, _) = run(&["bench", "--tol", "1e-6", "--lifted-tol", "1e-6"]);
    // Identical modulo the timing columns.
    let strip = |table: &str| -> Vec<String> {
        table
            .lines()
            .map(|line| line.split(',').take(6).collect::<Vec<_>>().join(","))
            .collect()
    };
    assert_eq!(strip(&first), strip(&second));
}

#[test]
fn bench_empty_selection_is_header_only() {
    let (code, stdout, _) = run(&["bench", "--only", "nothing_matches"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 1);
}

#[test]
fn sweep_gamma_single_value() {
    let (code, stdout, _) = run(&["sweep-gamma", "--problem", "qp_eq", "--values", "1e7"]);
    assert_eq!(code, 0);
    assert_eq!(stdout.lines().count(), 2, "{stdout}");
}

#[test]
fn sweep_gamma_cg_noninc_on_steering() {
    let (code, stdout, _) = run(&["sweep-gamma", "--problem", "steering"]);
    assert_eq!(code, 0);
    let mut last = usize::MAX;
    for line in stdout.lines().skip(1) {
        let cg: usize = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(cg <= last, "{stdout}");
        last = cg;
    }
}

#[test]
fn sweep_tau_error_scales_down() {
    let (code, stdout, _) = run(&["sweep-tau", "--problem", "qp_eq", "--values", "1e-4,1e-7"]);
    assert_eq!(code, 0);
    let errs: Vec<f64> = stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(errs.len(), 2);
    assert!(errs[1] < errs[0] / 10.0, "{stdout}");
}

#[test]
fn spectrum_emits_rows_and_probe() {
    let (code, stdout, _) = run(&[
        "spectrum",
        "--problem",
        "qp_mixed",
        "--values",
        "1e6",
        "--probe-noise",
        "1e-12",
        "--seed",
        "3",
    ]);
    assert_eq!(code, 0);
    assert!(stdout
        .lines()
        .next()
        .unwrap()
        .starts_with("gamma,duality,ell"));
    assert!(stdout.contains("# schur"));
    assert!(stdout.contains("# probe"));
}

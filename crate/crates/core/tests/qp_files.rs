//! End-to-end QP loading: file to solution.

use std::io::Write;
use std::sync::Arc;

use cipm::ipm::{solve, IpmOptions};
use cipm::nlp::load_qp_json;
use cipm::strategy::StrategyKind;

fn write_temp(content: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir();
    let path = dir.join(format!(
        "cipm_qp_{}_{}.json",
        std::process::id(),
        content.len()
    ));
    let mut f = std::fs::File::create(&path).unwrap();
    f.write_all(content.as_bytes()).unwrap();
    path
}

#[test]
fn identity_qp_with_budget_solves_by_every_strategy() {
    let path = write_temp(
        r#"{
            "n": 2, "me": 1, "mi": 0,
            "Q": [[0, 0, 1.0], [1, 1, 1.0]],
            "c": [0.0, 0.0],
            "A_eq": [[0, 0, 1.0], [0, 1, 1.0]],
            "b_eq": [-1.0],
            "A_in": [], "b_in": [], "bounded": []
        }"#,
    );
    let qp = Arc::new(load_qp_json::<f64, _>(&path).unwrap());
    for kind in [
        StrategyKind::DirectK1,
        StrategyKind::HyKkt { gamma: 1e7 },
        StrategyKind::LiftedKkt { tau: 1e-7 },
        StrategyKind::DenseK2Oracle,
    ] {
        let tol = match kind {
            StrategyKind::LiftedKkt { .. } => 1e-7,
            _ => 1e-9,
        };
        let res = solve(&qp, &IpmOptions::with_strategy(kind).with_tol(tol));
        assert!(res.is_optimal(), "{:?}", kind.label());
        assert!((res.iterate.x[0] - 0.5).abs() <= 1e-5, "{:?}", kind.label());
        assert!((res.iterate.x[1] - 0.5).abs() <= 1e-5, "{:?}", kind.label());
    }
    std::fs::remove_file(path).ok();
}

#[test]
fn separable_qp_unconstrained_minimum() {
    let path = write_temp(
        r#"{
            "n": 2, "me": 0, "mi": 0,
            "Q": [[0, 0, 1.0], [1, 1, 4.0]],
            "c": [-1.0, -4.0],
            "A_eq": [], "b_eq": [],
            "A_in": [], "b_in": [], "bounded": []
        }"#,
    );
    let qp = Arc::new(load_qp_json::<f64, _>(&path).unwrap());
    let res = solve(&qp, &IpmOptions::default());
    assert!(res.is_optimal());
    assert!((res.iterate.x[0] - 1.0).abs() <= 1e-7);
    assert!((res.iterate.x[1] - 1.0).abs() <= 1e-7);
    std::fs::remove_file(path).ok();
}

#[test]
fn malformed_file_names_missing_field() {
    let path = write_temp(r#"{"n": 1, "me": 0, "mi": 0, "c": [0.0]}"#);
    let err = load_qp_json::<f64, _>(&path).unwrap_err();
    assert!(err.to_string().contains("/Q"), "{err}");
    std::fs::remove_file(path).ok();
}

#[test]
fn bounded_indices_apply() {
    // min (x0 + 1)^2-ish pull below zero, bound keeps it at the origin.
    let path = write_temp(
        r#"{
            "n": 1, "me": 0, "mi": 0,
            "Q": [[0, 0, 2.0]],
            "c": [1.0],
            "A_eq": [], "b_eq": [],
            "A_in": [], "b_in": [], "bounded": [0]
        }"#,
    );
    let qp = Arc::new(load_qp_json::<f64, _>(&path).unwrap());
    assert_eq!(qp.num_bounded(), 1);
    let res = solve(&qp, &IpmOptions::default());
    assert!(res.is_optimal());
    assert!(res.iterate.x[0] <= 1e-6 && res.iterate.x[0] > 0.0);
    std::fs::remove_file(path).ok();
}

#[test]
fn inequality_qp_from_json() {
    // min 0.5||x||^2 - x0 - x1  s.t.  x0 + x1 <= 1  (active at solution)
    let path = write_temp(
        r#"{
            "n": 2, "me": 0, "mi": 1,
            "Q": [[0, 0, 1.0], [1, 1, 1.0]],
            "c": [-1.0, -1.0],
            "A_eq": [], "b_eq": [],
            "A_in": [[0, 0, 1.0], [0, 1, 1.0]],
            "b_in": [-1.0],
            "bounded": []
        }"#,
    );
    let qp = Arc::new(load_qp_json::<f64, _>(&path).unwrap());
    let res = solve(
        &qp,
        &IpmOptions::with_strategy(StrategyKind::HyKkt { gamma: 1e7 }).with_tol(1e-8),
    );
    assert!(res.is_optimal());
    assert!((res.iterate.x[0] - 0.5).abs() <= 1e-6);
    assert!((res.objective - (-0.75)).abs() <= 1e-6);
    std::fs::remove_file(path).ok();
}

#[test]
fn matrix_market_disk_fixture() {
    use cipm::sparse::{csc_from_triplets, SparseSymCsc};
    let a = csc_from_triplets(3, &[(0, 0, 2.0f64), (1, 0, -1.0), (2, 2, 4.5)]).unwrap();
    let path = std::env::temp_dir().join(format!("cipm_mm_{}.mtx", std::process::id()));
    a.dump_matrix_market(&path).unwrap();
    let b = SparseSymCsc::<f64>::load_matrix_market(&path).unwrap();
    assert_eq!(a, b);
    std::fs::remove_file(path).ok();
}

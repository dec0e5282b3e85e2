//! Cross-strategy direction checks against the dense reference paths.

use std::sync::Arc;

use cipm::ipm::{initialize, IpmOptions};
use cipm::kkt::dense_oracle::{solve_augmented_dense, solve_unreduced_dense};
use cipm::kkt::{build_rhs, Direction, Iterate};
use cipm::nlp::{builtin_suite, lift_equalities, CooPattern, NlpProblem};
use cipm::scalar::norm_inf;
use cipm::strategy::{KktStrategy, StrategyKind};

fn suite_problem(name: &str) -> Arc<NlpProblem<f64>> {
    builtin_suite::<f64>()
        .into_iter()
        .find(|e| e.problem.name() == name)
        .expect("suite entry")
        .problem
}

fn first_iterate(problem: &NlpProblem<f64>) -> Iterate<f64> {
    initialize(problem, &IpmOptions::default())
}

fn rel_diff(a: &Direction<f64>, b: &Direction<f64>) -> f64 {
    let sa = a.stacked();
    let sb = b.stacked();
    let scale = norm_inf(&sa).max(1.0);
    sa.iter()
        .zip(&sb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
        / scale
}

fn step(kind: StrategyKind<f64>, problem: &NlpProblem<f64>, it: &Iterate<f64>) -> Direction<f64> {
    let mut strategy = KktStrategy::new(kind, problem).unwrap();
    let mut it = it.clone();
    strategy.compute_step(problem, &mut it).unwrap().direction
}

#[test]
fn first_step_matches_oracle() {
    let p = suite_problem("qp_eq");
    let it = first_iterate(&p);
    let oracle = step(StrategyKind::DenseK2Oracle, &p, &it);
    let direct = step(StrategyKind::DirectK1, &p, &it);
    let hykkt = step(StrategyKind::HyKkt { gamma: 1e7 }, &p, &it);
    assert!(
        rel_diff(&direct, &oracle) <= 1e-8,
        "{}",
        rel_diff(&direct, &oracle)
    );
    assert!(
        rel_diff(&hykkt, &oracle) <= 1e-6,
        "{}",
        rel_diff(&hykkt, &oracle)
    );
}

#[test]
fn lifted_step_near_oracle_inside_relaxation_band() {
    // Near a solution the relaxed equalities hold within tau, so the
    // lifted iterate maps directly from the original one. The primal
    // direction then stays within the recorded distance of the reference
    // direction (regression fixture; the gap is the relaxation bias).
    let p = suite_problem("qp_eq");
    let opts = IpmOptions::with_strategy(StrategyKind::DirectK1).with_tol(1e-8);
    let res = cipm::ipm::solve(&p, &opts);
    assert!(res.is_optimal());
    let near = res.iterate.clone();
    let oracle = step(StrategyKind::DenseK2Oracle, &p, &near);

    let tau = 1e-8;
    let lifted = Arc::new(lift_equalities(&p, tau));
    let mut g = vec![0.0; p.m_e()];
    p.eval_eq(&near.x, &mut g);
    assert!(g.iter().all(|gi| gi.abs() < tau), "iterate outside band");
    // Slacks per the relaxed rows [g - tau, -g - tau, h], mu-consistent
    // multipliers.
    let mut s = Vec::new();
    for &gi in &g {
        s.push(tau - gi);
    }
    for &gi in &g {
        s.push(tau + gi);
    }
    let v: Vec<f64> = s.iter().map(|si| near.mu / si).collect();
    let lit = Iterate {
        x: near.x.clone(),
        z: v.clone(),
        s,
        v,
        y: vec![],
        u: near.u.clone(),
        mu: near.mu,
        delta_w: 0.0,
        delta_c: 0.0,
    };
    let ld = step(StrategyKind::LiftedKkt { tau }, &lifted, &lit);

    let diff = oracle
        .dx
        .iter()
        .zip(&ld.dx)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    assert!(diff <= 1e-4, "dx distance {diff}");
}

#[test]
fn hykkt_without_equalities_reduces_to_direct() {
    let p = suite_problem("qp_ineq");
    assert_eq!(p.m_e(), 0);
    let it = first_iterate(&p);
    let direct = step(StrategyKind::DirectK1, &p, &it);
    let hykkt = step(StrategyKind::HyKkt { gamma: 1e7 }, &p, &it);
    assert!(rel_diff(&direct, &hykkt) <= 1e-12);
}

#[test]
fn hykkt_cg_iterations_nonincreasing_in_gamma() {
    // Fixed late iterate of the control problem; more regularization means
    // tighter Schur clustering and no extra CG work.
    let p = suite_problem("steering");
    let mut opts = IpmOptions::with_strategy(StrategyKind::DirectK1).with_tol(1e-8);
    opts.snapshot_iterates = 100;
    let res = cipm::ipm::solve(&p, &opts);
    assert!(res.is_optimal());
    let late = res.snapshots.last().unwrap().clone();

    let mut last = usize::MAX;
    for gamma in [1e4, 1e5, 1e6, 1e7, 1e8] {
        let mut strategy = KktStrategy::new(StrategyKind::HyKkt { gamma }, &p).unwrap();
        let mut it = late.clone();
        let step = strategy.compute_step(&p, &mut it).unwrap();
        let iters = step.cg.unwrap().iterations;
        assert!(
            iters <= last,
            "cg iterations grew from {last} to {iters} at gamma {gamma:e}"
        );
        last = iters;

        // Positive definiteness certificate after correction.
        let inertia = strategy.last_factor_inertia().unwrap();
        assert_eq!(inertia.negative, 0);
        assert_eq!(inertia.zero, 0);
    }
}

#[test]
fn convex_problem_needs_no_correction() {
    let p = suite_problem("qp_mixed");
    let mut it = first_iterate(&p);
    let mut strategy = KktStrategy::new(StrategyKind::DirectK1, &p).unwrap();
    let step = strategy.compute_step(&p, &mut it).unwrap();
    assert_eq!(step.inertia_corrections, 0);
    assert_eq!(it.delta_w, 0.0);
    assert_eq!(it.delta_c, 0.0);
}

#[test]
fn negative_curvature_forces_large_shift() {
    // W = -I with no constraints: the condensed matrix needs delta_w > 1
    // before the eigenvalue shift -1 + delta_w turns positive (plus the
    // small interior D_x contribution, which cannot rescue it).
    let p: NlpProblem<f64> = NlpProblem::builder("concave", 2)
        .objective(
            |x: &[f64]| -0.5 * (x[0] * x[0] + x[1] * x[1]),
            |x, g| {
                g[0] = -x[0];
                g[1] = -x[1];
            },
        )
        .hessian(CooPattern::new(vec![0, 1], vec![0, 1]), |_x, _y, _z, v| {
            v[0] = -1.0;
            v[1] = -1.0;
        })
        .start(vec![1.0, 1.0])
        .build();
    let mut it = first_iterate(&p);
    let mut strategy = KktStrategy::new(StrategyKind::DirectK1, &p).unwrap();
    let step = strategy.compute_step(&p, &mut it).unwrap();
    assert!(step.inertia_corrections > 0);
    assert!(it.delta_w > 1.0, "delta_w = {}", it.delta_w);
    let inertia = strategy.last_factor_inertia().unwrap();
    assert_eq!(inertia.negative, 0);
    assert_eq!(inertia.zero, 0);
}

#[test]
fn nonconvex_run_records_corrections() {
    let p = suite_problem("scurve");
    let opts = IpmOptions::with_strategy(StrategyKind::DirectK1).with_tol(1e-8);
    let res = cipm::ipm::solve(&p, &opts);
    assert!(res.is_optimal());
    let total: usize = res.trace.iter().map(|r| r.inertia_corrections).sum();
    assert!(total > 0, "expected mid-run inertia corrections");
}

#[test]
fn dependent_equalities_trigger_dual_regularization() {
    // Duplicated equality rows make the saddle system singular; the
    // zero-pivot report in the equality block switches on delta_c.
    let p: NlpProblem<f64> = NlpProblem::builder("dup_eq", 2)
        .objective(
            |x: &[f64]| 0.5 * (x[0] * x[0] + x[1] * x[1]),
            |x, g| g.copy_from_slice(x),
        )
        .equalities(
            2,
            |x, out| {
                out[0] = x[0] + x[1] - 1.0;
                out[1] = 2.0 * (x[0] + x[1] - 1.0);
            },
            CooPattern::new(vec![0, 0, 1, 1], vec![0, 1, 0, 1]),
            |_x, vals| {
                vals[0] = 1.0;
                vals[1] = 1.0;
                vals[2] = 2.0;
                vals[3] = 2.0;
            },
        )
        .hessian(CooPattern::new(vec![0, 1], vec![0, 1]), |_x, _y, _z, v| {
            v[0] = 1.0;
            v[1] = 1.0;
        })
        .build();
    let mut it = first_iterate(&p);
    let mut strategy = KktStrategy::new(StrategyKind::DirectK1, &p).unwrap();
    let step = strategy.compute_step(&p, &mut it).unwrap();
    assert!(it.delta_c > 0.0, "delta_c should be active");
    assert!(step.inertia_corrections > 0);
    assert!(step.residual_unreduced.is_finite());
}

#[test]
fn lifted_strategy_rejects_equalities() {
    let p = suite_problem("qp_eq");
    assert!(KktStrategy::new(StrategyKind::LiftedKkt { tau: 1e-8 }, &p).is_err());
}

#[test]
fn elimination_equivalence_across_formulations() {
    // Dense unreduced solve, dense augmented solve + recovery, and the
    // sparse condensed solve + recoveries produce the same direction.
    for entry in builtin_suite::<f64>() {
        if !entry.convex {
            continue;
        }
        let p = &entry.problem;
        let dim = 2 * p.n() + 3 * p.m_i() + p.m_e();
        if dim > 400 {
            continue;
        }
        let it = first_iterate(p);
        let d3 = solve_unreduced_dense(p, &it).unwrap();
        let rhs = build_rhs(p, &it);
        let d2 = solve_augmented_dense(p, &it, &rhs).unwrap();
        let d1 = step(StrategyKind::DirectK1, p, &it);
        let name = p.name();
        assert!(
            rel_diff(&d3, &d2) <= 1e-7,
            "{name}: K3 vs K2 {}",
            rel_diff(&d3, &d2)
        );
        assert!(
            rel_diff(&d3, &d1) <= 1e-7,
            "{name}: K3 vs K1 {}",
            rel_diff(&d3, &d1)
        );
    }
}

#[test]
fn step_residual_meets_target_or_flags() {
    for entry in builtin_suite::<f64>() {
        let p = &entry.problem;
        if p.m_e() > 0 {
            let mut it = first_iterate(p);
            let mut strategy = KktStrategy::new(StrategyKind::HyKkt { gamma: 1e7 }, p).unwrap();
            let step = strategy.compute_step(p, &mut it).unwrap();
            let eps_k = 1e-8f64.min(1e-2 * it.mu);
            assert!(
                step.degraded || step.residual_unreduced <= eps_k,
                "{}: residual {} above target {eps_k} without flag",
                p.name(),
                step.residual_unreduced
            );
        }
    }
}

#[test]
fn lifted_equals_direct_without_equalities() {
    // Lifting a problem with no equalities is the identity transform.
    let p = suite_problem("qp_ineq");
    assert_eq!(p.m_e(), 0);
    let it = first_iterate(&p);
    let direct = step(StrategyKind::DirectK1, &p, &it);
    let lifted = step(StrategyKind::LiftedKkt { tau: 1e-8 }, &p, &it);
    assert!(rel_diff(&direct, &lifted) <= 1e-14);
}

#[test]
fn opf_mid_run_cg_nonincreasing_in_gamma() {
    let p = suite_problem("opf9");
    let mut opts = IpmOptions::with_strategy(StrategyKind::DirectK1).with_tol(1e-8);
    opts.snapshot_iterates = 40;
    let res = cipm::ipm::solve(&p, &opts);
    assert!(res.is_optimal());
    let mid = res.snapshots[res.snapshots.len() / 2].clone();
    let cg_at = |gamma: f64| {
        let mut strategy = KktStrategy::new(StrategyKind::HyKkt { gamma }, &p).unwrap();
        let mut it = mid.clone();
        strategy
            .compute_step(&p, &mut it)
            .unwrap()
            .cg
            .unwrap()
            .iterations
    };
    let lo = cg_at(1e5);
    let hi = cg_at(1e7);
    assert!(hi <= lo, "cg grew from {lo} to {hi}");
}

#[test]
fn gamma_escalation_mechanics() {
    // Escalation refactorizes at 10x gamma and keeps the factor definite;
    // the step path invokes it automatically on CG failure.
    use cipm::kkt::KktEval;
    use cipm::strategy::{HykktEngine, StepTimings};
    let p = suite_problem("qp_eq");
    let mut it = first_iterate(&p);
    let mut engine = HykktEngine::new(&p, 1e6);
    let eval = KktEval::new(&p, &it);
    let mut timings = StepTimings::default();
    engine.prepare(&eval, &mut it, &mut timings).unwrap();
    assert_eq!(engine.gamma(), 1e6);
    engine.escalate_gamma(&eval, &it, &mut timings).unwrap();
    assert_eq!(engine.gamma(), 1e7);
    let factor = engine.factor().unwrap();
    assert_eq!(factor.inertia().negative, 0);
    assert_eq!(factor.inertia().zero, 0);
}

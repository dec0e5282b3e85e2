//! Built-in test problems.
//!
//! Each entry carries a reference objective where one exists: hand-derived
//! KKT values for the small quadratics, and for the nonlinear entries the
//! value produced by the dense reference strategy at tolerance 1e-10,
//! frozen as a fixture.

use std::sync::Arc;

use crate::nlp::opf::opf9;
use crate::nlp::{CooPattern, NlpProblem};
use crate::scalar::Scalar;

/// A built-in problem plus its expectations.
pub struct SuiteEntry<T> {
    pub problem: Arc<NlpProblem<T>>,
    /// True when the Lagrangian Hessian is positive semidefinite everywhere.
    pub convex: bool,
    /// Whether the solver is expected to reach `Optimal` on this entry.
    pub expect_optimal: bool,
    pub reference_objective: Option<f64>,
}

impl<T> SuiteEntry<T> {
    fn new(
        problem: NlpProblem<T>,
        convex: bool,
        expect_optimal: bool,
        reference_objective: Option<f64>,
    ) -> Self {
        Self {
            problem: Arc::new(problem),
            convex,
            expect_optimal,
            reference_objective,
        }
    }
}

/// Constant-Hessian problem `min 0.5 x'Wx + c'x` with linear constraints,
/// assembled from lower-triangle Hessian triplets.
struct QuadSpec {
    name: &'static str,
    n: usize,
    w: Vec<(usize, usize, f64)>,
    c: Vec<f64>,
    a_eq: Vec<(usize, usize, f64)>,
    b_eq: Vec<f64>,
    a_in: Vec<(usize, usize, f64)>,
    b_in: Vec<f64>,
    bounded: Vec<usize>,
    x0: Vec<f64>,
}

fn quadratic<T: Scalar>(spec: QuadSpec) -> NlpProblem<T> {
    let QuadSpec {
        name,
        n,
        w,
        c,
        a_eq,
        b_eq,
        a_in,
        b_in,
        bounded,
        x0,
    } = spec;
    let m_e = b_eq.len();
    let m_i = b_in.len();
    let w_t: Vec<(usize, usize, T)> = w.iter().map(|&(r, c, v)| (r, c, T::cst(v))).collect();
    let c_t: Vec<T> = c.iter().map(|&v| T::cst(v)).collect();

    let w_obj = w_t.clone();
    let c_obj = c_t.clone();
    let objective = move |x: &[T]| {
        let mut acc = T::zero();
        for &(r, cc, v) in &w_obj {
            let term = v * x[r] * x[cc];
            acc += if r == cc { T::cst(0.5) * term } else { term };
        }
        for (ci, xi) in c_obj.iter().zip(x) {
            acc += *ci * *xi;
        }
        acc
    };
    let w_grad = w_t.clone();
    let gradient = move |x: &[T], g: &mut [T]| {
        g.copy_from_slice(&c_t);
        for &(r, cc, v) in &w_grad {
            g[r] += v * x[cc];
            if r != cc {
                g[cc] += v * x[r];
            }
        }
    };

    let lin = |a: Vec<(usize, usize, f64)>, b: Vec<f64>| {
        let a_t: Vec<(usize, usize, T)> = a.iter().map(|&(r, c, v)| (r, c, T::cst(v))).collect();
        let b_t: Vec<T> = b.iter().map(|&v| T::cst(v)).collect();
        let pattern = CooPattern::new(
            a_t.iter().map(|e| e.0).collect(),
            a_t.iter().map(|e| e.1).collect(),
        );
        let a_eval = a_t.clone();
        let eval = move |x: &[T], out: &mut [T]| {
            out.copy_from_slice(&b_t);
            for &(r, c, v) in &a_eval {
                out[r] += v * x[c];
            }
        };
        let jac = move |_x: &[T], vals: &mut [T]| {
            for (slot, e) in vals.iter_mut().zip(&a_t) {
                *slot = e.2;
            }
        };
        (eval, pattern, jac)
    };
    let (eq_eval, eq_pattern, eq_jac) = lin(a_eq, b_eq);
    let (in_eval, in_pattern, in_jac) = lin(a_in, b_in);

    let hess_pattern = CooPattern::new(
        w_t.iter().map(|e| e.0).collect(),
        w_t.iter().map(|e| e.1).collect(),
    );
    let w_vals: Vec<T> = w_t.iter().map(|e| e.2).collect();

    let mut mask = vec![false; n];
    for i in bounded {
        mask[i] = true;
    }

    NlpProblem::builder(name, n)
        .bounded(mask)
        .start(x0.into_iter().map(T::cst).collect())
        .objective(objective, gradient)
        .equalities(m_e, eq_eval, eq_pattern, eq_jac)
        .inequalities(m_i, in_eval, in_pattern, in_jac)
        .hessian(hess_pattern, move |_x, _y, _z, vals| {
            vals.copy_from_slice(&w_vals)
        })
        .build()
}

fn qp_eq<T: Scalar>() -> NlpProblem<T> {
    quadratic(QuadSpec {
        name: "qp_eq",
        n: 2,
        w: vec![(0, 0, 1.0), (1, 1, 1.0)],
        c: vec![0.0, 0.0],
        a_eq: vec![(0, 0, 1.0), (0, 1, 1.0)],
        b_eq: vec![-1.0],
        a_in: vec![],
        b_in: vec![],
        bounded: vec![],
        x0: vec![0.0, 0.0],
    })
}

fn quad_free<T: Scalar>() -> NlpProblem<T> {
    quadratic(QuadSpec {
        name: "quad_free",
        n: 2,
        w: vec![(0, 0, 1.0), (1, 1, 4.0)],
        c: vec![-1.0, -4.0],
        a_eq: vec![],
        b_eq: vec![],
        a_in: vec![],
        b_in: vec![],
        bounded: vec![],
        x0: vec![0.0, 0.0],
    })
}

fn lp_simple<T: Scalar>() -> NlpProblem<T> {
    quadratic(QuadSpec {
        name: "lp_simple",
        n: 2,
        w: vec![],
        c: vec![1.0, 2.0],
        a_eq: vec![(0, 0, 1.0), (0, 1, 1.0)],
        b_eq: vec![-1.0],
        a_in: vec![],
        b_in: vec![],
        bounded: vec![0, 1],
        x0: vec![0.5, 0.5],
    })
}

fn qp_ineq<T: Scalar>() -> NlpProblem<T> {
    quadratic(QuadSpec {
        name: "qp_ineq",
        n: 2,
        w: vec![(0, 0, 1.0), (1, 1, 1.0)],
        c: vec![-1.0, -1.0],
        a_eq: vec![],
        b_eq: vec![],
        a_in: vec![(0, 0, 1.0), (0, 1, 1.0)],
        b_in: vec![-1.0],
        bounded: vec![],
        x0: vec![0.0, 0.0],
    })
}

fn qp_bound<T: Scalar>() -> NlpProblem<T> {
    quadratic(QuadSpec {
        name: "qp_bound",
        n: 3,
        w: vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
        c: vec![-1.0, 1.0, -0.5],
        a_eq: vec![],
        b_eq: vec![],
        a_in: vec![],
        b_in: vec![],
        bounded: vec![0, 1, 2],
        x0: vec![0.5, 0.5, 0.5],
    })
}

fn qp_mixed<T: Scalar>() -> NlpProblem<T> {
    // min 0.5||x||^2  s.t.  x1 + x2 + x3 = 3,  x1 - x2 <= 0.5,  x3 >= 1.25.
    // The second inequality is active at the optimum.
    quadratic(QuadSpec {
        name: "qp_mixed",
        n: 3,
        w: vec![(0, 0, 1.0), (1, 1, 1.0), (2, 2, 1.0)],
        c: vec![0.0, 0.0, 0.0],
        a_eq: vec![(0, 0, 1.0), (0, 1, 1.0), (0, 2, 1.0)],
        b_eq: vec![-3.0],
        a_in: vec![(0, 0, 1.0), (0, 1, -1.0), (1, 2, -1.0)],
        b_in: vec![-0.5, 1.25],
        bounded: vec![],
        x0: vec![1.0, 1.0, 1.0],
    })
}

fn qp_degen<T: Scalar>() -> NlpProblem<T> {
    // Duplicated active inequality: the constraint gradient set is rank
    // deficient at the solution and multipliers are non-unique.
    quadratic(QuadSpec {
        name: "qp_degen",
        n: 2,
        w: vec![(0, 0, 1.0), (1, 1, 1.0)],
        c: vec![-2.0, -2.0],
        a_eq: vec![],
        b_eq: vec![],
        a_in: vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 2.0)],
        b_in: vec![-2.0, -4.0],
        bounded: vec![],
        x0: vec![0.0, 0.0],
    })
}

fn qp_indef<T: Scalar>() -> NlpProblem<T> {
    // Indefinite Hessian; the minimum sits at a vertex where the bound on
    // x2 is active. Exercises the inertia-correction loop.
    quadratic(QuadSpec {
        name: "qp_indef",
        n: 2,
        w: vec![(0, 0, -2.0), (1, 1, 1.0)],
        c: vec![0.0, 0.0],
        a_eq: vec![(0, 0, 1.0), (0, 1, 1.0)],
        b_eq: vec![-1.0],
        a_in: vec![],
        b_in: vec![],
        bounded: vec![0, 1],
        x0: vec![0.5, 0.5],
    })
}

fn chain_qp<T: Scalar>() -> NlpProblem<T> {
    // Tridiagonal-coupled tracking quadratic with one budget equality and
    // two ceiling inequalities. Large enough for the ordering to matter.
    let n = 20;
    let mut w = Vec::new();
    for i in 0..n {
        let d = 1.0 + if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        w.push((i, i, d));
        if i > 0 {
            w.push((i, i - 1, -1.0));
        }
    }
    let target: Vec<f64> = (0..n).map(|i| ((i % 5) as f64) / 2.0 - 1.0).collect();
    let c: Vec<f64> = target.iter().map(|t| -t).collect();
    let a_eq: Vec<(usize, usize, f64)> = (0..n).map(|i| (0, i, 1.0)).collect();
    quadratic(QuadSpec {
        name: "chain_qp",
        n,
        w,
        c,
        a_eq,
        b_eq: vec![-10.0],
        a_in: vec![(0, 5, 1.0), (1, 15, 1.0)],
        b_in: vec![-2.0, -1.0],
        bounded: vec![],
        x0: vec![0.5; 20],
    })
}

fn scurve<T: Scalar>() -> NlpProblem<T> {
    // Tilted double wells under a budget equality; the Hessian is
    // indefinite around the start, forcing primal regularization mid-run.
    let n = 4;
    let coef = [1.0, 1.1, 1.2, 1.3];
    let objective = move |x: &[T]| {
        let mut acc = T::zero();
        for i in 0..n {
            let w = x[i] * x[i] - T::one();
            acc += T::cst(coef[i] / 4.0) * w * w + T::cst(0.1) * x[i];
        }
        acc
    };
    let gradient = move |x: &[T], g: &mut [T]| {
        for i in 0..n {
            g[i] = T::cst(coef[i]) * (x[i] * x[i] * x[i] - x[i]) + T::cst(0.1);
        }
    };
    let eq = |x: &[T], out: &mut [T]| {
        out[0] = x.iter().copied().sum::<T>() - T::cst(2.0);
    };
    let eq_pattern = CooPattern::new(vec![0; n], (0..n).collect());
    let eq_jac = |_x: &[T], vals: &mut [T]| vals.iter_mut().for_each(|v| *v = T::one());
    let hess_pattern = CooPattern::new((0..n).collect(), (0..n).collect());
    let hess = move |x: &[T], _y: &[T], _z: &[T], vals: &mut [T]| {
        for i in 0..n {
            vals[i] = T::cst(coef[i]) * (T::cst(3.0) * x[i] * x[i] - T::one());
        }
    };
    NlpProblem::builder("scurve", n)
        .start(vec![T::cst(0.5); n])
        .objective(objective, gradient)
        .equalities(1, eq, eq_pattern, eq_jac)
        .hessian(hess_pattern, hess)
        .build()
}

fn steering<T: Scalar>() -> NlpProblem<T> {
    // Discretized double-integrator steering: trapezoidal dynamics as
    // equalities, control bounds as inequalities, quadratic effort plus
    // state tracking. The horizon is tight enough that the control limits
    // are active at the optimum (unconstrained peak would be ~1.36).
    const NODES: usize = 7;
    const DT: f64 = 0.35;
    let n = 3 * NODES;
    let y_i = |k: usize| k;
    let v_i = |k: usize| NODES + k;
    let a_i = |k: usize| 2 * NODES + k;
    let weight = |k: usize| if k == 0 || k == NODES - 1 { 0.5 } else { 1.0 };
    let rho_y = 0.1;
    let rho_v = 0.05;
    let y_ref = |k: usize| (k as f64) / ((NODES - 1) as f64);

    let objective = move |x: &[T]| {
        let mut acc = T::zero();
        for k in 0..NODES {
            let a = x[a_i(k)];
            acc += T::cst(DT * weight(k)) * a * a;
            let dy = x[y_i(k)] - T::cst(y_ref(k));
            acc += T::cst(rho_y * DT) * dy * dy;
            let v = x[v_i(k)];
            acc += T::cst(rho_v * DT) * v * v;
        }
        acc
    };
    let gradient = move |x: &[T], g: &mut [T]| {
        g.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..NODES {
            g[a_i(k)] = T::cst(2.0 * DT * weight(k)) * x[a_i(k)];
            g[y_i(k)] = T::cst(2.0 * rho_y * DT) * (x[y_i(k)] - T::cst(y_ref(k)));
            g[v_i(k)] = T::cst(2.0 * rho_v * DT) * x[v_i(k)];
        }
    };

    // Rows 0..6: position dynamics; 6..12: velocity dynamics;
    // 12..16: boundary conditions y0, v0, yN - 1, vN.
    let m_e = 2 * (NODES - 1) + 4;
    let eq = move |x: &[T], out: &mut [T]| {
        let half_dt = T::cst(DT / 2.0);
        for k in 0..NODES - 1 {
            out[k] = x[y_i(k + 1)] - x[y_i(k)] - half_dt * (x[v_i(k)] + x[v_i(k + 1)]);
            out[NODES - 1 + k] = x[v_i(k + 1)] - x[v_i(k)] - half_dt * (x[a_i(k)] + x[a_i(k + 1)]);
        }
        let b = 2 * (NODES - 1);
        out[b] = x[y_i(0)];
        out[b + 1] = x[v_i(0)];
        out[b + 2] = x[y_i(NODES - 1)] - T::one();
        out[b + 3] = x[v_i(NODES - 1)];
    };
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut consts = Vec::new();
    for k in 0..NODES - 1 {
        for (c, v) in [
            (y_i(k + 1), 1.0),
            (y_i(k), -1.0),
            (v_i(k), -DT / 2.0),
            (v_i(k + 1), -DT / 2.0),
        ] {
            rows.push(k);
            cols.push(c);
            consts.push(v);
        }
        for (c, v) in [
            (v_i(k + 1), 1.0),
            (v_i(k), -1.0),
            (a_i(k), -DT / 2.0),
            (a_i(k + 1), -DT / 2.0),
        ] {
            rows.push(NODES - 1 + k);
            cols.push(c);
            consts.push(v);
        }
    }
    let b = 2 * (NODES - 1);
    for (r, c) in [
        (b, y_i(0)),
        (b + 1, v_i(0)),
        (b + 2, y_i(NODES - 1)),
        (b + 3, v_i(NODES - 1)),
    ] {
        rows.push(r);
        cols.push(c);
        consts.push(1.0);
    }
    let eq_pattern = CooPattern::new(rows, cols);
    let eq_jac = move |_x: &[T], vals: &mut [T]| {
        for (slot, v) in vals.iter_mut().zip(&consts) {
            *slot = T::cst(*v);
        }
    };

    // |a_k| <= 1 as two one-sided rows each.
    let m_i = 2 * NODES;
    let ineq = move |x: &[T], out: &mut [T]| {
        for k in 0..NODES {
            out[k] = x[a_i(k)] - T::one();
            out[NODES + k] = -x[a_i(k)] - T::one();
        }
    };
    let mut irows = Vec::new();
    let mut icols = Vec::new();
    let mut ivals = Vec::new();
    for k in 0..NODES {
        irows.push(k);
        icols.push(a_i(k));
        ivals.push(1.0);
        irows.push(NODES + k);
        icols.push(a_i(k));
        ivals.push(-1.0);
    }
    let in_pattern = CooPattern::new(irows, icols);
    let in_jac = move |_x: &[T], vals: &mut [T]| {
        for (slot, v) in vals.iter_mut().zip(&ivals) {
            *slot = T::cst(*v);
        }
    };

    let hess_pattern = CooPattern::new((0..n).collect(), (0..n).collect());
    let hess = move |_x: &[T], _y: &[T], _z: &[T], vals: &mut [T]| {
        for k in 0..NODES {
            vals[y_i(k)] = T::cst(2.0 * rho_y * DT);
            vals[v_i(k)] = T::cst(2.0 * rho_v * DT);
            vals[a_i(k)] = T::cst(2.0 * DT * weight(k));
        }
    };

    NlpProblem::builder("steering", n)
        .start(vec![T::cst(0.1); n])
        .objective(objective, gradient)
        .equalities(m_e, eq, eq_pattern, eq_jac)
        .inequalities(m_i, ineq, in_pattern, in_jac)
        .hessian(hess_pattern, hess)
        .build()
}

fn infeasible_lp<T: Scalar>() -> NlpProblem<T> {
    // x >= 0 against x = -1: no feasible point.
    quadratic(QuadSpec {
        name: "infeasible_lp",
        n: 1,
        w: vec![],
        c: vec![1.0],
        a_eq: vec![(0, 0, 1.0)],
        b_eq: vec![1.0],
        a_in: vec![],
        b_in: vec![],
        bounded: vec![0],
        x0: vec![1.0],
    })
}

/// Reference objectives for the entries without a hand solution, produced
/// by the dense reference strategy at tolerance 1e-10.
const REF_CHAIN_QP: f64 = 0.22906062008329;
const REF_SCURVE: f64 = 0.2;
const REF_STEERING: f64 = 1.56719737222649;
const REF_OPF9: f64 = 4.02418507712992;

/// The built-in problem set: equality-only, inequality-only, bound-only,
/// mixed, degenerate, nonconvex, an OPF-style network and a discretized
/// control problem, plus one infeasible entry.
pub fn builtin_suite<T: Scalar>() -> Vec<SuiteEntry<T>> {
    vec![
        SuiteEntry::new(qp_eq(), true, true, Some(0.25)),
        SuiteEntry::new(quad_free(), true, true, Some(-2.5)),
        SuiteEntry::new(lp_simple(), true, true, Some(1.0)),
        SuiteEntry::new(qp_ineq(), true, true, Some(-0.75)),
        SuiteEntry::new(qp_bound(), true, true, Some(-0.625)),
        SuiteEntry::new(qp_mixed(), true, true, Some(1.546875)),
        SuiteEntry::new(qp_degen(), true, true, Some(-3.0)),
        SuiteEntry::new(chain_qp(), true, true, Some(REF_CHAIN_QP)),
        SuiteEntry::new(steering(), true, true, Some(REF_STEERING)),
        SuiteEntry::new(qp_indef(), false, true, Some(-1.0)),
        SuiteEntry::new(scurve(), false, true, Some(REF_SCURVE)),
        SuiteEntry::new(opf9(), false, true, Some(REF_OPF9)),
        SuiteEntry::new(infeasible_lp(), true, false, None),
    ]
}

/// Looks up a suite entry by problem name.
pub fn find<T: Scalar>(name: &str) -> Option<SuiteEntry<T>> {
    builtin_suite()
        .into_iter()
        .find(|e| e.problem.name() == name)
}

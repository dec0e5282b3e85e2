//! Equality relaxation: replace each equality by a pair of slackened
//! inequalities so the whole KKT system condenses to one definite solve.

use std::sync::Arc;

use crate::nlp::{CooPattern, NlpProblem};
use crate::scalar::Scalar;

/// Relaxes every equality `g_i(x) = 0` of `problem` into the pair
/// `g_i(x) - tau <= 0` and `-g_i(x) - tau <= 0`, returning a problem with
/// no equalities and `2 m_e + m_i` inequalities ordered as
/// `[g - tau, -g - tau, h]`. Done once before a solver run.
pub fn lift_equalities<T: Scalar>(problem: &Arc<NlpProblem<T>>, tau: T) -> NlpProblem<T> {
    let n = problem.n();
    let m_e = problem.m_e();
    let m_i = problem.m_i();
    let lifted_m_i = 2 * m_e + m_i;

    let p_ineq = Arc::clone(problem);
    let ineq = move |x: &[T], out: &mut [T]| {
        let (head, tail) = out.split_at_mut(2 * m_e);
        let (plus, minus) = head.split_at_mut(m_e);
        p_ineq.eval_eq(x, plus);
        for i in 0..m_e {
            minus[i] = -plus[i] - tau;
            plus[i] -= tau;
        }
        p_ineq.eval_ineq(x, tail);
    };

    // Jacobian pattern: G rows, then -G rows, then H rows.
    let ge = problem.jac_eq_pattern();
    let gi = problem.jac_ineq_pattern();
    let mut rows = Vec::with_capacity(2 * ge.len() + gi.len());
    let mut cols = Vec::with_capacity(rows.capacity());
    for (r, c) in ge.iter() {
        rows.push(r);
        cols.push(c);
    }
    for (r, c) in ge.iter() {
        rows.push(m_e + r);
        cols.push(c);
    }
    for (r, c) in gi.iter() {
        rows.push(2 * m_e + r);
        cols.push(c);
    }
    let pattern = CooPattern::new(rows, cols);

    let ge_len = ge.len();
    let gi_len = gi.len();
    let p_jac = Arc::clone(problem);
    let jac = move |x: &[T], vals: &mut [T]| {
        let (head, tail) = vals.split_at_mut(2 * ge_len);
        let (plus, minus) = head.split_at_mut(ge_len);
        p_jac.eval_jac_eq(x, plus);
        for i in 0..ge_len {
            minus[i] = -plus[i];
        }
        p_jac.eval_jac_ineq(x, &mut tail[..gi_len]);
    };

    // The lifted Lagrangian Hessian reuses the original one with
    // y := z_plus - z_minus and z := z_h.
    let p_hess = Arc::clone(problem);
    let hess = move |x: &[T], _y: &[T], z: &[T], vals: &mut [T]| {
        let y_equiv: Vec<T> = (0..m_e).map(|i| z[i] - z[m_e + i]).collect();
        p_hess.eval_hess(x, &y_equiv, &z[2 * m_e..], vals);
    };

    let p_f = Arc::clone(problem);
    let p_g = Arc::clone(problem);
    NlpProblem::builder(format!("{}_lifted", problem.name()), n)
        .bounded(problem.bounded().to_vec())
        .start(problem.x0().to_vec())
        .objective(
            move |x: &[T]| p_f.eval_objective(x),
            move |x: &[T], g: &mut [T]| p_g.eval_gradient(x, g),
        )
        .inequalities(lifted_m_i, ineq, pattern, jac)
        .hessian(problem.hess_pattern().clone(), hess)
        .build()
}

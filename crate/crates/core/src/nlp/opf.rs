//! Nine-bus optimal power flow in polar form.
//!
//! Three generators, three loads, quadratic generation cost, power-balance
//! equalities at every bus and voltage/generation limits as inequalities.
//! The reference bus angle is eliminated rather than constrained.
//!
//! Variable layout: `theta` for buses 1..=8 (indices 0..8), `V` for buses
//! 0..=8 (indices 8..17), `Pg` (17..20, bounded at zero), `Qg` (20..23).

use std::collections::BTreeMap;

use crate::nlp::{CooPattern, NlpProblem};
use crate::scalar::Scalar;

const NBUS: usize = 9;
const NGEN: usize = 3;
pub const N_VARS: usize = 8 + 9 + 3 + 3;

const GEN_BUS: [usize; NGEN] = [0, 1, 2];
const PMAX: [f64; NGEN] = [2.5, 3.0, 2.7];
const QMAX: [f64; NGEN] = [1.5, 1.5, 1.5];
const COST2: [f64; NGEN] = [0.11, 0.085, 0.1225];
const COST1: [f64; NGEN] = [5.0, 1.2, 1.0];

/// (from, to, r, x) per branch.
const BRANCHES: [(usize, usize, f64, f64); 9] = [
    (0, 3, 0.0, 0.0576),
    (3, 4, 0.017, 0.092),
    (3, 5, 0.010, 0.085),
    (4, 6, 0.032, 0.161),
    (5, 8, 0.039, 0.170),
    (6, 7, 0.0085, 0.072),
    (7, 8, 0.0119, 0.1008),
    (1, 6, 0.0, 0.0625),
    (2, 8, 0.0, 0.0586),
];

/// (Pd, Qd) per bus.
const LOADS: [(f64, f64); NBUS] = [
    (0.0, 0.0),
    (0.0, 0.0),
    (0.0, 0.0),
    (0.0, 0.0),
    (1.25, 0.5),
    (0.0, 0.0),
    (0.90, 0.30),
    (0.0, 0.0),
    (1.00, 0.35),
];

const V_MIN: f64 = 0.9;
const V_MAX: f64 = 1.1;

#[derive(Clone)]
struct Grid {
    /// (i, j, g, b) series admittance per branch.
    branches: Vec<(usize, usize, f64, f64)>,
    g_diag: [f64; NBUS],
    b_diag: [f64; NBUS],
}

fn grid() -> Grid {
    let mut branches = Vec::with_capacity(BRANCHES.len());
    let mut g_diag = [0.0; NBUS];
    let mut b_diag = [0.0; NBUS];
    for &(i, j, r, x) in &BRANCHES {
        let d = r * r + x * x;
        let g = r / d;
        let b = -x / d;
        branches.push((i, j, g, b));
        g_diag[i] += g;
        g_diag[j] += g;
        b_diag[i] += b;
        b_diag[j] += b;
    }
    Grid {
        branches,
        g_diag,
        b_diag,
    }
}

fn theta_idx(bus: usize) -> Option<usize> {
    if bus == 0 {
        None
    } else {
        Some(bus - 1)
    }
}

fn v_idx(bus: usize) -> usize {
    8 + bus
}

fn pg_idx(k: usize) -> usize {
    17 + k
}

fn qg_idx(k: usize) -> usize {
    20 + k
}

fn theta<T: Scalar>(x: &[T], bus: usize) -> T {
    match theta_idx(bus) {
        Some(i) => x[i],
        None => T::zero(),
    }
}

/// Branch flow terms entering bus i's balance from branch (i, j):
/// `p = Vi Vj (g cos + b sin)`, `q = Vi Vj (g sin - b cos)` with the
/// off-diagonal admittance `(-g, -b)`.
struct Term<T> {
    p: T,
    q: T,
    // First trig combinations reused by the derivatives.
    a: T,     // G c + B s
    a_bar: T, // G s - B c
    a_dot: T, // -G s + B c  (d a / d theta_i)
    vi: T,
    vj: T,
}

fn branch_term<T: Scalar>(x: &[T], i: usize, j: usize, g: f64, b: f64) -> Term<T> {
    // Off-diagonal Y entry for the pair (i, j).
    let gij = T::cst(-g);
    let bij = T::cst(-b);
    let dt = theta(x, i) - theta(x, j);
    let (s, c) = (dt.sin(), dt.cos());
    let vi = x[v_idx(i)];
    let vj = x[v_idx(j)];
    let a = gij * c + bij * s;
    let a_bar = gij * s - bij * c;
    let a_dot = bij * c - gij * s;
    Term {
        p: vi * vj * a,
        q: vi * vj * a_bar,
        a,
        a_bar,
        a_dot,
        vi,
        vj,
    }
}

/// Net active/reactive injections leaving each bus into the network.
fn injections<T: Scalar>(grid: &Grid, x: &[T]) -> (Vec<T>, Vec<T>) {
    let mut p = vec![T::zero(); NBUS];
    let mut q = vec![T::zero(); NBUS];
    for bus in 0..NBUS {
        let v = x[v_idx(bus)];
        p[bus] += v * v * T::cst(grid.g_diag[bus]);
        q[bus] -= v * v * T::cst(grid.b_diag[bus]);
    }
    for &(i, j, g, b) in &grid.branches {
        let tij = branch_term(x, i, j, g, b);
        p[i] += tij.p;
        q[i] += tij.q;
        let tji = branch_term(x, j, i, g, b);
        p[j] += tji.p;
        q[j] += tji.q;
    }
    (p, q)
}

/// Emits every equality-Jacobian contribution as (row, col, value).
/// Row `i` is the P balance at bus i, row `9 + i` the Q balance.
fn emit_eq_jacobian<T: Scalar, F: FnMut(usize, usize, T)>(grid: &Grid, x: &[T], mut emit: F) {
    // Diagonal V terms.
    for bus in 0..NBUS {
        let v = x[v_idx(bus)];
        let two = T::cst(2.0);
        emit(bus, v_idx(bus), two * v * T::cst(grid.g_diag[bus]));
        emit(
            NBUS + bus,
            v_idx(bus),
            -(two * v * T::cst(grid.b_diag[bus])),
        );
    }
    // Branch terms, both orientations.
    for &(bi, bj, g, b) in &grid.branches {
        for (i, j) in [(bi, bj), (bj, bi)] {
            let t = branch_term(x, i, j, g, b);
            let prow = i;
            let qrow = NBUS + i;
            if let Some(ti) = theta_idx(i) {
                emit(prow, ti, t.vi * t.vj * t.a_dot);
                emit(qrow, ti, t.vi * t.vj * t.a);
            }
            if let Some(tj) = theta_idx(j) {
                emit(prow, tj, -(t.vi * t.vj * t.a_dot));
                emit(qrow, tj, -(t.vi * t.vj * t.a));
            }
            emit(prow, v_idx(i), t.vj * t.a);
            emit(prow, v_idx(j), t.vi * t.a);
            emit(qrow, v_idx(i), t.vj * t.a_bar);
            emit(qrow, v_idx(j), t.vi * t.a_bar);
        }
    }
    // Generator injections.
    for k in 0..NGEN {
        emit(GEN_BUS[k], pg_idx(k), -T::one());
        emit(NBUS + GEN_BUS[k], qg_idx(k), -T::one());
    }
}

/// Emits the Lagrangian-Hessian contributions of the power-balance rows,
/// weighted by the equality multipliers, as lower-triangle (row, col, value).
fn emit_balance_hessian<T: Scalar, F: FnMut(usize, usize, T)>(
    grid: &Grid,
    x: &[T],
    y: &[T],
    mut emit: F,
) {
    let mut lower = |a: usize, b: usize, v: T| {
        if a >= b {
            emit(a, b, v)
        } else {
            emit(b, a, v)
        }
    };
    let two = T::cst(2.0);
    for bus in 0..NBUS {
        let wp = y[bus];
        let wq = y[NBUS + bus];
        let gd = T::cst(grid.g_diag[bus]);
        let bd = T::cst(grid.b_diag[bus]);
        lower(v_idx(bus), v_idx(bus), two * (wp * gd - wq * bd));
    }
    for &(bi, bj, g, b) in &grid.branches {
        for (i, j) in [(bi, bj), (bj, bi)] {
            let t = branch_term(x, i, j, g, b);
            let wp = y[i];
            let wq = y[NBUS + i];
            let vv = t.vi * t.vj;
            // d2 p / d(theta, theta), d2 q / d(theta, theta)
            let ptt = -(vv * t.a);
            let qtt = vv * t.a_dot;
            // d2 / d(theta, v)
            let ptv_i = t.vj * t.a_dot; // theta_i, V_i
            let ptv_j = t.vi * t.a_dot; // theta_i, V_j
            let qtv_i = t.vj * t.a;
            let qtv_j = t.vi * t.a;
            let w_tt = wp * ptt + wq * qtt;
            if let Some(ti) = theta_idx(i) {
                lower(ti, ti, w_tt);
                lower(v_idx(i), ti, wp * ptv_i + wq * qtv_i);
                lower(v_idx(j), ti, wp * ptv_j + wq * qtv_j);
            }
            if let Some(tj) = theta_idx(j) {
                lower(tj, tj, w_tt);
                lower(v_idx(i), tj, -(wp * ptv_i + wq * qtv_i));
                lower(v_idx(j), tj, -(wp * ptv_j + wq * qtv_j));
            }
            if let (Some(ti), Some(tj)) = (theta_idx(i), theta_idx(j)) {
                lower(ti, tj, -w_tt);
            }
            // d2 / d(Vi, Vj)
            lower(v_idx(i), v_idx(j), wp * t.a + wq * t.a_bar);
        }
    }
}

fn collect_pattern(
    keys: impl IntoIterator<Item = (usize, usize)>,
) -> (CooPattern, BTreeMap<(usize, usize), usize>) {
    let set: std::collections::BTreeSet<(usize, usize)> = keys.into_iter().collect();
    let mut rows = Vec::with_capacity(set.len());
    let mut cols = Vec::with_capacity(set.len());
    let mut slots = BTreeMap::new();
    for (slot, &(r, c)) in set.iter().enumerate() {
        rows.push(r);
        cols.push(c);
        slots.insert((r, c), slot);
    }
    (CooPattern::new(rows, cols), slots)
}

pub fn opf9<T: Scalar>() -> NlpProblem<T> {
    let grid = grid();
    let m_e = 2 * NBUS;
    let m_i = 2 * NBUS + NGEN + 2 * NGEN;

    let mut x0 = vec![T::zero(); N_VARS];
    for bus in 0..NBUS {
        x0[v_idx(bus)] = T::one();
    }
    let pg0 = [0.8, 1.3, 1.0];
    for k in 0..NGEN {
        x0[pg_idx(k)] = T::cst(pg0[k]);
        x0[qg_idx(k)] = T::cst(0.2);
    }

    let mut bounded = vec![false; N_VARS];
    for k in 0..NGEN {
        bounded[pg_idx(k)] = true;
    }

    // Objective: quadratic generation cost.
    let objective = move |x: &[T]| {
        let mut acc = T::zero();
        for k in 0..NGEN {
            let pg = x[pg_idx(k)];
            acc += T::cst(COST2[k]) * pg * pg + T::cst(COST1[k]) * pg;
        }
        acc
    };
    let gradient = move |x: &[T], out: &mut [T]| {
        out.iter_mut().for_each(|v| *v = T::zero());
        for k in 0..NGEN {
            out[pg_idx(k)] = T::cst(2.0 * COST2[k]) * x[pg_idx(k)] + T::cst(COST1[k]);
        }
    };

    // Equalities: power balance with loads and generator injections.
    let eq_grid = grid.clone();
    let eq = move |x: &[T], out: &mut [T]| {
        let (p, q) = injections(&eq_grid, x);
        for bus in 0..NBUS {
            out[bus] = p[bus] + T::cst(LOADS[bus].0);
            out[NBUS + bus] = q[bus] + T::cst(LOADS[bus].1);
        }
        for k in 0..NGEN {
            out[GEN_BUS[k]] -= x[pg_idx(k)];
            out[NBUS + GEN_BUS[k]] -= x[qg_idx(k)];
        }
    };

    let probe = x0.clone();
    let mut jac_keys = Vec::new();
    emit_eq_jacobian::<T, _>(&grid, &probe, |r, c, _| jac_keys.push((r, c)));
    let (jac_pattern, jac_slots) = collect_pattern(jac_keys);
    let jac_grid = grid.clone();
    let jac_slots_eval = jac_slots;
    let jac = move |x: &[T], vals: &mut [T]| {
        vals.iter_mut().for_each(|v| *v = T::zero());
        emit_eq_jacobian(&jac_grid, x, |r, c, v| {
            vals[jac_slots_eval[&(r, c)]] += v;
        });
    };

    // Inequalities: voltage band, generation ceilings, reactive band.
    let ineq = move |x: &[T], out: &mut [T]| {
        for bus in 0..NBUS {
            out[bus] = x[v_idx(bus)] - T::cst(V_MAX);
            out[NBUS + bus] = T::cst(V_MIN) - x[v_idx(bus)];
        }
        let base = 2 * NBUS;
        for k in 0..NGEN {
            out[base + k] = x[pg_idx(k)] - T::cst(PMAX[k]);
            out[base + NGEN + k] = x[qg_idx(k)] - T::cst(QMAX[k]);
            out[base + 2 * NGEN + k] = -x[qg_idx(k)] - T::cst(QMAX[k]);
        }
    };
    let mut in_rows = Vec::new();
    let mut in_cols = Vec::new();
    let mut in_vals = Vec::new();
    for bus in 0..NBUS {
        in_rows.push(bus);
        in_cols.push(v_idx(bus));
        in_vals.push(1.0);
        in_rows.push(NBUS + bus);
        in_cols.push(v_idx(bus));
        in_vals.push(-1.0);
    }
    let base = 2 * NBUS;
    for k in 0..NGEN {
        in_rows.push(base + k);
        in_cols.push(pg_idx(k));
        in_vals.push(1.0);
        in_rows.push(base + NGEN + k);
        in_cols.push(qg_idx(k));
        in_vals.push(1.0);
        in_rows.push(base + 2 * NGEN + k);
        in_cols.push(qg_idx(k));
        in_vals.push(-1.0);
    }
    let in_pattern = CooPattern::new(in_rows, in_cols);
    let in_jac = move |_x: &[T], vals: &mut [T]| {
        for (slot, v) in vals.iter_mut().zip(&in_vals) {
            *slot = T::cst(*v);
        }
    };

    // Lagrangian Hessian: balance curvature plus the cost diagonal.
    let mut hess_keys = Vec::new();
    let probe_y = vec![T::one(); m_e];
    emit_balance_hessian::<T, _>(&grid, &probe, &probe_y, |r, c, _| hess_keys.push((r, c)));
    for k in 0..NGEN {
        hess_keys.push((pg_idx(k), pg_idx(k)));
    }
    let (hess_pattern, hess_slots) = collect_pattern(hess_keys);
    let hess_grid = grid;
    let hess = move |x: &[T], y: &[T], _z: &[T], vals: &mut [T]| {
        vals.iter_mut().for_each(|v| *v = T::zero());
        emit_balance_hessian(&hess_grid, x, y, |r, c, v| {
            vals[hess_slots[&(r, c)]] += v;
        });
        for k in 0..NGEN {
            vals[hess_slots[&(pg_idx(k), pg_idx(k))]] += T::cst(2.0 * COST2[k]);
        }
    };

    NlpProblem::builder("opf9", N_VARS)
        .bounded(bounded)
        .start(x0)
        .objective(objective, gradient)
        .equalities(m_e, eq, jac_pattern, jac)
        .inequalities(m_i, ineq, in_pattern, in_jac)
        .hessian(hess_pattern, hess)
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::check_derivatives;

    #[test]
    fn dimensions() {
        let p = opf9::<f64>();
        assert_eq!(p.n(), 23);
        assert_eq!(p.m_e(), 18);
        assert_eq!(p.m_i(), 27);
        assert_eq!(p.num_bounded(), 3);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = opf9::<f64>();
        // Slightly off-nominal point so the trig terms are exercised.
        let mut x = p.x0().to_vec();
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += 0.01 * ((i % 7) as f64 - 3.0) / 7.0;
        }
        let report = check_derivatives(&p, &x, 1e-5);
        assert!(report.max() <= 1e-5, "{report:?}");
    }
}

//! Dense reference assemblies of the augmented and unreduced systems.
//!
//! Desk-scale cross-checks only: the sparse strategies are validated against
//! solutions computed here with a partial-pivot LU, entirely independent of
//! the sparse factorization path.

use crate::dense::{DenseLu, DenseSingular};
use crate::kkt::{recover_bound_steps, Direction, Iterate, KktEval, KktRhs, UnreducedSystem};
use crate::nlp::NlpProblem;
use crate::scalar::Scalar;

/// Hard cap on oracle dimensions; larger systems are a usage error.
pub const ORACLE_DIM_CAP: usize = 400;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("oracle too large: dimension {dim} exceeds cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error(transparent)]
    Singular(#[from] DenseSingular),
}

/// Dense symmetric augmented matrix over (dx, ds, dy, dz):
///
/// ```text
/// [ W + D_x + dw I   0              G^T    H^T  ]
/// [ 0                D_s + dw I     0      I    ]
/// [ G                0             -dc I   0    ]
/// [ H                I              0     -dc I ]
/// ```
pub fn assemble_augmented<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
) -> Result<(Vec<T>, usize), OracleError> {
    let n = problem.n();
    let m_e = problem.m_e();
    let m_i = problem.m_i();
    let dim = n + m_i + m_e + m_i;
    if dim > ORACLE_DIM_CAP {
        return Err(OracleError::TooLarge {
            dim,
            cap: ORACLE_DIM_CAP,
        });
    }
    let eval = KktEval::new(problem, it);
    let mut a = vec![T::zero(); dim * dim];
    let mut add = |r: usize, c: usize, v: T| {
        a[r * dim + c] += v;
        if r != c {
            a[c * dim + r] += v;
        }
    };

    for (k, (r, c)) in problem.hess_pattern().iter().enumerate() {
        add(r, c, eval.hess[k]);
    }
    let d_x = it.d_x(problem.bounded());
    for i in 0..n {
        add(i, i, d_x[i] + it.delta_w);
    }
    let d_s = it.d_s();
    let s_base = n;
    for j in 0..m_i {
        add(s_base + j, s_base + j, d_s[j] + it.delta_w);
    }
    let y_base = n + m_i;
    for (k, (r, c)) in problem.jac_eq_pattern().iter().enumerate() {
        add(y_base + r, c, eval.jac_eq[k]);
    }
    for r in 0..m_e {
        add(y_base + r, y_base + r, -it.delta_c);
    }
    let z_base = y_base + m_e;
    for (k, (r, c)) in problem.jac_ineq_pattern().iter().enumerate() {
        add(z_base + r, c, eval.jac_ineq[k]);
    }
    for j in 0..m_i {
        add(z_base + j, s_base + j, T::one());
        add(z_base + j, z_base + j, -it.delta_c);
    }
    Ok((a, dim))
}

/// Dense unsymmetric unreduced Newton matrix over
/// (dx, ds, dy, dz, du, dv). Complementarity rows for unbounded
/// coordinates degenerate to `du_i = 0`.
pub fn assemble_unreduced_dense<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
) -> Result<(Vec<T>, usize), OracleError> {
    let n = problem.n();
    let m_e = problem.m_e();
    let m_i = problem.m_i();
    let dim = 2 * n + 3 * m_i + m_e;
    if dim > ORACLE_DIM_CAP {
        return Err(OracleError::TooLarge {
            dim,
            cap: ORACLE_DIM_CAP,
        });
    }
    let sys = UnreducedSystem::new(problem, it);
    // Column-by-column probe of the sparse operator; the oracle only needs
    // the matrix, not speed.
    let mut a = vec![T::zero(); dim * dim];
    let mut e = vec![T::zero(); dim];
    let mut col = vec![T::zero(); dim];
    for j in 0..dim {
        e[j] = T::one();
        sys.apply(&e, &mut col);
        for i in 0..dim {
            a[i * dim + j] = col[i];
        }
        e[j] = T::zero();
    }
    Ok((a, dim))
}

/// Solves the unreduced Newton system densely: `J d = -F_mu`.
pub fn solve_unreduced_dense<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
) -> Result<Direction<T>, OracleError> {
    let (a, dim) = assemble_unreduced_dense(problem, it)?;
    let sys = UnreducedSystem::new(problem, it);
    let f = sys.residual_f();
    let rhs: Vec<T> = f.iter().map(|&v| -v).collect();
    let lu = DenseLu::factor(&a, dim)?;
    let d = lu.solve(&rhs);
    Ok(Direction::from_stacked(
        &d,
        problem.n(),
        problem.m_e(),
        problem.m_i(),
    ))
}

/// Solves the augmented system densely with the stored negated residuals,
/// then recovers the bound multiplier steps.
pub fn solve_augmented_dense<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    rhs: &KktRhs<T>,
) -> Result<Direction<T>, OracleError> {
    let (a, dim) = assemble_augmented(problem, it)?;
    let n = problem.n();
    let m_e = problem.m_e();
    let m_i = problem.m_i();
    let mut b = Vec::with_capacity(dim);
    b.extend(rhs.r1.iter().map(|&v| -v));
    b.extend(rhs.r2.iter().map(|&v| -v));
    b.extend(rhs.r3.iter().map(|&v| -v));
    b.extend(rhs.r4.iter().map(|&v| -v));
    let lu = DenseLu::factor(&a, dim)?;
    let sol = lu.solve(&b);
    let dx = sol[..n].to_vec();
    let ds = sol[n..n + m_i].to_vec();
    let dy = sol[n + m_i..n + m_i + m_e].to_vec();
    let dz = sol[n + m_i + m_e..].to_vec();
    let (du, dv) = recover_bound_steps(problem.bounded(), it, &dx, &ds);
    Ok(Direction {
        dx,
        ds,
        dy,
        dz,
        du,
        dv,
    })
}

//! Central finite-difference verification of problem callbacks.

use crate::nlp::NlpProblem;
use crate::scalar::Scalar;

/// Maximum relative errors per derivative, callbacks vs central differences.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeReport<T> {
    pub gradient: T,
    pub jac_eq: T,
    pub jac_ineq: T,
    pub hessian: T,
}

impl<T: Scalar> DerivativeReport<T> {
    pub fn max(&self) -> T {
        self.gradient
            .max(self.jac_eq)
            .max(self.jac_ineq)
            .max(self.hessian)
    }
}

fn rel_err<T: Scalar>(fd: T, exact: T) -> T {
    (fd - exact).abs() / T::one().max(exact.abs()).max(fd.abs())
}

/// Compares callback derivatives against central differences of step `step`
/// around `x0`. The Hessian is checked through the Lagrangian gradient at
/// deterministic nonzero multipliers, so constraint curvature is exercised.
///
/// `x0` must keep `x0_i - step > 0` on bounded coordinates if the callbacks
/// are only defined on the positive orthant.
pub fn check_derivatives<T: Scalar>(
    problem: &NlpProblem<T>,
    x0: &[T],
    step: T,
) -> DerivativeReport<T> {
    let n = problem.n();
    let m_e = problem.m_e();
    let m_i = problem.m_i();
    assert_eq!(x0.len(), n);

    let point = crate::nlp::EvalPoint {
        x: x0.to_vec(),
        y: (0..m_e)
            .map(|i| {
                T::cst(0.4) + T::cst(0.2) * T::cst((i % 3) as f64) * T::cst(-1.0).powi(i as i32)
            })
            .collect(),
        z: (0..m_i)
            .map(|i| {
                T::cst(0.3) + T::cst(0.15) * T::cst((i % 4) as f64) * T::cst(-1.0).powi(i as i32)
            })
            .collect(),
    };
    assert!(point.is_finite(), "non-finite check point");
    let (y, z) = (point.y.clone(), point.z.clone());

    let mut xp = x0.to_vec();
    let mut xm = x0.to_vec();
    let two_step = T::cst(2.0) * step;

    // Gradient vs objective differences.
    let mut grad = vec![T::zero(); n];
    problem.eval_gradient(x0, &mut grad);
    let mut grad_err = T::zero();
    for i in 0..n {
        xp[i] = x0[i] + step;
        xm[i] = x0[i] - step;
        let fd = (problem.eval_objective(&xp) - problem.eval_objective(&xm)) / two_step;
        grad_err = grad_err.max(rel_err(fd, grad[i]));
        xp[i] = x0[i];
        xm[i] = x0[i];
    }

    // Jacobians vs constraint differences, densified so missing pattern
    // entries are caught too.
    let jac_err = |dense: &[T], m: usize, eval: &dyn Fn(&[T], &mut [T])| -> T {
        if m == 0 {
            return T::zero();
        }
        let mut worst = T::zero();
        let mut cp = vec![T::zero(); m];
        let mut cm = vec![T::zero(); m];
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        for c in 0..n {
            xp[c] = x0[c] + step;
            xm[c] = x0[c] - step;
            eval(&xp, &mut cp);
            eval(&xm, &mut cm);
            for r in 0..m {
                let fd = (cp[r] - cm[r]) / two_step;
                worst = worst.max(rel_err(fd, dense[r * n + c]));
            }
            xp[c] = x0[c];
            xm[c] = x0[c];
        }
        worst
    };
    let ge = problem.jac_eq_dense(x0);
    let gi = problem.jac_ineq_dense(x0);
    let jac_eq_err = jac_err(&ge, m_e, &|x, out| problem.eval_eq(x, out));
    let jac_ineq_err = jac_err(&gi, m_i, &|x, out| problem.eval_ineq(x, out));

    // Hessian vs differences of the Lagrangian gradient.
    let w = problem.hess_dense(x0, &y, &z);
    let mut hess_err = T::zero();
    for c in 0..n {
        xp[c] = x0[c] + step;
        xm[c] = x0[c] - step;
        let gp = problem.lagrangian_gradient(&xp, &y, &z);
        let gm = problem.lagrangian_gradient(&xm, &y, &z);
        for r in 0..n {
            let fd = (gp[r] - gm[r]) / two_step;
            hess_err = hess_err.max(rel_err(fd, w[r * n + c]));
        }
        xp[c] = x0[c];
        xm[c] = x0[c];
    }

    DerivativeReport {
        gradient: grad_err,
        jac_eq: jac_eq_err,
        jac_ineq: jac_ineq_err,
        hessian: hess_err,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nlp::CooPattern;

    #[test]
    fn quadratic_gradient_exact() {
        // f(x) = ||x||^2 / 2: quadratic, so central differences are exact
        // up to roundoff.
        let p = NlpProblem::<f64>::builder("halfnorm", 3)
            .objective(
                |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
                |x, g| g.copy_from_slice(x),
            )
            .hessian(
                CooPattern::new(vec![0, 1, 2], vec![0, 1, 2]),
                |_x, _y, _z, vals| vals.iter_mut().for_each(|v| *v = 1.0),
            )
            .build();
        let report = check_derivatives(&p, &[0.3, -1.2, 2.0], 1e-5);
        assert!(
            report.gradient <= 1e-7,
            "gradient err {:e}",
            report.gradient
        );
        assert!(report.max() <= 1e-7);
    }
}

//! Schur-complement hybrid strategy: factorize `K_gamma = K + gamma G'G`
//! (positive definite for large gamma), then recover the equality duals
//! with conjugate gradient on `G K_gamma^{-1} G'`.

use std::time::Instant;

use crate::kkt::{CondensedAssembler, Iterate, KktEval};
use crate::krylov::{cg_solve, FnOperator};
use crate::nlp::NlpProblem;
use crate::scalar::Scalar;
use crate::sparse::{amd_order, ldlt_factorize, symbolic_analyze, LdltFactor, SymbolicPlan};
use crate::strategy::{
    delta_w_base, eps_k, next_delta_w, SolveStats, StepTimings, StrategyError, DELTA_W_LIMIT,
};

pub struct HykktEngine<T> {
    gamma: T,
    assembler: CondensedAssembler<T>,
    plan: Option<SymbolicPlan>,
    factor: Option<LdltFactor<T>>,
    eps_k: T,
    n: usize,
    m_e: usize,
}

impl<T: Scalar> HykktEngine<T> {
    pub fn new(problem: &NlpProblem<T>, gamma: T) -> Self {
        Self {
            gamma,
            assembler: CondensedAssembler::new(problem, true),
            plan: None,
            factor: None,
            eps_k: T::cst(1e-8),
            n: problem.n(),
            m_e: problem.m_e(),
        }
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// Factorizes `K_gamma` positive definite, escalating `delta_w` as
    /// needed. Dual regularization stays zero: the reformulation is exact
    /// only without it.
    pub fn prepare(
        &mut self,
        eval: &KktEval<'_, T>,
        it: &mut Iterate<T>,
        timings: &mut StepTimings,
    ) -> Result<usize, StrategyError> {
        it.delta_c = T::zero();
        self.eps_k = eps_k(it.mu);
        let base = delta_w_base(eval);
        let mut delta_w = T::zero();
        let mut corrections = 0usize;
        loop {
            it.delta_w = delta_w;
            let t0 = Instant::now();
            let blocks = self.assembler.assemble(eval, it, self.gamma);
            timings.assembly += t0.elapsed();
            if self.plan.is_none() {
                let perm = amd_order(&blocks.k);
                self.plan = Some(symbolic_analyze(&blocks.k, &perm));
            }
            let t1 = Instant::now();
            let factor = ldlt_factorize(&blocks.k, self.plan.as_ref().unwrap(), T::zero());
            timings.factorize += t1.elapsed();

            let inertia = factor.inertia();
            if inertia.positive == self.n && factor.zero_pivots().is_empty() {
                self.factor = Some(factor);
                return Ok(corrections);
            }
            corrections += 1;
            delta_w = next_delta_w(delta_w, base);
            if delta_w.as_f64() > DELTA_W_LIMIT {
                return Err(StrategyError::RegularizationLimit {
                    issue: "not positive definite",
                    delta_w: delta_w.as_f64(),
                });
            }
        }
    }

    /// One order of magnitude up on CG failure, refactorizing in place.
    pub fn escalate_gamma(
        &mut self,
        eval: &KktEval<'_, T>,
        it: &Iterate<T>,
        timings: &mut StepTimings,
    ) -> Result<(), StrategyError> {
        self.gamma = self.gamma * T::cst(10.0);
        let t0 = Instant::now();
        let blocks = self.assembler.assemble(eval, it, self.gamma);
        timings.assembly += t0.elapsed();
        let t1 = Instant::now();
        let factor = ldlt_factorize(&blocks.k, self.plan.as_ref().expect("prepared"), T::zero());
        timings.factorize += t1.elapsed();
        if factor.inertia().positive != self.n || !factor.zero_pivots().is_empty() {
            return Err(StrategyError::RegularizationLimit {
                issue: "escalated gamma lost definiteness",
                delta_w: it.delta_w.as_f64(),
            });
        }
        self.factor = Some(factor);
        Ok(())
    }

    /// Solves the condensed system through the gamma-regularized split:
    /// `dy` from CG on the Schur complement, `dx` from one backsolve.
    pub fn solve_condensed(
        &self,
        eval: &KktEval<'_, T>,
        rbar1: &[T],
        rbar2: &[T],
        stats: &mut SolveStats,
    ) -> (Vec<T>, Vec<T>) {
        let factor = self.factor.as_ref().expect("prepare before solve");
        let n = self.n;
        let m_e = self.m_e;

        // s_gamma = rbar1 + gamma G' rbar2
        let mut s_gamma = rbar1.to_vec();
        if m_e > 0 {
            let mut gt = vec![T::zero(); n];
            eval.apply_jac_eq_t(rbar2, &mut gt);
            for i in 0..n {
                s_gamma[i] += self.gamma * gt[i];
            }
        }

        if m_e == 0 {
            let t0 = Instant::now();
            let dx = factor.solve(&s_gamma).expect("definite after correction");
            stats.backsolve += t0.elapsed();
            return (dx, Vec::new());
        }

        let t0 = Instant::now();
        let w0 = factor.solve(&s_gamma).expect("definite after correction");
        stats.backsolve += t0.elapsed();
        let mut schur_rhs = vec![T::zero(); m_e];
        eval.apply_jac_eq(&w0, &mut schur_rhs);
        for (r, b) in schur_rhs.iter_mut().zip(rbar2) {
            *r -= *b;
        }

        let op = FnOperator {
            dim: m_e,
            f: |dy: &[T], out: &mut [T]| {
                let mut gt = vec![T::zero(); n];
                eval.apply_jac_eq_t(dy, &mut gt);
                let w = factor.solve(&gt).expect("definite after correction");
                eval.apply_jac_eq(&w, out);
            },
        };
        // An absolute residual eps on the Schur system costs up to
        // gamma * eps in dy (the Schur eigenvalues sit near 1/gamma), so
        // the step tolerance is divided by gamma here.
        let tol_abs = self.eps_k / self.gamma.max(T::one());
        let t1 = Instant::now();
        let max_iters = 3 * m_e + 30;
        let cg_out = cg_solve(&op, &schur_rhs, tol_abs, T::cst(1e-12), max_iters);
        stats.cg += t1.elapsed();
        let dy = match cg_out {
            Ok((dy, report)) => {
                stats.cg_iterations += report.iterations;
                stats.cg_failed |= !report.converged;
                stats.cg_last_residual = report.final_residual_norm.as_f64();
                dy
            }
            Err(_) => {
                stats.cg_failed = true;
                stats.cg_last_residual = f64::NAN;
                vec![T::zero(); m_e]
            }
        };

        // dx from K_gamma dx = s_gamma - G' dy
        let mut rhs_x = s_gamma;
        let mut gt = vec![T::zero(); n];
        eval.apply_jac_eq_t(&dy, &mut gt);
        for i in 0..n {
            rhs_x[i] -= gt[i];
        }
        let t2 = Instant::now();
        let dx = factor.solve(&rhs_x).expect("definite after correction");
        stats.backsolve += t2.elapsed();
        (dx, dy)
    }

    pub fn factor(&self) -> Option<&LdltFactor<T>> {
        self.factor.as_ref()
    }
}

//! Direct condensed strategy: factorize `[K G'; G -dc I]` in place.

use std::time::Instant;

use crate::kkt::{CondensedAssembler, Iterate, KktEval};
use crate::nlp::NlpProblem;
use crate::scalar::Scalar;
use crate::sparse::{
    amd_order, csc_from_triplets, ldlt_factorize, symbolic_analyze, Inertia, LdltFactor,
    SparseSymCsc, SymbolicPlan,
};
use crate::strategy::{
    delta_w_base, next_delta_w, SolveStats, StepTimings, StrategyError, DELTA_C_BAR, DELTA_C_EXP,
    DELTA_W_LIMIT,
};

/// Saddle-system engine; also backs the lifted strategy, where the system
/// degenerates to `K` alone (no equalities) and must come out positive
/// definite.
pub struct DirectEngine<T> {
    assembler: CondensedAssembler<T>,
    saddle: SparseSymCsc<T>,
    k_to_saddle: Vec<usize>,
    g_to_saddle: Vec<usize>,
    eq_diag: Vec<usize>,
    plan: Option<SymbolicPlan>,
    factor: Option<LdltFactor<T>>,
    n: usize,
    m_e: usize,
}

impl<T: Scalar> DirectEngine<T> {
    pub fn new(problem: &NlpProblem<T>) -> Self {
        let n = problem.n();
        let m_e = problem.m_e();
        let assembler = CondensedAssembler::new(problem, false);

        let dim = n + m_e;
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        let kp = assembler.pattern();
        for c in 0..n {
            for p in kp.col_ptr()[c]..kp.col_ptr()[c + 1] {
                entries.push((kp.row_idx()[p], c, T::zero()));
            }
        }
        for (r, c) in problem.jac_eq_pattern().iter() {
            entries.push((n + r, c, T::zero()));
        }
        for r in 0..m_e {
            entries.push((n + r, n + r, T::zero()));
        }
        let saddle = csc_from_triplets(dim, &entries).expect("saddle pattern");

        let mut k_to_saddle = Vec::with_capacity(kp.nnz());
        for c in 0..n {
            for p in kp.col_ptr()[c]..kp.col_ptr()[c + 1] {
                k_to_saddle.push(saddle.position(kp.row_idx()[p], c).unwrap());
            }
        }
        let g_to_saddle = problem
            .jac_eq_pattern()
            .iter()
            .map(|(r, c)| saddle.position(n + r, c).unwrap())
            .collect();
        let eq_diag = (0..m_e)
            .map(|r| saddle.position(n + r, n + r).unwrap())
            .collect();

        Self {
            assembler,
            saddle,
            k_to_saddle,
            g_to_saddle,
            eq_diag,
            plan: None,
            factor: None,
            n,
            m_e,
        }
    }

    /// Assembles the saddle system at the iterate's current
    /// regularizations and factorizes it once, without inertia control.
    pub fn factorize_saddle(
        &mut self,
        eval: &KktEval<'_, T>,
        it: &Iterate<T>,
        timings: &mut StepTimings,
    ) -> LdltFactor<T> {
        let t0 = Instant::now();
        let blocks = self.assembler.assemble(eval, it, T::zero());
        let values = self.saddle.values_mut();
        values.iter_mut().for_each(|v| *v = T::zero());
        for (kpos, &spos) in self.k_to_saddle.iter().enumerate() {
            values[spos] += blocks.k.values()[kpos];
        }
        for (gidx, &spos) in self.g_to_saddle.iter().enumerate() {
            values[spos] += eval.jac_eq[gidx];
        }
        for &spos in &self.eq_diag {
            values[spos] = -it.delta_c;
        }
        timings.assembly += t0.elapsed();

        if self.plan.is_none() {
            let perm = amd_order(&self.saddle);
            self.plan = Some(symbolic_analyze(&self.saddle, &perm));
        }
        let t1 = Instant::now();
        let factor = ldlt_factorize(&self.saddle, self.plan.as_ref().unwrap(), T::zero());
        timings.factorize += t1.elapsed();
        factor
    }

    /// Assembles and factorizes with the inertia-controlled loop, writing
    /// the accepted regularizations into `it`. Returns the number of
    /// refactorizations beyond the first.
    pub fn prepare(
        &mut self,
        eval: &KktEval<'_, T>,
        it: &mut Iterate<T>,
        timings: &mut StepTimings,
    ) -> Result<usize, StrategyError> {
        let (n, m_e) = (self.n, self.m_e);
        let target = Inertia {
            positive: n,
            negative: m_e,
            zero: 0,
        };
        let base = delta_w_base(eval);
        let mut delta_w = T::zero();
        let mut delta_c = T::zero();
        let mut corrections = 0usize;
        loop {
            it.delta_w = delta_w;
            it.delta_c = delta_c;

            let factor = self.factorize_saddle(eval, it, timings);
            if factor.inertia() == target && factor.zero_pivots().is_empty() {
                self.factor = Some(factor);
                return Ok(corrections);
            }
            corrections += 1;

            let zero_in_eq =
                (0..n + m_e).any(|pj| factor.pivot_is_zero(pj) && factor.perm()[pj] >= n);
            if zero_in_eq && delta_c == T::zero() && m_e > 0 {
                delta_c = T::cst(DELTA_C_BAR) * it.mu.powf(T::cst(DELTA_C_EXP));
                continue;
            }
            delta_w = next_delta_w(delta_w, base);
            if delta_w.as_f64() > DELTA_W_LIMIT {
                return Err(StrategyError::RegularizationLimit {
                    issue: "wrong inertia",
                    delta_w: delta_w.as_f64(),
                });
            }
        }
    }

    /// Solves the saddle system for `(dx, dy)`.
    pub fn solve_condensed(
        &self,
        rbar1: &[T],
        rbar2: &[T],
        stats: &mut SolveStats,
    ) -> (Vec<T>, Vec<T>) {
        let factor = self.factor.as_ref().expect("prepare before solve");
        let mut b = Vec::with_capacity(self.n + self.m_e);
        b.extend_from_slice(rbar1);
        b.extend_from_slice(rbar2);
        let t0 = Instant::now();
        let sol = factor.solve(&b).expect("nonsingular after correction");
        stats.backsolve += t0.elapsed();
        (sol[..self.n].to_vec(), sol[self.n..].to_vec())
    }

    pub fn factor(&self) -> Option<&LdltFactor<T>> {
        self.factor.as_ref()
    }
}

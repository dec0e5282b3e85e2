//! Dense augmented-system reference strategy.
//!
//! Solves the 4x4 block system with partial-pivot LU and checks the inertia
//! with dense eigenvalue counts, fully independent of the sparse kernels.

use std::time::Instant;

use crate::dense::DenseLu;
use crate::diagnostics::{inertia_from_eigenvalues, jacobi_eigenvalues};
use crate::kkt::dense_oracle::assemble_augmented;
use crate::kkt::{CondensedRhs, Direction, Iterate, KktEval};
use crate::nlp::NlpProblem;
use crate::scalar::Scalar;
use crate::sparse::Inertia;
use crate::strategy::{
    delta_w_base, next_delta_w, SolveStats, StepTimings, StrategyError, DELTA_C_BAR, DELTA_C_EXP,
    DELTA_W_LIMIT,
};

pub struct OracleEngine<T> {
    lu: Option<DenseLu<T>>,
    n: usize,
    m_e: usize,
    m_i: usize,
}

impl<T: Scalar> OracleEngine<T> {
    pub fn new(problem: &NlpProblem<T>) -> Self {
        Self {
            lu: None,
            n: problem.n(),
            m_e: problem.m_e(),
            m_i: problem.m_i(),
        }
    }

    pub fn prepare(
        &mut self,
        eval: &KktEval<'_, T>,
        it: &mut Iterate<T>,
        timings: &mut StepTimings,
    ) -> Result<usize, StrategyError> {
        let target = Inertia {
            positive: self.n + self.m_i,
            negative: self.m_e + self.m_i,
            zero: 0,
        };
        let base = delta_w_base(eval);
        let mut delta_w = T::zero();
        let mut delta_c = T::zero();
        let mut corrections = 0usize;
        loop {
            it.delta_w = delta_w;
            it.delta_c = delta_c;
            let t0 = Instant::now();
            let (a, dim) = assemble_augmented(eval.problem, it)?;
            timings.assembly += t0.elapsed();

            // Inertia via eigenvalue counts of the diagonally scaled
            // congruence: scaling is a congruence transform, so the counts
            // carry over while the spectrum collapses to O(1) and the zero
            // classification stops depending on the raw diagonal spread.
            let t1 = Instant::now();
            let mut scale = vec![T::one(); dim];
            for (i, s) in scale.iter_mut().enumerate() {
                *s = a[i * dim + i].abs().max(T::cst(1e-8)).sqrt();
            }
            let mut scaled = a.clone();
            for r in 0..dim {
                for c in 0..dim {
                    scaled[r * dim + c] = scaled[r * dim + c] / (scale[r] * scale[c]);
                }
            }
            let evs = jacobi_eigenvalues(&scaled, dim, T::cst(1e-13))?;
            let floor = evs
                .iter()
                .fold(T::zero(), |m, &v| m.max(v.abs()))
                .max(T::one())
                * T::cst(1e-11);
            let inertia = inertia_from_eigenvalues(&evs, floor);
            let ok = inertia == target;
            if ok {
                self.lu = Some(
                    DenseLu::factor(&a, dim)
                        .map_err(crate::kkt::dense_oracle::OracleError::from)?,
                );
                timings.factorize += t1.elapsed();
                return Ok(corrections);
            }
            timings.factorize += t1.elapsed();
            corrections += 1;

            if inertia.zero > 0 && delta_c == T::zero() && self.m_e + self.m_i > 0 {
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

    /// Solves the dense augmented system for an arbitrary condensed-form
    /// right-hand side and recovers the bound multiplier steps.
    pub fn solve_full(
        &self,
        eval: &KktEval<'_, T>,
        it: &Iterate<T>,
        rhs: &CondensedRhs<T>,
        stats: &mut SolveStats,
    ) -> Direction<T> {
        let lu = self.lu.as_ref().expect("prepare before solve");
        let (n, m_e, m_i) = (self.n, self.m_e, self.m_i);
        let mut b = Vec::with_capacity(n + 2 * m_i + m_e);
        b.extend_from_slice(&rhs.beta1);
        b.extend_from_slice(&rhs.beta2);
        b.extend_from_slice(&rhs.rbar2);
        b.extend_from_slice(&rhs.beta4);
        let t0 = Instant::now();
        let sol = lu.solve(&b);
        stats.backsolve += t0.elapsed();

        let dx = sol[..n].to_vec();
        let ds = sol[n..n + m_i].to_vec();
        let dy = sol[n + m_i..n + m_i + m_e].to_vec();
        let dz = sol[n + m_i + m_e..].to_vec();
        let bounded = eval.problem.bounded();
        let du: Vec<T> = (0..n)
            .map(|i| {
                if bounded[i] {
                    (rhs.b5[i] - it.u[i] * dx[i]) / it.x[i]
                } else {
                    T::zero()
                }
            })
            .collect();
        let dv: Vec<T> = (0..m_i)
            .map(|j| (rhs.b6[j] - it.v[j] * ds[j]) / it.s[j])
            .collect();
        Direction {
            dx,
            ds,
            dy,
            dz,
            du,
            dv,
        }
    }
}

//! Step-computation strategies.
//!
//! Each strategy turns an iterate into a full primal-dual direction:
//!
//! * `DirectK1` factorizes the condensed saddle system `[K G'; G -dc I]`
//!   with the pivoting-free LDL^T and an inertia-controlled regularization
//!   loop.
//! * `HyKkt` factorizes the positive definite `K + gamma G'G` and solves
//!   the equality-dual Schur complement with conjugate gradient.
//! * `LiftedKkt` expects the equality-relaxed problem (no equalities
//!   left) and reduces to one positive definite solve.
//! * `DenseK2Oracle` solves the dense augmented system with LU and
//!   eigenvalue-counted inertia, as the independent reference.
//!
//! Every strategy refines its direction against the unreduced system with
//! Richardson sweeps down to `eps_K(mu) = min(1e-8, 1e-2 mu)`; a step that
//! cannot reach that precision is returned with a degraded flag rather
//! than an error.

mod direct;
mod hykkt;
mod oracle;

use std::cell::RefCell;
use std::time::Duration;

use crate::kkt::{condense_rhs, expand_direction, Direction, Iterate, UnreducedSystem};
use crate::krylov::CgReport;
use crate::nlp::NlpProblem;
use crate::scalar::Scalar;
use crate::sparse::{richardson_refine_from, RefineReport};

pub use direct::DirectEngine;
pub use hykkt::HykktEngine;
pub use oracle::OracleEngine;

#[derive(Debug, thiserror::Error)]
pub enum StrategyError {
    #[error("factorization still {issue} at delta_w = {delta_w:e}; regularization limit reached")]
    RegularizationLimit { issue: &'static str, delta_w: f64 },
    #[error("lifted strategy requires the equality-relaxed problem (m_e = 0)")]
    RequiresLifted,
    #[error(transparent)]
    Oracle(#[from] crate::kkt::dense_oracle::OracleError),
    #[error(transparent)]
    Diagnostics(#[from] crate::diagnostics::DiagnosticsError),
    #[error(transparent)]
    Sparse(#[from] crate::sparse::SparseError),
}

/// Which step computation backs the solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind<T> {
    DirectK1,
    HyKkt { gamma: T },
    LiftedKkt { tau: T },
    DenseK2Oracle,
}

impl<T: Scalar> StrategyKind<T> {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::DirectK1 => "k1",
            StrategyKind::HyKkt { .. } => "hykkt",
            StrategyKind::LiftedKkt { .. } => "lifted",
            StrategyKind::DenseK2Oracle => "oracle",
        }
    }
}

/// Wall-clock breakdown of the linear-algebra work in a step or run.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepTimings {
    pub assembly: Duration,
    pub factorize: Duration,
    pub backsolve: Duration,
    pub cg: Duration,
}

impl StepTimings {
    pub fn accumulate(&mut self, other: &StepTimings) {
        self.assembly += other.assembly;
        self.factorize += other.factorize;
        self.backsolve += other.backsolve;
        self.cg += other.cg;
    }

    pub fn total(&self) -> Duration {
        self.assembly + self.factorize + self.backsolve + self.cg
    }
}

/// Per-solve statistics engines report back through the refine closure.
#[derive(Debug, Default, Clone, Copy)]
pub struct SolveStats {
    pub backsolve: Duration,
    pub cg: Duration,
    pub cg_iterations: usize,
    pub cg_failed: bool,
    pub cg_last_residual: f64,
}

/// One computed Newton direction plus its quality metadata.
#[derive(Debug, Clone)]
pub struct StepResult<T> {
    pub direction: Direction<T>,
    pub refinement: RefineReport<T>,
    /// Total conjugate-gradient work in this step (HyKKT only).
    pub cg: Option<CgReport<T>>,
    pub inertia_corrections: usize,
    /// Infinity norm of the unreduced Newton residual of the direction.
    pub residual_unreduced: T,
    /// Set when the refinement target `eps_K(mu)` was not reached.
    pub degraded: bool,
}

/// Target precision of the step at barrier parameter `mu`.
pub fn eps_k<T: Scalar>(mu: T) -> T {
    T::cst(1e-8).min(T::cst(1e-2) * mu)
}

const MAX_REFINE_ITERS: usize = 10;

enum Engine<T> {
    Direct(DirectEngine<T>),
    Hykkt(HykktEngine<T>),
    Lifted(DirectEngine<T>),
    Oracle(OracleEngine<T>),
}

/// A step-computation strategy bound to one problem structure.
pub struct KktStrategy<T> {
    kind: StrategyKind<T>,
    engine: Engine<T>,
    timings: StepTimings,
}

impl<T: Scalar> KktStrategy<T> {
    /// Builds the strategy state (patterns, maps) for `problem`'s fixed
    /// sparsity structure.
    pub fn new(kind: StrategyKind<T>, problem: &NlpProblem<T>) -> Result<Self, StrategyError> {
        let engine = match kind {
            StrategyKind::DirectK1 => Engine::Direct(DirectEngine::new(problem)),
            StrategyKind::HyKkt { gamma } => Engine::Hykkt(HykktEngine::new(problem, gamma)),
            StrategyKind::LiftedKkt { .. } => {
                if problem.m_e() > 0 {
                    return Err(StrategyError::RequiresLifted);
                }
                Engine::Lifted(DirectEngine::new(problem))
            }
            StrategyKind::DenseK2Oracle => Engine::Oracle(OracleEngine::new(problem)),
        };
        Ok(Self {
            kind,
            engine,
            timings: StepTimings::default(),
        })
    }

    pub fn kind(&self) -> StrategyKind<T> {
        self.kind
    }

    /// Accumulated linear-algebra timings across all steps.
    pub fn timings(&self) -> StepTimings {
        self.timings
    }

    /// Current HyKKT regularization (escalated on CG failure).
    pub fn gamma(&self) -> Option<T> {
        match &self.engine {
            Engine::Hykkt(h) => Some(h.gamma()),
            _ => None,
        }
    }

    /// Inertia of the last accepted sparse factorization, if any.
    pub fn last_factor_inertia(&self) -> Option<crate::sparse::Inertia> {
        match &self.engine {
            Engine::Direct(e) | Engine::Lifted(e) => e.factor().map(|f| f.inertia()),
            Engine::Hykkt(e) => e.factor().map(|f| f.inertia()),
            Engine::Oracle(_) => None,
        }
    }

    /// Computes the full primal-dual direction at `it`, writing the
    /// accepted regularizations back into the iterate.
    pub fn compute_step(
        &mut self,
        problem: &NlpProblem<T>,
        it: &mut Iterate<T>,
    ) -> Result<StepResult<T>, StrategyError> {
        let mut timings = StepTimings::default();
        let sys = UnreducedSystem::new(problem, it);

        // Inertia-controlled preparation writes delta_w / delta_c into the
        // iterate so the condensation diagonals match the factorized matrix.
        let corrections = match &mut self.engine {
            Engine::Direct(e) | Engine::Lifted(e) => e.prepare(&sys.eval, it, &mut timings)?,
            Engine::Hykkt(e) => e.prepare(&sys.eval, it, &mut timings)?,
            Engine::Oracle(e) => e.prepare(&sys.eval, it, &mut timings)?,
        };
        let it_frozen: &Iterate<T> = it;

        let b: Vec<T> = sys.residual_f().iter().map(|v| -*v).collect();
        let stats = RefCell::new(SolveStats::default());

        // HyKKT probes the Schur solve once and escalates gamma on CG
        // failure before committing to the refinement loop.
        let warm_start: Option<Vec<T>> = if let Engine::Hykkt(e) = &mut self.engine {
            let crhs = condense_rhs(&sys.eval, it_frozen, &b);
            let mut st = SolveStats::default();
            let mut sol = e.solve_condensed(&sys.eval, &crhs.rbar1, &crhs.rbar2, &mut st);
            if st.cg_failed {
                e.escalate_gamma(&sys.eval, it_frozen, &mut timings)?;
                let mut st2 = SolveStats::default();
                sol = e.solve_condensed(&sys.eval, &crhs.rbar1, &crhs.rbar2, &mut st2);
                st.backsolve += st2.backsolve;
                st.cg += st2.cg;
                st.cg_iterations += st2.cg_iterations;
                st.cg_failed = st2.cg_failed;
                st.cg_last_residual = st2.cg_last_residual;
            }
            stats.borrow_mut().merge(&st);
            let (dx, dy) = sol;
            let d = expand_direction(&sys.eval, it_frozen, &crhs, dx, dy);
            Some(d.stacked())
        } else {
            None
        };

        let solve = |r: &[T], out: &mut [T]| {
            let crhs = condense_rhs(&sys.eval, it_frozen, r);
            let mut st = SolveStats::default();
            let d = match &self.engine {
                Engine::Direct(e) | Engine::Lifted(e) => {
                    let (dx, dy) = e.solve_condensed(&crhs.rbar1, &crhs.rbar2, &mut st);
                    expand_direction(&sys.eval, it_frozen, &crhs, dx, dy)
                }
                Engine::Hykkt(e) => {
                    let (dx, dy) = e.solve_condensed(&sys.eval, &crhs.rbar1, &crhs.rbar2, &mut st);
                    expand_direction(&sys.eval, it_frozen, &crhs, dx, dy)
                }
                Engine::Oracle(e) => e.solve_full(&sys.eval, it_frozen, &crhs, &mut st),
            };
            stats.borrow_mut().merge(&st);
            out.copy_from_slice(&d.stacked());
        };

        let target = eps_k(it_frozen.mu);
        let (solution, refinement) = richardson_refine_from(
            warm_start,
            |v: &[T], out: &mut [T]| sys.apply(v, out),
            solve,
            &b,
            target,
            T::zero(),
            MAX_REFINE_ITERS,
        );

        let stats = stats.into_inner();
        timings.backsolve += stats.backsolve;
        timings.cg += stats.cg;
        self.timings.accumulate(&timings);

        let direction =
            Direction::from_stacked(&solution, problem.n(), problem.m_e(), problem.m_i());
        let residual_unreduced = refinement.final_residual;
        let degraded = !refinement.converged || stats.cg_failed;
        let cg = match &self.engine {
            Engine::Hykkt(_) => Some(CgReport {
                iterations: stats.cg_iterations,
                final_residual_norm: T::cst(stats.cg_last_residual),
                converged: !stats.cg_failed,
            }),
            _ => None,
        };

        Ok(StepResult {
            direction,
            refinement,
            cg,
            inertia_corrections: corrections,
            residual_unreduced,
            degraded,
        })
    }
}

impl SolveStats {
    fn merge(&mut self, other: &SolveStats) {
        self.backsolve += other.backsolve;
        self.cg += other.cg;
        self.cg_iterations += other.cg_iterations;
        self.cg_failed |= other.cg_failed;
        self.cg_last_residual = other.cg_last_residual;
    }
}

/// Regularization escalation schedule shared by the engines: 0, then
/// `base`, then a single 100x jump, then 10x per trial.
pub(crate) fn next_delta_w<T: Scalar>(current: T, base: T) -> T {
    if current == T::zero() {
        base
    } else if current == base {
        T::cst(100.0) * base
    } else {
        T::cst(10.0) * current
    }
}

pub(crate) const DELTA_W_LIMIT: f64 = 1e40;
pub(crate) const DELTA_C_BAR: f64 = 1e-8;
pub(crate) const DELTA_C_EXP: f64 = 0.25;

/// `delta_w` base scale: `1e-4 * max(1, ||W||_inf)`.
pub(crate) fn delta_w_base<T: Scalar>(eval: &crate::kkt::KktEval<'_, T>) -> T {
    let n = eval.problem.n();
    let mut row_sum = vec![T::zero(); n];
    for (k, (r, c)) in eval.problem.hess_pattern().iter().enumerate() {
        let a = eval.hess[k].abs();
        row_sum[r] += a;
        if r != c {
            row_sum[c] += a;
        }
    }
    let w_norm = row_sum.into_iter().fold(T::zero(), |m, v| m.max(v));
    T::cst(1e-4) * w_norm.max(T::one())
}

/// Computes one step with a throwaway strategy instance; entry point for
/// single-step experiments.
pub fn compute_step<T: Scalar>(
    kind: StrategyKind<T>,
    problem: &NlpProblem<T>,
    it: &mut Iterate<T>,
) -> Result<StepResult<T>, StrategyError> {
    KktStrategy::new(kind, problem)?.compute_step(problem, it)
}

/// One Schur-complement hybrid step at `it`.
pub fn hykkt_step<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &mut Iterate<T>,
    gamma: T,
) -> Result<StepResult<T>, StrategyError> {
    compute_step(StrategyKind::HyKkt { gamma }, problem, it)
}

/// One equality-relaxation step; `problem` must already be in lifted form
/// (no equalities), see [`crate::nlp::lift_equalities`].
pub fn lifted_step<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &mut Iterate<T>,
    tau: T,
) -> Result<StepResult<T>, StrategyError> {
    compute_step(StrategyKind::LiftedKkt { tau }, problem, it)
}

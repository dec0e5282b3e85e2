//! The outer primal-dual interior-point loop: monotone barrier schedule,
//! fraction-to-boundary rule, merit line search and convergence test.

use std::sync::Arc;
use std::time::Instant;

use crate::kkt::{Direction, Iterate, KktEval};
use crate::nlp::{lift_equalities, NlpProblem};
use crate::scalar::{norm_inf, norm_one, Scalar};
use crate::strategy::{KktStrategy, StepTimings, StrategyKind};

/// Solver options; defaults follow the constants documented per field.
#[derive(Debug, Clone)]
pub struct IpmOptions<T> {
    /// Convergence tolerance on the scaled KKT error.
    pub tol: T,
    pub max_iters: usize,
    pub mu_init: T,
    pub strategy: StrategyKind<T>,
    /// Armijo constant of the merit line search (1e-4).
    pub armijo: T,
    /// Backtracking factor (0.5).
    pub backtrack: T,
    /// Line-search halving budget (30).
    pub max_halvings: usize,
    /// Barrier is decreased once the mu-error drops below `kappa_eps * mu`.
    pub kappa_eps: T,
    /// Linear barrier decrease factor (0.2).
    pub kappa_mu: T,
    /// Superlinear barrier exponent (1.5).
    pub theta_mu: T,
    /// Capture the entering iterate of the first `snapshot_iterates`
    /// iterations in the result, for offline experiments.
    pub snapshot_iterates: usize,
}

impl<T: Scalar> Default for IpmOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::cst(1e-8),
            max_iters: 100,
            mu_init: T::cst(0.1),
            strategy: StrategyKind::DirectK1,
            armijo: T::cst(1e-4),
            backtrack: T::cst(0.5),
            max_halvings: 30,
            kappa_eps: T::cst(10.0),
            kappa_mu: T::cst(0.2),
            theta_mu: T::cst(1.5),
            snapshot_iterates: 0,
        }
    }
}

impl<T: Scalar> IpmOptions<T> {
    pub fn with_strategy(strategy: StrategyKind<T>) -> Self {
        Self {
            strategy,
            ..Self::default()
        }
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpmStatus {
    Optimal,
    MaxIter,
    StrategyFailure,
    LineSearchFailure,
}

impl std::fmt::Display for IpmStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            IpmStatus::Optimal => "optimal",
            IpmStatus::MaxIter => "max_iter",
            IpmStatus::StrategyFailure => "strategy_failure",
            IpmStatus::LineSearchFailure => "line_search_failure",
        };
        f.write_str(s)
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub mu: T,
    pub duality: T,
    pub alpha_primal: T,
    pub alpha_dual: T,
    pub residual_unreduced: T,
    pub inertia_corrections: usize,
    pub cg_iterations: usize,
    pub conv_error: T,
    pub objective: T,
}

impl<T: Scalar> IterationRecord<T> {
    pub const CSV_HEADER: &'static str = "iteration,mu,duality,alpha_primal,alpha_dual,\
residual_unreduced,inertia_corrections,cg_iterations,conv_error,objective";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{},{},{:e},{:e}",
            self.iteration,
            self.mu.as_f64(),
            self.duality.as_f64(),
            self.alpha_primal.as_f64(),
            self.alpha_dual.as_f64(),
            self.residual_unreduced.as_f64(),
            self.inertia_corrections,
            self.cg_iterations,
            self.conv_error.as_f64(),
            self.objective.as_f64()
        )
    }
}

#[derive(Debug)]
pub struct IpmResult<T> {
    pub status: IpmStatus,
    pub iterate: Iterate<T>,
    pub objective: T,
    pub iterations: usize,
    pub trace: Vec<IterationRecord<T>>,
    pub timings: StepTimings,
    /// Scaled KKT error at exit.
    pub conv_error: T,
    /// Unscaled KKT infinity-norm residual at exit.
    pub kkt_residual: T,
    /// For lifted runs: violation of the original equalities at exit.
    pub eq_violation_original: Option<T>,
    pub message: String,
    pub snapshots: Vec<Iterate<T>>,
    pub total_cg_iterations: usize,
    pub init_seconds: f64,
    pub total_seconds: f64,
}

impl<T: Scalar> IpmResult<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == IpmStatus::Optimal
    }
}

/// Duality measure: average complementarity product over slacks and
/// bounded variables; zero when there are none.
pub fn duality_measure<T: Scalar>(it: &Iterate<T>, bounded: &[bool]) -> T {
    let mut acc = T::zero();
    let mut count = 0usize;
    for (s, v) in it.s.iter().zip(&it.v) {
        acc += *s * *v;
        count += 1;
    }
    for i in 0..it.x.len() {
        if bounded[i] {
            acc += it.x[i] * it.u[i];
            count += 1;
        }
    }
    if count == 0 {
        T::zero()
    } else {
        acc / T::cst(count as f64)
    }
}

/// Centrality conditions: Lagrangian gradient bounded by `c_const * Xi`
/// and every complementarity product at least `alpha * Xi`.
#[derive(Debug, Clone)]
pub struct CentralityReport<T> {
    pub satisfied: bool,
    pub grad_norm: T,
    pub duality: T,
    /// Smallest product / duality ratio and where it occurs.
    pub worst_ratio: T,
    pub worst_index: Option<(&'static str, usize)>,
}

pub fn centrality_check<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    c_const: T,
    alpha: T,
) -> CentralityReport<T> {
    let xi = duality_measure(it, problem.bounded());
    let eval = KktEval::new(problem, it);
    let grad_x = eval.lagrangian_gradient_x(it);
    let mut grad_norm = norm_inf(&grad_x);
    for (z, v) in it.z.iter().zip(&it.v) {
        grad_norm = grad_norm.max((*z - *v).abs());
    }
    grad_norm = grad_norm.max(norm_inf(&eval.eq));
    for (h, s) in eval.ineq.iter().zip(&it.s) {
        grad_norm = grad_norm.max((*h + *s).abs());
    }

    let mut worst_ratio = T::infinity();
    let mut worst_index = None;
    for (j, (s, v)) in it.s.iter().zip(&it.v).enumerate() {
        let ratio = if xi > T::zero() {
            *s * *v / xi
        } else {
            T::one()
        };
        if ratio < worst_ratio {
            worst_ratio = ratio;
            worst_index = Some(("slack", j));
        }
    }
    for i in 0..it.x.len() {
        if problem.bounded()[i] {
            let ratio = if xi > T::zero() {
                it.x[i] * it.u[i] / xi
            } else {
                T::one()
            };
            if ratio < worst_ratio {
                worst_ratio = ratio;
                worst_index = Some(("bound", i));
            }
        }
    }
    if worst_index.is_none() {
        worst_ratio = T::one();
    }

    let satisfied = grad_norm <= c_const * xi && worst_ratio >= alpha;
    CentralityReport {
        satisfied,
        grad_norm,
        duality: xi,
        worst_ratio,
        worst_index,
    }
}

/// Largest steps in (0, 1] keeping the bounded primal and dual variables
/// at fraction `tau_ftb` of their current values.
pub fn fraction_to_boundary<T: Scalar>(
    it: &Iterate<T>,
    d: &Direction<T>,
    tau_ftb: T,
    bounded: &[bool],
) -> (T, T) {
    let mut alpha_primal = T::one();
    let mut alpha_dual = T::one();
    let cap = |val: T, step: T, alpha: &mut T| {
        if step < T::zero() {
            *alpha = (*alpha).min(tau_ftb * val / (-step));
        }
    };
    for i in 0..it.x.len() {
        if bounded[i] {
            cap(it.x[i], d.dx[i], &mut alpha_primal);
            cap(it.u[i], d.du[i], &mut alpha_dual);
        }
    }
    for j in 0..it.s.len() {
        cap(it.s[j], d.ds[j], &mut alpha_primal);
        cap(it.v[j], d.dv[j], &mut alpha_dual);
    }
    (alpha_primal, alpha_dual)
}

/// Fraction-to-boundary parameter rule: `max(0.99, 1 - mu)`.
pub fn ftb_parameter<T: Scalar>(mu: T) -> T {
    T::cst(0.99).max(T::one() - mu)
}

/// Barrier update: `max(tol/10, min(kappa_mu * mu, mu^theta_mu))`.
pub fn update_barrier<T: Scalar>(mu: T, opts: &IpmOptions<T>) -> T {
    (opts.tol / T::cst(10.0)).max((opts.kappa_mu * mu).min(mu.powf(opts.theta_mu)))
}

/// Exact-penalty merit value at (x, s).
fn merit<T: Scalar>(problem: &NlpProblem<T>, x: &[T], s: &[T], mu: T, nu: T) -> T {
    let mut phi = problem.eval_objective(x);
    for i in 0..problem.n() {
        if problem.bounded()[i] {
            phi -= mu * x[i].ln();
        }
    }
    for sj in s {
        phi -= mu * sj.ln();
    }
    let mut g = vec![T::zero(); problem.m_e()];
    problem.eval_eq(x, &mut g);
    let mut h = vec![T::zero(); problem.m_i()];
    problem.eval_ineq(x, &mut h);
    let mut viol = norm_one(&g);
    for (hj, sj) in h.iter().zip(s) {
        viol += (*hj + *sj).abs();
    }
    phi + nu * viol
}

#[derive(Debug, thiserror::Error)]
#[error("line search exhausted {halvings} halvings (descent estimate {descent:e})")]
pub struct LineSearchFail {
    pub halvings: usize,
    pub descent: f64,
}

/// Backtracking Armijo search on the exact-penalty merit, starting from
/// `alpha_max`. Returns the accepted step length.
pub fn line_search<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    d: &Direction<T>,
    alpha_max: T,
    nu: T,
    opts: &IpmOptions<T>,
) -> Result<T, LineSearchFail> {
    let mu = it.mu;
    let phi0 = merit(problem, &it.x, &it.s, mu, nu);

    // Directional derivative: barrier gradient along (dx, ds) minus the
    // full penalty on the current violation (the Newton step removes the
    // linearized violation).
    let mut grad_f = vec![T::zero(); problem.n()];
    problem.eval_gradient(&it.x, &mut grad_f);
    let mut descent = T::zero();
    for i in 0..problem.n() {
        descent += grad_f[i] * d.dx[i];
        if problem.bounded()[i] {
            descent -= mu * d.dx[i] / it.x[i];
        }
    }
    for j in 0..problem.m_i() {
        descent -= mu * d.ds[j] / it.s[j];
    }
    let mut g = vec![T::zero(); problem.m_e()];
    problem.eval_eq(&it.x, &mut g);
    let mut h = vec![T::zero(); problem.m_i()];
    problem.eval_ineq(&it.x, &mut h);
    let mut viol = norm_one(&g);
    for (hj, sj) in h.iter().zip(&it.s) {
        viol += (*hj + *sj).abs();
    }
    descent -= nu * viol;

    // Roundoff allowance: once the predicted decrease drops below the
    // floating-point resolution of the merit value, strict Armijo would
    // reject steps at random.
    let roundoff = T::cst(10.0) * T::epsilon() * phi0.abs().max(T::one());

    let mut alpha = alpha_max;
    let mut x_trial = it.x.clone();
    let mut s_trial = it.s.clone();
    for halvings in 0..=opts.max_halvings {
        for i in 0..x_trial.len() {
            x_trial[i] = it.x[i] + alpha * d.dx[i];
        }
        for j in 0..s_trial.len() {
            s_trial[j] = it.s[j] + alpha * d.ds[j];
        }
        let phi = merit(problem, &x_trial, &s_trial, mu, nu);
        if phi.is_finite() && phi <= phi0 + opts.armijo * alpha * descent + roundoff {
            return Ok(alpha);
        }
        if halvings == opts.max_halvings {
            break;
        }
        alpha = alpha * opts.backtrack;
    }
    Err(LineSearchFail {
        halvings: opts.max_halvings,
        descent: descent.as_f64(),
    })
}

/// Initial iterate: bounded entries projected inward, slacks matched to
/// the inequality values, bound multipliers mu-consistent, constraint
/// multipliers zero.
pub fn initialize<T: Scalar>(problem: &NlpProblem<T>, opts: &IpmOptions<T>) -> Iterate<T> {
    let floor = T::cst(1e-2);
    let mu = opts.mu_init;
    let x: Vec<T> = problem
        .x0()
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            if problem.bounded()[i] {
                xi.max(floor)
            } else {
                xi
            }
        })
        .collect();
    let mut h = vec![T::zero(); problem.m_i()];
    problem.eval_ineq(&x, &mut h);
    let s: Vec<T> = h.iter().map(|hj| floor.max(hj.abs())).collect();
    let u: Vec<T> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| {
            if problem.bounded()[i] {
                mu / xi
            } else {
                T::zero()
            }
        })
        .collect();
    let v: Vec<T> = s.iter().map(|&sj| mu / sj).collect();
    Iterate {
        x,
        s,
        y: vec![T::zero(); problem.m_e()],
        z: vec![T::zero(); problem.m_i()],
        u,
        v,
        mu,
        delta_w: T::zero(),
        delta_c: T::zero(),
    }
}

/// Scaled and unscaled KKT errors; `mu = 0` gives the convergence test.
fn kkt_error<T: Scalar>(problem: &NlpProblem<T>, it: &Iterate<T>, mu: T) -> (T, T) {
    let eval = KktEval::new(problem, it);
    let grad = eval.lagrangian_gradient_x(it);
    let mut dual_inf = norm_inf(&grad);
    for (z, v) in it.z.iter().zip(&it.v) {
        dual_inf = dual_inf.max((*z - *v).abs());
    }
    let mut primal_inf = norm_inf(&eval.eq);
    for (h, s) in eval.ineq.iter().zip(&it.s) {
        primal_inf = primal_inf.max((*h + *s).abs());
    }
    let mut compl = T::zero();
    for (s, v) in it.s.iter().zip(&it.v) {
        compl = compl.max((*s * *v - mu).abs());
    }
    for i in 0..it.x.len() {
        if problem.bounded()[i] {
            compl = compl.max((it.x[i] * it.u[i] - mu).abs());
        }
    }

    // Ipopt-style scalings, capped at 100.
    let s_max = T::cst(100.0);
    let mult_sum = norm_one(&it.y) + norm_one(&it.z) + norm_one(&it.u) + norm_one(&it.v);
    let denom = T::cst((problem.m_e() + 2 * problem.m_i() + problem.n()).max(1) as f64);
    let s_d = (mult_sum / denom / s_max).max(T::one()).min(s_max);
    let bound_sum = norm_one(&it.u) + norm_one(&it.v);
    let bdenom = T::cst((problem.m_i() + problem.n()).max(1) as f64);
    let s_c = (bound_sum / bdenom / s_max).max(T::one()).min(s_max);

    let scaled = (dual_inf / s_d).max(primal_inf).max(compl / s_c);
    let unscaled = dual_inf.max(primal_inf).max(compl);
    (scaled, unscaled)
}

/// Solves `problem` with the configured strategy. The lifted strategy
/// relaxes the equalities once up front and runs on the relaxed problem;
/// its result reports the violation of the original equalities separately.
pub fn solve<T: Scalar>(problem: &Arc<NlpProblem<T>>, opts: &IpmOptions<T>) -> IpmResult<T> {
    let t_start = Instant::now();
    let (work, original): (Arc<NlpProblem<T>>, Option<&Arc<NlpProblem<T>>>) = match opts.strategy {
        StrategyKind::LiftedKkt { tau } => (Arc::new(lift_equalities(problem, tau)), Some(problem)),
        _ => (Arc::clone(problem), None),
    };

    let mut strategy = match KktStrategy::new(opts.strategy, &work) {
        Ok(s) => s,
        Err(e) => {
            let it = initialize(&*work, opts);
            return finish(
                &work,
                original,
                IpmStatus::StrategyFailure,
                it,
                0,
                Vec::new(),
                StepTimings::default(),
                e.to_string(),
                Vec::new(),
                0,
                0.0,
                t_start,
            );
        }
    };
    let mut it = initialize(&*work, opts);
    let init_seconds = t_start.elapsed().as_secs_f64();

    let mut trace: Vec<IterationRecord<T>> = Vec::new();
    let mut snapshots = Vec::new();
    let mut total_cg = 0usize;
    let mut nu = T::one();
    let mu_floor = opts.tol / T::cst(10.0);

    let mut status = IpmStatus::MaxIter;
    let mut message = String::new();
    let mut iterations = 0usize;

    for iteration in 0..opts.max_iters {
        let (conv_scaled, _) = kkt_error(&work, &it, T::zero());
        if conv_scaled <= opts.tol {
            status = IpmStatus::Optimal;
            break;
        }

        // Monotone barrier schedule: tighten mu while the mu-problem is
        // solved to within kappa_eps * mu. The unscaled error keeps mu from
        // running ahead of the complementarity products.
        loop {
            let (_, e_mu) = kkt_error(&work, &it, it.mu);
            if e_mu > opts.kappa_eps * it.mu || it.mu <= mu_floor {
                break;
            }
            let new_mu = update_barrier(it.mu, opts);
            if new_mu >= it.mu {
                break;
            }
            it.mu = new_mu;
        }

        if snapshots.len() < opts.snapshot_iterates {
            snapshots.push(it.clone());
        }

        let step = match strategy.compute_step(&work, &mut it) {
            Ok(step) => step,
            Err(e) => {
                status = IpmStatus::StrategyFailure;
                message = e.to_string();
                iterations = iteration;
                break;
            }
        };
        total_cg += step.cg.map(|c| c.iterations).unwrap_or(0);

        let tau_ftb = ftb_parameter(it.mu);
        let (alpha_primal_max, alpha_dual) =
            fraction_to_boundary(&it, &step.direction, tau_ftb, work.bounded());

        // Penalty parameter keeps dominating the multiplier estimates.
        let mult_norm = norm_inf(&step.direction.dy)
            .max(norm_inf(&step.direction.dz))
            .max(norm_inf(&it.y))
            .max(norm_inf(&it.z));
        nu = nu.max(T::cst(1.5) * mult_norm + T::cst(0.1));

        let alpha_primal =
            match line_search(&work, &it, &step.direction, alpha_primal_max, nu, opts) {
                Ok(alpha) => alpha,
                Err(e) => {
                    status = IpmStatus::LineSearchFailure;
                    message = e.to_string();
                    iterations = iteration;
                    break;
                }
            };

        for i in 0..work.n() {
            it.x[i] += alpha_primal * step.direction.dx[i];
        }
        for j in 0..work.m_i() {
            it.s[j] += alpha_primal * step.direction.ds[j];
        }
        for r in 0..work.m_e() {
            it.y[r] += alpha_primal * step.direction.dy[r];
        }
        // z moves with the dual step so the linear coupling z - v = 0
        // contracts monotonically instead of reopening under mixed steps.
        for j in 0..work.m_i() {
            it.z[j] += alpha_dual * step.direction.dz[j];
        }
        for i in 0..work.n() {
            it.u[i] += alpha_dual * step.direction.du[i];
        }
        for j in 0..work.m_i() {
            it.v[j] += alpha_dual * step.direction.dv[j];
        }
        // Loose centrality safeguard: keep bound multipliers within a wide
        // band of mu over the paired primal, so the condensation diagonals
        // cannot degenerate.
        let kappa_sigma = T::cst(1e10);
        for j in 0..work.m_i() {
            let lo = it.mu / (kappa_sigma * it.s[j]);
            let hi = kappa_sigma * it.mu / it.s[j];
            it.v[j] = it.v[j].max(lo).min(hi);
        }
        for i in 0..work.n() {
            if work.bounded()[i] {
                let lo = it.mu / (kappa_sigma * it.x[i]);
                let hi = kappa_sigma * it.mu / it.x[i];
                it.u[i] = it.u[i].max(lo).min(hi);
            }
        }
        if !it.is_interior(work.bounded()) {
            status = IpmStatus::StrategyFailure;
            message = "interiority lost after step".to_string();
            iterations = iteration + 1;
            break;
        }
        let mult_scale = norm_inf(&it.y)
            .max(norm_inf(&it.z))
            .max(norm_inf(&it.u))
            .max(norm_inf(&it.v));
        if mult_scale > T::cst(1e12) {
            status = IpmStatus::StrategyFailure;
            message = "multipliers diverging; the problem is likely infeasible".to_string();
            iterations = iteration + 1;
            break;
        }

        let (conv_after, _) = kkt_error(&work, &it, T::zero());
        trace.push(IterationRecord {
            iteration,
            mu: it.mu,
            duality: duality_measure(&it, work.bounded()),
            alpha_primal,
            alpha_dual,
            residual_unreduced: step.residual_unreduced,
            inertia_corrections: step.inertia_corrections,
            cg_iterations: step.cg.map(|c| c.iterations).unwrap_or(0),
            conv_error: conv_after,
            objective: work.eval_objective(&it.x),
        });
        iterations = iteration + 1;
    }

    if status == IpmStatus::MaxIter {
        iterations = opts.max_iters;
        message = "iteration limit reached".to_string();
    }

    finish(
        &work,
        original,
        status,
        it,
        iterations,
        trace,
        strategy.timings(),
        message,
        snapshots,
        total_cg,
        init_seconds,
        t_start,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    work: &Arc<NlpProblem<T>>,
    original: Option<&Arc<NlpProblem<T>>>,
    status: IpmStatus,
    iterate: Iterate<T>,
    iterations: usize,
    trace: Vec<IterationRecord<T>>,
    timings: StepTimings,
    message: String,
    snapshots: Vec<Iterate<T>>,
    total_cg_iterations: usize,
    init_seconds: f64,
    t_start: Instant,
) -> IpmResult<T> {
    let objective = work.eval_objective(&iterate.x);
    let (conv_error, kkt_residual) = kkt_error(work, &iterate, T::zero());
    let eq_violation_original = original.map(|orig| {
        let mut g = vec![T::zero(); orig.m_e()];
        orig.eval_eq(&iterate.x, &mut g);
        norm_inf(&g)
    });
    IpmResult {
        status,
        iterate,
        objective,
        iterations,
        trace,
        timings,
        conv_error,
        kkt_residual,
        eq_violation_original,
        message,
        snapshots,
        total_cg_iterations,
        init_seconds,
        total_seconds: t_start.elapsed().as_secs_f64(),
    }
}

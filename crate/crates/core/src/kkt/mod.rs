//! Assembly of the Newton-step linear systems and recovery of eliminated
//! direction components.
//!
//! The unreduced system couples (dx, ds, dy, dz, du, dv). Eliminating the
//! bound multipliers gives the augmented form over (dx, ds, dy, dz) with
//! diagonals `D_x = X^{-1}U`, `D_s = S^{-1}V`; further eliminating
//! (ds, dz) gives the condensed form over (dx, dy) with
//! `K = W + D_x + delta_w I + H^T D_H H`. Right-hand sides are stored
//! already negated, i.e. the systems read `M d = rhs` directly.

pub mod dense_oracle;

use crate::nlp::NlpProblem;
use crate::scalar::Scalar;
use crate::sparse::{csc_from_triplets, SparseSymCsc};

/// Primal-dual point plus barrier and regularization state.
#[derive(Debug, Clone)]
pub struct Iterate<T> {
    pub x: Vec<T>,
    pub s: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
    pub mu: T,
    pub delta_w: T,
    pub delta_c: T,
}

impl<T: Scalar> Iterate<T> {
    /// Strict interiority: bounded x and u entries, all s and v positive.
    pub fn is_interior(&self, bounded: &[bool]) -> bool {
        self.x
            .iter()
            .zip(bounded)
            .all(|(&xi, &b)| !b || xi > T::zero())
            && self
                .u
                .iter()
                .zip(bounded)
                .all(|(&ui, &b)| !b || ui > T::zero())
            && self.s.iter().all(|&si| si > T::zero())
            && self.v.iter().all(|&vi| vi > T::zero())
    }

    /// `D_x` diagonal: `u_i / x_i` on bounded coordinates, zero elsewhere.
    pub fn d_x(&self, bounded: &[bool]) -> Vec<T> {
        self.x
            .iter()
            .zip(&self.u)
            .zip(bounded)
            .map(|((&x, &u), &b)| if b { u / x } else { T::zero() })
            .collect()
    }

    /// `D_s` diagonal: `v_i / s_i`.
    pub fn d_s(&self) -> Vec<T> {
        self.s.iter().zip(&self.v).map(|(&s, &v)| v / s).collect()
    }

    /// Entrywise `C = (1 + delta_c (D_s + delta_w))^{-1}`.
    pub fn c_diag(&self) -> Vec<T> {
        self.d_s()
            .into_iter()
            .map(|ds| (T::one() + self.delta_c * (ds + self.delta_w)).recip())
            .collect()
    }

    /// Entrywise `D_H = (D_s + delta_w) C`.
    pub fn d_h_diag(&self) -> Vec<T> {
        self.d_s()
            .into_iter()
            .zip(self.c_diag())
            .map(|(ds, c)| (ds + self.delta_w) * c)
            .collect()
    }
}

/// Residual vectors of the augmented system and the (negated) condensed
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct KktRhs<T> {
    /// `grad f + G'y + H'z - mu X^{-1} e` (barrier term on bounded indices).
    pub r1: Vec<T>,
    /// `z - mu S^{-1} e`.
    pub r2: Vec<T>,
    /// `g(x)`.
    pub r3: Vec<T>,
    /// `h(x) + s`.
    pub r4: Vec<T>,
    /// `-(r1 + H'(D_H r4 - C r2))`.
    pub rbar1: Vec<T>,
    /// `-r3`.
    pub rbar2: Vec<T>,
}

impl<T: Scalar> KktRhs<T> {
    pub fn max_residual(&self) -> T {
        use crate::scalar::norm_inf;
        norm_inf(&self.r1)
            .max(norm_inf(&self.r2))
            .max(norm_inf(&self.r3))
            .max(norm_inf(&self.r4))
    }
}

/// Problem derivatives evaluated at one iterate, with sparse apply helpers.
pub struct KktEval<'p, T> {
    pub problem: &'p NlpProblem<T>,
    pub grad_f: Vec<T>,
    pub eq: Vec<T>,
    pub ineq: Vec<T>,
    pub jac_eq: Vec<T>,
    pub jac_ineq: Vec<T>,
    pub hess: Vec<T>,
}

impl<'p, T: Scalar> KktEval<'p, T> {
    pub fn new(problem: &'p NlpProblem<T>, it: &Iterate<T>) -> Self {
        let mut grad_f = vec![T::zero(); problem.n()];
        problem.eval_gradient(&it.x, &mut grad_f);
        let mut eq = vec![T::zero(); problem.m_e()];
        problem.eval_eq(&it.x, &mut eq);
        let mut ineq = vec![T::zero(); problem.m_i()];
        problem.eval_ineq(&it.x, &mut ineq);
        let mut jac_eq = vec![T::zero(); problem.jac_eq_pattern().len()];
        problem.eval_jac_eq(&it.x, &mut jac_eq);
        let mut jac_ineq = vec![T::zero(); problem.jac_ineq_pattern().len()];
        problem.eval_jac_ineq(&it.x, &mut jac_ineq);
        let mut hess = vec![T::zero(); problem.hess_pattern().len()];
        problem.eval_hess(&it.x, &it.y, &it.z, &mut hess);
        Self {
            problem,
            grad_f,
            eq,
            ineq,
            jac_eq,
            jac_ineq,
            hess,
        }
    }

    /// `out = G v`.
    pub fn apply_jac_eq(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (k, (r, c)) in self.problem.jac_eq_pattern().iter().enumerate() {
            out[r] += self.jac_eq[k] * v[c];
        }
    }

    /// `out = G^T v`.
    pub fn apply_jac_eq_t(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (k, (r, c)) in self.problem.jac_eq_pattern().iter().enumerate() {
            out[c] += self.jac_eq[k] * v[r];
        }
    }

    /// `out = H v`.
    pub fn apply_jac_ineq(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (k, (r, c)) in self.problem.jac_ineq_pattern().iter().enumerate() {
            out[r] += self.jac_ineq[k] * v[c];
        }
    }

    /// `out = H^T v`.
    pub fn apply_jac_ineq_t(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (k, (r, c)) in self.problem.jac_ineq_pattern().iter().enumerate() {
            out[c] += self.jac_ineq[k] * v[r];
        }
    }

    /// `out = W v` (symmetric from the stored lower triangle).
    pub fn apply_hess(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (k, (r, c)) in self.problem.hess_pattern().iter().enumerate() {
            out[r] += self.hess[k] * v[c];
            if r != c {
                out[c] += self.hess[k] * v[r];
            }
        }
    }

    /// Lagrangian gradient `grad f + G'y + H'z - u` of the slack problem.
    pub fn lagrangian_gradient_x(&self, it: &Iterate<T>) -> Vec<T> {
        let n = self.problem.n();
        let mut out = self.grad_f.clone();
        let mut tmp = vec![T::zero(); n];
        if self.problem.m_e() > 0 {
            self.apply_jac_eq_t(&it.y, &mut tmp);
            for i in 0..n {
                out[i] += tmp[i];
            }
        }
        if self.problem.m_i() > 0 {
            self.apply_jac_ineq_t(&it.z, &mut tmp);
            for i in 0..n {
                out[i] += tmp[i];
            }
        }
        for i in 0..n {
            out[i] -= it.u[i];
        }
        out
    }
}

/// Diagonals and condensed matrix of the current iterate.
#[derive(Debug, Clone)]
pub struct CondensedBlocks<T> {
    pub d_x: Vec<T>,
    pub d_s: Vec<T>,
    pub c: Vec<T>,
    pub d_h: Vec<T>,
    pub k: SparseSymCsc<T>,
}

/// Builds `K = W + D_x + delta_w I + H^T D_H H` (optionally plus
/// `gamma G^T G`) over a pattern computed once and reused.
pub struct CondensedAssembler<T> {
    include_gtg: bool,
    pattern: SparseSymCsc<T>,
    hess_map: Vec<usize>,
    diag_map: Vec<usize>,
    /// (K position, H value index a, H value index b, inequality row).
    h_pairs: Vec<(usize, usize, usize, usize)>,
    /// (K position, G value index a, G value index b).
    g_pairs: Vec<(usize, usize, usize)>,
}

impl<T: Scalar> CondensedAssembler<T> {
    pub fn new(problem: &NlpProblem<T>, include_gtg: bool) -> Self {
        let n = problem.n();
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for i in 0..n {
            entries.push((i, i, T::zero()));
        }
        for (r, c) in problem.hess_pattern().iter() {
            entries.push((r, c, T::zero()));
        }
        let pair_keys = |pattern: &crate::nlp::CooPattern, m: usize| {
            let mut rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m];
            for (k, (r, c)) in pattern.iter().enumerate() {
                rows[r].push((k, c));
            }
            rows
        };
        let h_rows = pair_keys(problem.jac_ineq_pattern(), problem.m_i());
        for row in &h_rows {
            for &(_, ca) in row {
                for &(_, cb) in row {
                    if ca >= cb {
                        entries.push((ca, cb, T::zero()));
                    }
                }
            }
        }
        let g_rows = pair_keys(problem.jac_eq_pattern(), problem.m_e());
        if include_gtg {
            for row in &g_rows {
                for &(_, ca) in row {
                    for &(_, cb) in row {
                        if ca >= cb {
                            entries.push((ca, cb, T::zero()));
                        }
                    }
                }
            }
        }
        let pattern = csc_from_triplets(n, &entries).expect("condensed pattern");

        let hess_map = problem
            .hess_pattern()
            .iter()
            .map(|(r, c)| pattern.position(r, c).unwrap())
            .collect();
        let diag_map = (0..n).map(|i| pattern.position(i, i).unwrap()).collect();
        let mut h_pairs = Vec::new();
        for (row_idx, row) in h_rows.iter().enumerate() {
            for &(ka, ca) in row {
                for &(kb, cb) in row {
                    if ca >= cb {
                        h_pairs.push((pattern.position(ca, cb).unwrap(), ka, kb, row_idx));
                    }
                }
            }
        }
        let mut g_pairs = Vec::new();
        if include_gtg {
            for row in &g_rows {
                for &(ka, ca) in row {
                    for &(kb, cb) in row {
                        if ca >= cb {
                            g_pairs.push((pattern.position(ca, cb).unwrap(), ka, kb));
                        }
                    }
                }
            }
        }

        Self {
            include_gtg,
            pattern,
            hess_map,
            diag_map,
            h_pairs,
            g_pairs,
        }
    }

    /// Structural dimension of the assembled matrix.
    pub fn dim(&self) -> usize {
        self.pattern.dim()
    }

    /// Reference pattern (values meaningless between assemblies).
    pub fn pattern(&self) -> &SparseSymCsc<T> {
        &self.pattern
    }

    /// Assembles the condensed blocks at `it`; `gamma` scales the `G^T G`
    /// term and must be zero unless the assembler was built with it.
    pub fn assemble(
        &mut self,
        eval: &KktEval<'_, T>,
        it: &Iterate<T>,
        gamma: T,
    ) -> CondensedBlocks<T> {
        assert!(
            self.include_gtg || gamma == T::zero(),
            "assembler built without the G^T G block"
        );
        let bounded = eval.problem.bounded();
        let d_x = it.d_x(bounded);
        let d_s = it.d_s();
        let c = it.c_diag();
        let d_h = it.d_h_diag();

        let values = self.pattern.values_mut();
        values.iter_mut().for_each(|v| *v = T::zero());
        for (k, &pos) in self.hess_map.iter().enumerate() {
            values[pos] += eval.hess[k];
        }
        for (i, &pos) in self.diag_map.iter().enumerate() {
            values[pos] += d_x[i] + it.delta_w;
        }
        for &(pos, ka, kb, row) in &self.h_pairs {
            values[pos] += d_h[row] * eval.jac_ineq[ka] * eval.jac_ineq[kb];
        }
        if gamma != T::zero() {
            for &(pos, ka, kb) in &self.g_pairs {
                values[pos] += gamma * eval.jac_eq[ka] * eval.jac_eq[kb];
            }
        }

        CondensedBlocks {
            d_x,
            d_s,
            c,
            d_h,
            k: self.pattern.clone(),
        }
    }
}

/// Convenience one-shot assembly (pattern rebuilt each call).
pub fn assemble_condensed<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
) -> CondensedBlocks<T> {
    let eval = KktEval::new(problem, it);
    CondensedAssembler::new(problem, false).assemble(&eval, it, T::zero())
}

/// Builds the augmented-system residuals `r1..r4` and the negated condensed
/// right-hand sides at `it`.
pub fn build_rhs<T: Scalar>(problem: &NlpProblem<T>, it: &Iterate<T>) -> KktRhs<T> {
    let eval = KktEval::new(problem, it);
    build_rhs_from_eval(&eval, it)
}

pub fn build_rhs_from_eval<T: Scalar>(eval: &KktEval<'_, T>, it: &Iterate<T>) -> KktRhs<T> {
    let problem = eval.problem;
    let n = problem.n();
    let m_i = problem.m_i();
    let bounded = problem.bounded();

    // r1 uses the barrier form of the bound term: -mu X^{-1} e instead of -u.
    let mut r1 = eval.lagrangian_gradient_x(it);
    for i in 0..n {
        if bounded[i] {
            r1[i] += it.u[i] - it.mu / it.x[i];
        }
    }
    let r2: Vec<T> = (0..m_i).map(|j| it.z[j] - it.mu / it.s[j]).collect();
    let r3 = eval.eq.clone();
    let r4: Vec<T> = (0..m_i).map(|j| eval.ineq[j] + it.s[j]).collect();

    let c = it.c_diag();
    let d_h = it.d_h_diag();
    let mut tmp = vec![T::zero(); m_i];
    for j in 0..m_i {
        tmp[j] = d_h[j] * r4[j] - c[j] * r2[j];
    }
    let mut ht = vec![T::zero(); n];
    eval.apply_jac_ineq_t(&tmp, &mut ht);
    let rbar1: Vec<T> = (0..n).map(|i| -(r1[i] + ht[i])).collect();
    let rbar2: Vec<T> = r3.iter().map(|&v| -v).collect();

    KktRhs {
        r1,
        r2,
        r3,
        r4,
        rbar1,
        rbar2,
    }
}

/// Recovers `(ds, dz)` from the condensed solution, residual convention:
/// `dz = -C r2 + D_H (H dx + r4)`, `ds = -(D_s + delta_w)^{-1} (r2 + dz)`.
pub fn recover_inequality_steps<T: Scalar>(
    eval: &KktEval<'_, T>,
    blocks: &CondensedBlocks<T>,
    rhs: &KktRhs<T>,
    delta_w: T,
    dx: &[T],
) -> (Vec<T>, Vec<T>) {
    let m_i = eval.problem.m_i();
    let mut hdx = vec![T::zero(); m_i];
    eval.apply_jac_ineq(dx, &mut hdx);
    let mut dz = vec![T::zero(); m_i];
    let mut ds = vec![T::zero(); m_i];
    for j in 0..m_i {
        dz[j] = -(blocks.c[j] * rhs.r2[j]) + blocks.d_h[j] * (hdx[j] + rhs.r4[j]);
        ds[j] = -(rhs.r2[j] + dz[j]) / (blocks.d_s[j] + delta_w);
    }
    (ds, dz)
}

/// Recovers the bound-multiplier steps:
/// `du = -X^{-1}(U dx - mu e) - u` on bounded indices (zero elsewhere),
/// `dv = -S^{-1}(V ds - mu e) - v`.
pub fn recover_bound_steps<T: Scalar>(
    bounded: &[bool],
    it: &Iterate<T>,
    dx: &[T],
    ds: &[T],
) -> (Vec<T>, Vec<T>) {
    let du: Vec<T> = (0..it.x.len())
        .map(|i| {
            if bounded[i] {
                -(it.u[i] * dx[i] - it.mu) / it.x[i] - it.u[i]
            } else {
                T::zero()
            }
        })
        .collect();
    let dv: Vec<T> = (0..it.s.len())
        .map(|j| -(it.v[j] * ds[j] - it.mu) / it.s[j] - it.v[j])
        .collect();
    (du, dv)
}

/// Full primal-dual direction in unreduced block order.
#[derive(Debug, Clone)]
pub struct Direction<T> {
    pub dx: Vec<T>,
    pub ds: Vec<T>,
    pub dy: Vec<T>,
    pub dz: Vec<T>,
    pub du: Vec<T>,
    pub dv: Vec<T>,
}

impl<T: Scalar> Direction<T> {
    pub fn zeros(n: usize, m_e: usize, m_i: usize) -> Self {
        Self {
            dx: vec![T::zero(); n],
            ds: vec![T::zero(); m_i],
            dy: vec![T::zero(); m_e],
            dz: vec![T::zero(); m_i],
            du: vec![T::zero(); n],
            dv: vec![T::zero(); m_i],
        }
    }

    pub fn stacked(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.dx.len() + 3 * self.ds.len() + self.dy.len());
        out.extend_from_slice(&self.dx);
        out.extend_from_slice(&self.ds);
        out.extend_from_slice(&self.dy);
        out.extend_from_slice(&self.dz);
        out.extend_from_slice(&self.du);
        out.extend_from_slice(&self.dv);
        out
    }

    pub fn from_stacked(v: &[T], n: usize, m_e: usize, m_i: usize) -> Self {
        let mut off = 0;
        let mut take = |len: usize| {
            let s = v[off..off + len].to_vec();
            off += len;
            s
        };
        let dx = take(n);
        let ds = take(m_i);
        let dy = take(m_e);
        let dz = take(m_i);
        let du = take(n);
        let dv = take(m_i);
        Self {
            dx,
            ds,
            dy,
            dz,
            du,
            dv,
        }
    }
}

/// The unreduced Newton operator and residual at a fixed iterate, the
/// refinement target for every strategy.
pub struct UnreducedSystem<'p, T> {
    pub eval: KktEval<'p, T>,
    x: Vec<T>,
    s: Vec<T>,
    y: Vec<T>,
    z: Vec<T>,
    u: Vec<T>,
    v: Vec<T>,
    mu: T,
    n: usize,
    m_e: usize,
    m_i: usize,
}

impl<'p, T: Scalar> UnreducedSystem<'p, T> {
    pub fn new(problem: &'p NlpProblem<T>, it: &Iterate<T>) -> Self {
        let eval = KktEval::new(problem, it);
        Self {
            eval,
            x: it.x.clone(),
            s: it.s.clone(),
            y: it.y.clone(),
            z: it.z.clone(),
            u: it.u.clone(),
            v: it.v.clone(),
            mu: it.mu,
            n: problem.n(),
            m_e: problem.m_e(),
            m_i: problem.m_i(),
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.n + 3 * self.m_i + self.m_e
    }

    /// `out = J d` where `J` is the unreduced Newton matrix. Rows of the
    /// complementarity block for unbounded coordinates reduce to `du_i`.
    pub fn apply(&self, d: &[T], out: &mut [T]) {
        let (n, m_e, m_i) = (self.n, self.m_e, self.m_i);
        let dir = Direction::from_stacked(d, n, m_e, m_i);
        let bounded = self.eval.problem.bounded();
        out.iter_mut().for_each(|o| *o = T::zero());

        let mut buf_n = vec![T::zero(); n];
        let mut buf_mi = vec![T::zero(); m_i];
        let mut buf_me = vec![T::zero(); m_e];

        // Row 1: W dx + G' dy + H' dz - du
        self.eval.apply_hess(&dir.dx, &mut buf_n);
        for i in 0..n {
            out[i] += buf_n[i] - dir.du[i];
        }
        if m_e > 0 {
            self.eval.apply_jac_eq_t(&dir.dy, &mut buf_n);
            for i in 0..n {
                out[i] += buf_n[i];
            }
        }
        if m_i > 0 {
            self.eval.apply_jac_ineq_t(&dir.dz, &mut buf_n);
            for i in 0..n {
                out[i] += buf_n[i];
            }
        }
        // Row 2: dz - dv
        let base2 = n;
        for j in 0..m_i {
            out[base2 + j] = dir.dz[j] - dir.dv[j];
        }
        // Row 3: G dx
        let base3 = n + m_i;
        if m_e > 0 {
            self.eval.apply_jac_eq(&dir.dx, &mut buf_me);
            out[base3..base3 + m_e].copy_from_slice(&buf_me);
        }
        // Row 4: H dx + ds
        let base4 = base3 + m_e;
        if m_i > 0 {
            self.eval.apply_jac_ineq(&dir.dx, &mut buf_mi);
            for j in 0..m_i {
                out[base4 + j] = buf_mi[j] + dir.ds[j];
            }
        }
        // Row 5: U dx + X du (bounded), du (unbounded)
        let base5 = base4 + m_i;
        for i in 0..n {
            out[base5 + i] = if bounded[i] {
                self.u[i] * dir.dx[i] + self.x[i] * dir.du[i]
            } else {
                dir.du[i]
            };
        }
        // Row 6: V ds + S dv
        let base6 = base5 + n;
        for j in 0..m_i {
            out[base6 + j] = self.v[j] * dir.ds[j] + self.s[j] * dir.dv[j];
        }
    }

    /// The barrier residual `F_mu` at the iterate, stacked in row order.
    pub fn residual_f(&self) -> Vec<T> {
        let (n, m_e, m_i) = (self.n, self.m_e, self.m_i);
        let bounded = self.eval.problem.bounded();
        let mut f = vec![T::zero(); self.dim()];
        let grad_l = {
            let mut out = self.eval.grad_f.clone();
            let mut tmp = vec![T::zero(); n];
            if m_e > 0 {
                self.eval.apply_jac_eq_t(&self.y, &mut tmp);
                for i in 0..n {
                    out[i] += tmp[i];
                }
            }
            if m_i > 0 {
                self.eval.apply_jac_ineq_t(&self.z, &mut tmp);
                for i in 0..n {
                    out[i] += tmp[i];
                }
            }
            for i in 0..n {
                out[i] -= self.u[i];
            }
            out
        };
        f[..n].copy_from_slice(&grad_l);
        for j in 0..m_i {
            f[n + j] = self.z[j] - self.v[j];
        }
        let base3 = n + m_i;
        f[base3..base3 + m_e].copy_from_slice(&self.eval.eq);
        let base4 = base3 + m_e;
        for j in 0..m_i {
            f[base4 + j] = self.eval.ineq[j] + self.s[j];
        }
        let base5 = base4 + m_i;
        for i in 0..n {
            f[base5 + i] = if bounded[i] {
                self.x[i] * self.u[i] - self.mu
            } else {
                T::zero()
            };
        }
        let base6 = base5 + n;
        for j in 0..m_i {
            f[base6 + j] = self.s[j] * self.v[j] - self.mu;
        }
        f
    }

    /// Signed residual of the Newton system: `J d + F_mu`.
    pub fn apply_unreduced(&self, d: &Direction<T>) -> Vec<T> {
        let stacked = d.stacked();
        let mut out = vec![T::zero(); self.dim()];
        self.apply(&stacked, &mut out);
        let f = self.residual_f();
        for (o, fi) in out.iter_mut().zip(&f) {
            *o += *fi;
        }
        out
    }

    /// Infinity norm of the signed Newton residual for a direction.
    pub fn residual_norm(&self, d: &Direction<T>) -> T {
        crate::scalar::norm_inf(&self.apply_unreduced(d))
    }
}

/// Signed residual of the unreduced Newton system `J d + F_mu(w)` at `it`.
pub fn apply_unreduced<T: Scalar>(
    problem: &NlpProblem<T>,
    it: &Iterate<T>,
    d: &Direction<T>,
) -> Vec<T> {
    UnreducedSystem::new(problem, it).apply_unreduced(d)
}

/// Generic condensation of an unreduced right-hand side: given `b` with
/// `J d = b`, eliminates the bound rows into augmented-form right-hand
/// sides `beta1..beta4`, then the inequality blocks into the condensed
/// right-hand side. The same formulas back both the nominal step and each
/// refinement sweep.
pub struct CondensedRhs<T> {
    pub beta1: Vec<T>,
    pub beta2: Vec<T>,
    pub beta4: Vec<T>,
    pub b5: Vec<T>,
    pub b6: Vec<T>,
    pub rbar1: Vec<T>,
    pub rbar2: Vec<T>,
}

pub fn condense_rhs<T: Scalar>(eval: &KktEval<'_, T>, it: &Iterate<T>, b: &[T]) -> CondensedRhs<T> {
    let n = eval.problem.n();
    let m_e = eval.problem.m_e();
    let m_i = eval.problem.m_i();
    let bounded = eval.problem.bounded();
    let c = it.c_diag();
    let d_h = it.d_h_diag();
    let (b1, rest) = b.split_at(n);
    let (b2, rest) = rest.split_at(m_i);
    let (b3, rest) = rest.split_at(m_e);
    let (b4, rest) = rest.split_at(m_i);
    let (b5, b6) = rest.split_at(n);

    let beta1: Vec<T> = (0..n)
        .map(|i| {
            if bounded[i] {
                b1[i] + b5[i] / it.x[i]
            } else {
                b1[i]
            }
        })
        .collect();
    let beta2: Vec<T> = (0..m_i).map(|j| b2[j] + b6[j] / it.s[j]).collect();

    let mut tmp = vec![T::zero(); m_i];
    for j in 0..m_i {
        tmp[j] = d_h[j] * b4[j] - c[j] * beta2[j];
    }
    let mut ht = vec![T::zero(); n];
    eval.apply_jac_ineq_t(&tmp, &mut ht);
    let rbar1: Vec<T> = (0..n).map(|i| beta1[i] + ht[i]).collect();
    let rbar2 = b3.to_vec();

    CondensedRhs {
        beta1,
        beta2,
        beta4: b4.to_vec(),
        b5: b5.to_vec(),
        b6: b6.to_vec(),
        rbar1,
        rbar2,
    }
}

/// Expands a condensed solution `(dx, dy)` of a generic right-hand side
/// back to the full direction.
pub fn expand_direction<T: Scalar>(
    eval: &KktEval<'_, T>,
    it: &Iterate<T>,
    rhs: &CondensedRhs<T>,
    dx: Vec<T>,
    dy: Vec<T>,
) -> Direction<T> {
    let n = eval.problem.n();
    let m_i = eval.problem.m_i();
    let bounded = eval.problem.bounded();
    let c = it.c_diag();
    let d_h = it.d_h_diag();
    let d_s = it.d_s();
    let mut hdx = vec![T::zero(); m_i];
    eval.apply_jac_ineq(&dx, &mut hdx);
    let mut dz = vec![T::zero(); m_i];
    let mut ds = vec![T::zero(); m_i];
    for j in 0..m_i {
        dz[j] = d_h[j] * (hdx[j] - rhs.beta4[j]) + c[j] * rhs.beta2[j];
        ds[j] = (rhs.beta2[j] - dz[j]) / (d_s[j] + it.delta_w);
    }
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

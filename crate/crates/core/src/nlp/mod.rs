//! Problem abstraction: callback-defined nonlinear programs of the form
//!
//! ```text
//! min f(x)   s.t.   g(x) = 0,   h(x) <= 0,   x_i >= 0 for flagged i
//! ```
//!
//! Sparse first derivatives come back in coordinate form over patterns fixed
//! at construction; the Hessian callback evaluates the Lagrangian Hessian
//! `W = hess f + sum_i y_i hess g_i + sum_j z_j hess h_j` (lower triangle).

mod check;
mod lift;
pub(crate) mod opf;
mod qp;
pub mod suite;

pub use check::{check_derivatives, DerivativeReport};
pub use lift::lift_equalities;
pub use qp::load_qp_json;
pub use suite::{builtin_suite, SuiteEntry};

use crate::scalar::Scalar;

#[derive(Debug, thiserror::Error)]
pub enum NlpError {
    #[error("{pointer}: {msg}")]
    Parse { pointer: String, msg: String },
    #[error("structural error: {0}")]
    Structure(String),
    #[error("non-finite value while evaluating {0}")]
    NonFinite(&'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coordinate sparsity pattern, parallel `rows`/`cols` arrays.
#[derive(Debug, Clone, Default)]
pub struct CooPattern {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl CooPattern {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Self {
        assert_eq!(rows.len(), cols.len());
        Self { rows, cols }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().copied().zip(self.cols.iter().copied())
    }
}

/// Primal point plus constraint multipliers, the arguments of the
/// Lagrangian Hessian.
#[derive(Debug, Clone)]
pub struct EvalPoint<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
}

impl<T: Scalar> EvalPoint<T> {
    pub fn is_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite())
            && self.y.iter().all(|v| v.is_finite())
            && self.z.iter().all(|v| v.is_finite())
    }
}

type ScalarFn<T> = Box<dyn Fn(&[T]) -> T + Send + Sync>;
type VecFn<T> = Box<dyn Fn(&[T], &mut [T]) + Send + Sync>;
type HessFn<T> = Box<dyn Fn(&[T], &[T], &[T], &mut [T]) + Send + Sync>;

/// Callback-defined nonlinear program with fixed sparsity.
pub struct NlpProblem<T> {
    name: String,
    n: usize,
    m_e: usize,
    m_i: usize,
    bounded: Vec<bool>,
    x0: Vec<T>,
    objective: ScalarFn<T>,
    gradient: VecFn<T>,
    eq: VecFn<T>,
    ineq: VecFn<T>,
    jac_eq_pattern: CooPattern,
    jac_eq: VecFn<T>,
    jac_ineq_pattern: CooPattern,
    jac_ineq: VecFn<T>,
    hess_pattern: CooPattern,
    hess: HessFn<T>,
}

impl<T: Scalar> NlpProblem<T> {
    pub fn builder(name: impl Into<String>, n: usize) -> NlpBuilder<T> {
        NlpBuilder::new(name.into(), n)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_e(&self) -> usize {
        self.m_e
    }

    pub fn m_i(&self) -> usize {
        self.m_i
    }

    pub fn bounded(&self) -> &[bool] {
        &self.bounded
    }

    pub fn num_bounded(&self) -> usize {
        self.bounded.iter().filter(|&&b| b).count()
    }

    /// Suggested starting point (the IPM projects bounded entries inward).
    pub fn x0(&self) -> &[T] {
        &self.x0
    }

    pub fn eval_objective(&self, x: &[T]) -> T {
        (self.objective)(x)
    }

    pub fn eval_gradient(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(out.len(), self.n);
        (self.gradient)(x, out)
    }

    pub fn eval_eq(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(out.len(), self.m_e);
        (self.eq)(x, out)
    }

    pub fn eval_ineq(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(out.len(), self.m_i);
        (self.ineq)(x, out)
    }

    pub fn jac_eq_pattern(&self) -> &CooPattern {
        &self.jac_eq_pattern
    }

    pub fn eval_jac_eq(&self, x: &[T], values: &mut [T]) {
        debug_assert_eq!(values.len(), self.jac_eq_pattern.len());
        (self.jac_eq)(x, values)
    }

    pub fn jac_ineq_pattern(&self) -> &CooPattern {
        &self.jac_ineq_pattern
    }

    pub fn eval_jac_ineq(&self, x: &[T], values: &mut [T]) {
        debug_assert_eq!(values.len(), self.jac_ineq_pattern.len());
        (self.jac_ineq)(x, values)
    }

    /// Lower-triangle pattern of the Lagrangian Hessian.
    pub fn hess_pattern(&self) -> &CooPattern {
        &self.hess_pattern
    }

    pub fn eval_hess(&self, x: &[T], y: &[T], z: &[T], values: &mut [T]) {
        debug_assert_eq!(values.len(), self.hess_pattern.len());
        (self.hess)(x, y, z, values)
    }

    pub fn eval_hess_at(&self, point: &EvalPoint<T>, values: &mut [T]) {
        self.eval_hess(&point.x, &point.y, &point.z, values)
    }

    /// Dense `m_e x n` equality Jacobian (row-major).
    pub fn jac_eq_dense(&self, x: &[T]) -> Vec<T> {
        let mut vals = vec![T::zero(); self.jac_eq_pattern.len()];
        self.eval_jac_eq(x, &mut vals);
        let mut dense = vec![T::zero(); self.m_e * self.n];
        for (k, (r, c)) in self.jac_eq_pattern.iter().enumerate() {
            dense[r * self.n + c] += vals[k];
        }
        dense
    }

    /// Dense `m_i x n` inequality Jacobian (row-major).
    pub fn jac_ineq_dense(&self, x: &[T]) -> Vec<T> {
        let mut vals = vec![T::zero(); self.jac_ineq_pattern.len()];
        self.eval_jac_ineq(x, &mut vals);
        let mut dense = vec![T::zero(); self.m_i * self.n];
        for (k, (r, c)) in self.jac_ineq_pattern.iter().enumerate() {
            dense[r * self.n + c] += vals[k];
        }
        dense
    }

    /// Dense symmetric Lagrangian Hessian (row-major `n x n`).
    pub fn hess_dense(&self, x: &[T], y: &[T], z: &[T]) -> Vec<T> {
        let mut vals = vec![T::zero(); self.hess_pattern.len()];
        self.eval_hess(x, y, z, &mut vals);
        let mut dense = vec![T::zero(); self.n * self.n];
        for (k, (r, c)) in self.hess_pattern.iter().enumerate() {
            dense[r * self.n + c] += vals[k];
            if r != c {
                dense[c * self.n + r] += vals[k];
            }
        }
        dense
    }

    /// Gradient of the Lagrangian `grad f + G^T y + H^T z` (no bound terms).
    pub fn lagrangian_gradient(&self, x: &[T], y: &[T], z: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.eval_gradient(x, &mut out);
        if self.m_e > 0 {
            let mut vals = vec![T::zero(); self.jac_eq_pattern.len()];
            self.eval_jac_eq(x, &mut vals);
            for (k, (r, c)) in self.jac_eq_pattern.iter().enumerate() {
                out[c] += vals[k] * y[r];
            }
        }
        if self.m_i > 0 {
            let mut vals = vec![T::zero(); self.jac_ineq_pattern.len()];
            self.eval_jac_ineq(x, &mut vals);
            for (k, (r, c)) in self.jac_ineq_pattern.iter().enumerate() {
                out[c] += vals[k] * z[r];
            }
        }
        out
    }
}

impl<T> std::fmt::Debug for NlpProblem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NlpProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m_e", &self.m_e)
            .field("m_i", &self.m_i)
            .finish()
    }
}

/// Builder for [`NlpProblem`]; unset constraint blocks default to empty.
pub struct NlpBuilder<T> {
    name: String,
    n: usize,
    bounded: Vec<bool>,
    x0: Option<Vec<T>>,
    objective: Option<ScalarFn<T>>,
    gradient: Option<VecFn<T>>,
    eq: Option<(usize, VecFn<T>, CooPattern, VecFn<T>)>,
    ineq: Option<(usize, VecFn<T>, CooPattern, VecFn<T>)>,
    hess: Option<(CooPattern, HessFn<T>)>,
}

impl<T: Scalar> NlpBuilder<T> {
    fn new(name: String, n: usize) -> Self {
        Self {
            name,
            n,
            bounded: vec![false; n],
            x0: None,
            objective: None,
            gradient: None,
            eq: None,
            ineq: None,
            hess: None,
        }
    }

    pub fn bounded(mut self, mask: Vec<bool>) -> Self {
        assert_eq!(mask.len(), self.n);
        self.bounded = mask;
        self
    }

    pub fn bound_all(mut self) -> Self {
        self.bounded = vec![true; self.n];
        self
    }

    pub fn start(mut self, x0: Vec<T>) -> Self {
        assert_eq!(x0.len(), self.n);
        self.x0 = Some(x0);
        self
    }

    pub fn objective<F, G>(mut self, f: F, grad: G) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
        G: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        self.objective = Some(Box::new(f));
        self.gradient = Some(Box::new(grad));
        self
    }

    pub fn equalities<F, J>(mut self, m_e: usize, eval: F, pattern: CooPattern, jac: J) -> Self
    where
        F: Fn(&[T], &mut [T]) + Send + Sync + 'static,
        J: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        self.eq = Some((m_e, Box::new(eval), pattern, Box::new(jac)));
        self
    }

    pub fn inequalities<F, J>(mut self, m_i: usize, eval: F, pattern: CooPattern, jac: J) -> Self
    where
        F: Fn(&[T], &mut [T]) + Send + Sync + 'static,
        J: Fn(&[T], &mut [T]) + Send + Sync + 'static,
    {
        self.ineq = Some((m_i, Box::new(eval), pattern, Box::new(jac)));
        self
    }

    pub fn hessian<H>(mut self, pattern: CooPattern, eval: H) -> Self
    where
        H: Fn(&[T], &[T], &[T], &mut [T]) + Send + Sync + 'static,
    {
        self.hess = Some((pattern, Box::new(eval)));
        self
    }

    pub fn build(self) -> NlpProblem<T> {
        let n = self.n;
        let (m_e, eq, jac_eq_pattern, jac_eq) = match self.eq {
            Some(parts) => parts,
            None => (
                0,
                Box::new(|_: &[T], _: &mut [T]| {}) as VecFn<T>,
                CooPattern::default(),
                Box::new(|_: &[T], _: &mut [T]| {}) as VecFn<T>,
            ),
        };
        let (m_i, ineq, jac_ineq_pattern, jac_ineq) = match self.ineq {
            Some(parts) => parts,
            None => (
                0,
                Box::new(|_: &[T], _: &mut [T]| {}) as VecFn<T>,
                CooPattern::default(),
                Box::new(|_: &[T], _: &mut [T]| {}) as VecFn<T>,
            ),
        };
        let (hess_pattern, hess) = self.hess.expect("hessian callback required");

        for (r, c) in jac_eq_pattern.iter() {
            assert!(r < m_e && c < n, "equality Jacobian pattern out of range");
        }
        for (r, c) in jac_ineq_pattern.iter() {
            assert!(r < m_i && c < n, "inequality Jacobian pattern out of range");
        }
        for (r, c) in hess_pattern.iter() {
            assert!(r < n && c <= r, "Hessian pattern must be lower triangular");
        }

        NlpProblem {
            name: self.name,
            n,
            m_e,
            m_i,
            bounded: self.bounded,
            x0: self.x0.unwrap_or_else(|| vec![T::zero(); n]),
            objective: self.objective.expect("objective required"),
            gradient: self.gradient.expect("gradient required"),
            eq,
            ineq,
            jac_eq_pattern,
            jac_eq,
            jac_ineq_pattern,
            jac_ineq,
            hess_pattern,
            hess,
        }
    }
}

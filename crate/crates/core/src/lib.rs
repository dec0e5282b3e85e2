//! Condensed-space interior-point solver for sparse nonlinear programs.
//!
//! The solver handles programs of the form
//!
//! ```text
//! min f(x)   subject to   g(x) = 0,  h(x) <= 0,  x_i >= 0 (flagged i)
//! ```
//!
//! and computes each Newton step through one of three interchangeable
//! condensed-space strategies: a direct factorization of the condensed
//! saddle system, a Schur-complement hybrid that factorizes an augmented
//! positive definite matrix and runs conjugate gradient on the equality
//! duals, and an equality-relaxation variant that reduces everything to a
//! single positive definite solve. All three sit on the same pivoting-free
//! sparse LDL^T kernel. A dense reference path and a spectrum/perturbation
//! diagnostics module cross-check the sparse machinery at desk scale.
//!
//! Numerical code is generic over the scalar type through [`Scalar`]
//! (`f32` or `f64`); the `*64` aliases below pin the common case.

pub mod dense;
pub mod diagnostics;
pub mod ipm;
pub mod kkt;
pub mod krylov;
pub mod nlp;
pub mod scalar;
pub mod sparse;
pub mod strategy;

pub use scalar::Scalar;

pub use krylov::{cg_solve, CgReport, LinearOperator};
pub use sparse::{
    amd_order, csc_from_triplets, default_pivot_floor, ldlt_factorize, ldlt_solve,
    richardson_refine, symbolic_analyze, Inertia, LdltFactor, RefineReport, SparseSymCsc,
    SymbolicPlan,
};

pub use ipm::{
    centrality_check, duality_measure, fraction_to_boundary, initialize, line_search, solve,
    update_barrier, IpmOptions, IpmResult, IpmStatus, IterationRecord,
};
pub use kkt::{
    apply_unreduced, assemble_condensed, build_rhs, recover_bound_steps, recover_inequality_steps,
    CondensedAssembler, CondensedBlocks, Direction, Iterate, KktRhs, UnreducedSystem,
};
pub use nlp::{
    builtin_suite, check_derivatives, lift_equalities, load_qp_json, CooPattern, EvalPoint,
    NlpProblem, SuiteEntry,
};
pub use strategy::{
    compute_step, hykkt_step, lifted_step, KktStrategy, StepResult, StepTimings, StrategyError,
    StrategyKind,
};

/// Double-precision aliases for the main entry points.
pub type SparseSymCsc64 = sparse::SparseSymCsc<f64>;
pub type LdltFactor64 = sparse::LdltFactor<f64>;
pub type NlpProblem64 = nlp::NlpProblem<f64>;
pub type Iterate64 = kkt::Iterate<f64>;
pub type IpmOptions64 = ipm::IpmOptions<f64>;
pub type IpmResult64 = ipm::IpmResult<f64>;

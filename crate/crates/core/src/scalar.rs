//! Scalar abstraction: the solver is generic over `f32` / `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the numerical kernels are generic over.
///
/// Everything downstream (sparse factorization, Krylov, the IPM loop)
/// only relies on this bound, so the whole stack instantiates for both
/// `f32` and `f64`. Default tolerances are stated in `f64` and converted
/// through [`Scalar::cst`].
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    #[inline]
    fn cst(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in scalar type")
    }

    /// Lossy view as `f64`, for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Infinity norm of a slice; 0 for the empty slice.
pub fn norm_inf<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

/// Euclidean norm of a slice.
pub fn norm_two<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// One norm of a slice.
pub fn norm_one<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x.abs()).sum::<T>()
}

/// Dot product of two slices of equal length.
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>()
}

/// `y += alpha * x`.
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

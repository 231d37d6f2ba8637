//! Scalar abstraction and small numeric helpers: every algorithm in this
//! library is generic over the floating-point type, so the whole chain can
//! run in `f32` or `f64`.

use nalgebra::{DMatrix, Dyn};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{Error, Result};

/// Floating-point scalar the simulator is generic over.
///
/// Combines the linear-algebra requirements (`nalgebra::RealField`, which also
/// makes `Complex<T>` a `ComplexField`) with the elementary-function and
/// conversion traits the signal-processing code needs. Implemented for `f32`
/// and `f64`.
pub trait Scalar:
    nalgebra::RealField
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Default
    + Copy
    + Send
    + Sync
    + 'static
{
    /// Conversion from an `f64` literal; rounds to the nearest representable
    /// value. All literals used by the library are finite.
    #[inline]
    fn of(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    /// Widening (or identity) conversion to `f64`, used for reporting.
    #[inline]
    fn to64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// True when `x` is an exact (normal) power of two, e.g. 0.25, 0.5, 1.0, 2.0.
///
/// Step sizes in the coordinate-descent solver must have this form so that
/// successive halvings remain exactly representable and realizable as bit
/// shifts in a fixed-point implementation.
pub fn is_power_of_two<T: Scalar>(x: T) -> bool {
    let x = x.to64();
    if !(x.is_finite() && x > 0.0) {
        return false;
    }
    let bits = x.to_bits();
    let mantissa = bits & ((1u64 << 52) - 1);
    let exponent = (bits >> 52) & 0x7ff;
    // Normal numbers with an all-zero mantissa are exactly 2^k.
    mantissa == 0 && exponent != 0
}

/// Cholesky factorization of a Hermitian positive-definite matrix that
/// actually fails on non-positive-definite input.
///
/// The underlying factorization takes complex square roots, so an indefinite
/// Hermitian matrix can slip through with an imaginary or non-finite pivot
/// instead of returning an error; this wrapper checks every pivot is a
/// strictly positive finite real.
pub fn cholesky_hermitian<T: Scalar>(
    m: DMatrix<Complex<T>>,
) -> Result<nalgebra::linalg::Cholesky<Complex<T>, Dyn>> {
    let chol = nalgebra::linalg::Cholesky::new(m).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l_dirty();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        let real_ok = d.re > T::zero() && Float::is_finite(d.re);
        let imag_ok = Float::abs(d.im) <= Float::abs(d.re) * T::of(1e-9);
        if !real_ok || !imag_ok {
            return Err(Error::NotPositiveDefinite);
        }
    }
    Ok(chol)
}

//! Gray-labeled 16-QAM mapping and hard demapping at unit average energy.
//!
//! Four bits per symbol: bits (0, 2) select the in-phase level, bits (1, 3)
//! the quadrature level. Per rail the pair maps 00 → +1, 01 → +3, 10 → −1,
//! 11 → −3, all scaled by `1/sqrt(10)`, so adjacent levels differ in exactly
//! one bit and the constellation has unit mean energy.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Bits per 16-QAM symbol.
pub const BITS_PER_SYMBOL: usize = 4;

/// Per-rail amplitude scale putting the constellation at unit mean energy.
pub fn qam16_scale<T: Scalar>() -> T {
    T::one() / Float::sqrt(T::of(10.0))
}

#[inline]
fn rail_level<T: Scalar>(sign_bit: u8, mag_bit: u8) -> T {
    let mag = if mag_bit == 0 { T::one() } else { T::of(3.0) };
    let signed = if sign_bit == 0 { mag } else { -mag };
    signed * qam16_scale::<T>()
}

/// Map a bit stream (4 bits per symbol) onto unit-energy 16-QAM symbols.
pub fn modulate_16qam<T: Scalar>(bits: &[u8]) -> Result<Vec<Complex<T>>> {
    if bits.len() % BITS_PER_SYMBOL != 0 {
        return Err(Error::Dimension(format!(
            "bit count {} is not a multiple of {BITS_PER_SYMBOL}",
            bits.len()
        )));
    }
    bits.chunks_exact(BITS_PER_SYMBOL)
        .map(|b| {
            for &bit in b {
                if bit > 1 {
                    return Err(Error::BadValue {
                        key: "bits".into(),
                        message: format!("bit value {bit} is not 0 or 1"),
                    });
                }
            }
            Ok(Complex::new(
                rail_level(b[0], b[2]),
                rail_level(b[1], b[3]),
            ))
        })
        .collect()
}

#[inline]
fn rail_bits<T: Scalar>(x: T) -> (u8, u8) {
    let inner_outer = T::of(2.0) * qam16_scale::<T>();
    let sign_bit = u8::from(x < T::zero());
    let mag_bit = u8::from(Float::abs(x) > inner_outer);
    (sign_bit, mag_bit)
}

/// Hard-demap one equalized symbol into its 4 label bits.
///
/// `scale` is the residual amplitude of the constellation in `x` (1 for an
/// unbiased equalizer output); decisions are taken on `x / scale`.
pub fn demap_symbol_qam16<T: Scalar>(x: Complex<T>, scale: T) -> [u8; 4] {
    let x = x.unscale(scale);
    let (b0, b2) = rail_bits(x.re);
    let (b1, b3) = rail_bits(x.im);
    [b0, b1, b2, b3]
}

/// Hard-demap a vector of equalized symbols (4 bits each, concatenated).
pub fn demap_qam16<T: Scalar>(xs: &[Complex<T>], scale: T) -> Vec<u8> {
    let mut bits = Vec::with_capacity(xs.len() * BITS_PER_SYMBOL);
    for &x in xs {
        bits.extend_from_slice(&demap_symbol_qam16(x, scale));
    }
    bits
}

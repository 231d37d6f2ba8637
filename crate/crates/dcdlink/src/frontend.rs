//! Low-resolution ADC front-end: per-antenna automatic gain control and
//! uniform midrise quantization of both rails.

use num_complex::Complex;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::num::Scalar;

/// Uniform midrise quantizer settings, per rail (I and Q independently).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerConfig<T> {
    /// Resolution in bits per rail, 1..=16.
    pub bits: u32,
    /// Clipping level as a multiple of the (unit) input rail deviation.
    pub clip_scale: T,
}

impl<T: Scalar> QuantizerConfig<T> {
    pub fn new(bits: u32, clip_scale: T) -> Result<Self> {
        let cfg = QuantizerConfig { bits, clip_scale };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 2-bit front end with the near-optimal clip factor for Gaussian input.
    pub fn default_adc() -> Self {
        QuantizerConfig {
            bits: 2,
            clip_scale: T::of(2.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=16).contains(&self.bits) {
            return Err(Error::BitWidth(self.bits));
        }
        if self.clip_scale <= T::zero() {
            return Err(Error::NonPositive {
                name: "clip_scale",
                value: self.clip_scale.to64(),
            });
        }
        Ok(())
    }

    /// Step size between reconstruction levels: `2 clip / 2^bits`.
    pub fn delta(&self) -> T {
        self.clip_scale * T::of(2.0 / (1u64 << self.bits) as f64)
    }

    /// Outermost reconstruction level, `(2^(bits-1) - 1/2)·delta` — equal to
    /// `clip - delta/2` — evaluated with the same expression the quantizer
    /// uses for interior levels, so saturated samples are exact fixed points
    /// of the law.
    pub fn max_level(&self) -> T {
        let top_step = T::of(((1u64 << (self.bits - 1)) - 1) as f64);
        let delta = self.delta();
        top_step * delta + delta * T::of(0.5)
    }
}

/// Gain `g` normalizing a sample block to unit per-rail power.
///
/// Power is measured about zero over both rails of the block; an all-zero
/// block has no meaningful gain and is rejected.
pub fn agc_gain<T: Scalar>(block: &[Complex<T>]) -> Result<T> {
    if block.is_empty() {
        return Err(Error::EmptyInput("gain-control block"));
    }
    let mut power = T::zero();
    for z in block {
        power += z.re * z.re + z.im * z.im;
    }
    let rail_power = power / T::of(2.0 * block.len() as f64);
    if rail_power == T::zero() {
        return Err(Error::SilentBlock);
    }
    Ok(T::one() / Float::sqrt(rail_power))
}

/// Midrise quantization of one rail: nearest level of
/// `{+-(2m-1) delta/2, m = 1..2^(bits-1)}`, saturating beyond the clip.
///
/// Ties at decision thresholds round away from zero on both signs, keeping the
/// law exactly odd-symmetric.
#[inline]
pub fn quantize_rail<T: Scalar>(x: T, delta: T, max_level: T) -> T {
    let steps = Float::floor(Float::abs(x) / delta);
    let mag = Float::min(steps * delta + delta * T::of(0.5), max_level);
    Float::copysign(mag, x)
}

/// Quantize both rails of every sample.
pub fn quantize<T: Scalar>(samples: &[Complex<T>], cfg: &QuantizerConfig<T>) -> Vec<Complex<T>> {
    let delta = cfg.delta();
    let max = cfg.max_level();
    samples
        .iter()
        .map(|z| Complex::new(quantize_rail(z.re, delta, max), quantize_rail(z.im, delta, max)))
        .collect()
}

/// Full front-end for one antenna's slot grid: measure the AGC gain, quantize
/// the gain-normalized samples, and rescale back to the input's units.
///
/// Returns the digitized grid `Q(g y)/g` together with the applied gain.
pub fn digitize<T: Scalar>(
    grid: &ResourceGrid<T>,
    cfg: &QuantizerConfig<T>,
) -> Result<(ResourceGrid<T>, T)> {
    cfg.validate()?;
    let g = agc_gain(grid.as_slice())?;
    let inv = T::one() / g;
    let delta = cfg.delta();
    let max = cfg.max_level();
    let mut out = grid.clone();
    for z in out.as_mut_slice() {
        *z = Complex::new(
            quantize_rail(z.re * g, delta, max) * inv,
            quantize_rail(z.im * g, delta, max) * inv,
        );
    }
    Ok((out, g))
}

/// Linear (least-squares) gain of the quantizer for a unit-variance Gaussian
/// rail: `E[x q(x)] / E[x^2] = delta (phi(0) + 2 sum_{m=1}^{2^(b-1)-1} phi(m delta))`
/// with `phi` the standard normal density.
///
/// The digitized signal decomposes as `q(x) = gamma x + d` with `d`
/// uncorrelated with `x`, so `gamma` scales the effective channel seen through
/// the ADC.
pub fn bussgang_gain<T: Scalar>(cfg: &QuantizerConfig<T>) -> T {
    let delta = cfg.delta().to64();
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = phi(0.0);
    for m in 1..(1u64 << (cfg.bits - 1)) {
        acc += 2.0 * phi(m as f64 * delta);
    }
    T::of(delta * acc)
}

/// Standard normal CDF.
fn normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

/// Input-referred distortion-to-signal power ratio of the quantizer for a
/// unit-variance Gaussian rail: with the decomposition `q(x) = gamma x + d`
/// (`d` uncorrelated with `x`), returns `E[d^2] / gamma^2`.
///
/// Useful for modelling the quantizer as an extra additive noise source when
/// the front end is driven at its nominal operating point.
pub fn distortion_factor<T: Scalar>(cfg: &QuantizerConfig<T>) -> T {
    let delta = cfg.delta().to64();
    let half_levels = 1u64 << (cfg.bits - 1);
    // One-sided second moment of the output: levels (m + 1/2)·delta over the
    // bins [m·delta, (m+1)·delta), the top bin extending to infinity.
    let mut second = 0.0;
    for m in 0..half_levels {
        let level = (m as f64 + 0.5) * delta;
        let lo = normal_cdf(m as f64 * delta);
        let hi = if m + 1 == half_levels {
            1.0
        } else {
            normal_cdf((m as f64 + 1.0) * delta)
        };
        second += level * level * (hi - lo);
    }
    let gamma2 = bussgang_gain(cfg).to64().powi(2);
    T::of((2.0 * second - gamma2) / gamma2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cfg(bits: u32, clip: f64) -> QuantizerConfig<f64> {
        QuantizerConfig::new(bits, clip).unwrap()
    }

    #[test]
    fn midrise_law_examples() {
        // bits=2, clip=1: levels +-0.25, +-0.75.
        let c = cfg(2, 1.0);
        let d = c.delta();
        let m = c.max_level();
        assert_abs_diff_eq!(d, 0.5);
        assert_abs_diff_eq!(m, 0.75);
        assert_abs_diff_eq!(quantize_rail(0.9, d, m), 0.75);
        assert_abs_diff_eq!(quantize_rail(0.3, d, m), 0.25);
        assert_abs_diff_eq!(quantize_rail(-0.3, d, m), -0.25);
        assert_abs_diff_eq!(quantize_rail(12.0, d, m), 0.75);
    }

    #[test]
    fn one_bit_is_a_sign_quantizer() {
        let c = cfg(1, 1.0);
        let d = c.delta();
        let m = c.max_level();
        for x in [-3.0, -0.4, -1e-12, 1e-9, 0.2, 9.0] {
            let q = quantize_rail(x, d, m);
            assert_abs_diff_eq!(q.abs(), 0.5);
            assert_eq!(q > 0.0, x > 0.0);
        }
    }

    proptest! {
        #[test]
        fn quantizer_is_idempotent(x in -5.0f64..5.0, bits in 1u32..=8, clip in 0.5f64..4.0) {
            let c = cfg(bits, clip);
            let q1 = quantize_rail(x, c.delta(), c.max_level());
            let q2 = quantize_rail(q1, c.delta(), c.max_level());
            prop_assert_eq!(q1, q2);
        }

        #[test]
        fn quantizer_is_odd_symmetric(x in -5.0f64..5.0, bits in 1u32..=8, clip in 0.5f64..4.0) {
            let c = cfg(bits, clip);
            let d = c.delta();
            let m = c.max_level();
            prop_assert_eq!(quantize_rail(-x, d, m), -quantize_rail(x, d, m));
        }

        #[test]
        fn quantizer_is_monotone(a in -5.0f64..5.0, b in -5.0f64..5.0, bits in 1u32..=8) {
            let c = cfg(bits, 2.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let d = c.delta();
            let m = c.max_level();
            prop_assert!(quantize_rail(lo, d, m) <= quantize_rail(hi, d, m));
        }

        #[test]
        fn distortion_is_bounded_inside_clip(x in -1.0f64..1.0, bits in 1u32..=8) {
            let c = cfg(bits, 1.0);
            let q = quantize_rail(x, c.delta(), c.max_level());
            prop_assert!((q - x).abs() <= c.delta() / 2.0 + 1e-15);
        }
    }

    #[test]
    fn agc_examples() {
        // Per-rail variance 4 -> gain 0.5.
        let block: Vec<Complex<f64>> = vec![Complex::new(2.0, -2.0); 64];
        assert_abs_diff_eq!(agc_gain(&block).unwrap(), 0.5);

        let unit: Vec<Complex<f64>> = vec![Complex::new(1.0, 1.0); 64];
        assert_abs_diff_eq!(agc_gain(&unit).unwrap(), 1.0);

        // Homogeneity: scaling the block by 10 scales the gain by 1/10.
        let scaled: Vec<Complex<f64>> = block.iter().map(|z| z * 10.0).collect();
        assert_abs_diff_eq!(agc_gain(&scaled).unwrap(), 0.05);

        let zeros: Vec<Complex<f64>> = vec![Complex::default(); 8];
        assert!(matches!(agc_gain(&zeros), Err(Error::SilentBlock)));
        assert!(matches!(
            agc_gain::<f64>(&[]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn digitize_rescales_to_input_units() {
        let mut grid = ResourceGrid::<f64>::zeros(8, 2);
        for (i, v) in grid.as_mut_slice().iter_mut().enumerate() {
            *v = Complex::new(0.3 * (i as f64 - 7.0), 0.1 * i as f64);
        }
        let c = cfg(2, 2.0);
        let (q, g) = digitize(&grid, &c).unwrap();
        let d = c.delta();
        let m = c.max_level();
        for (qi, xi) in q.as_slice().iter().zip(grid.as_slice()) {
            assert_abs_diff_eq!(qi.re * g, quantize_rail(xi.re * g, d, m), epsilon = 1e-12);
            assert_abs_diff_eq!(qi.im * g, quantize_rail(xi.im * g, d, m), epsilon = 1e-12);
        }
    }

    #[test]
    fn sixteen_bits_is_nearly_transparent() {
        let mut grid = ResourceGrid::<f64>::zeros(64, 4);
        let mut state = 1234u64;
        for v in grid.as_mut_slice() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let a = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            let b = ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0;
            *v = Complex::new(a, b);
        }
        let c = cfg(16, 2.0);
        let (q, g) = digitize(&grid, &c).unwrap();
        let step = c.delta() / g;
        for (qi, xi) in q.as_slice().iter().zip(grid.as_slice()) {
            assert!((qi.re - xi.re).abs() <= step);
            assert!((qi.im - xi.im).abs() <= step);
        }
    }

    #[test]
    fn linear_gain_frozen_values() {
        // 1 bit, clip 2: delta = 2, gamma = 2 phi(0) = sqrt(2/pi).
        let g1 = bussgang_gain(&cfg(1, 2.0));
        assert_abs_diff_eq!(g1, 0.7978845608028654, epsilon = 1e-12);

        // 2 bits, clip 2: delta = 1, gamma = phi(0) + 2 phi(1).
        let g2 = bussgang_gain(&cfg(2, 2.0));
        assert_abs_diff_eq!(g2, 0.8828837294397194, epsilon = 1e-12);

        // High resolution approaches a transparent front end.
        let g12 = bussgang_gain(&cfg(12, 4.0));
        assert!((g12 - 1.0).abs() < 1e-3, "gamma {g12}");
    }

    #[test]
    fn distortion_factor_closed_form_one_bit() {
        // 1 bit, clip 2: q in {-1, +1}, E[q^2] = 1, gamma^2 = 2/pi, so the
        // input-referred ratio is (1 - 2/pi)/(2/pi) = pi/2 - 1.
        let k1 = distortion_factor(&cfg(1, 2.0));
        assert_abs_diff_eq!(k1, std::f64::consts::FRAC_PI_2 - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn distortion_factor_matches_numeric_integration() {
        // Independent oracle: integrate E[(q(x) - gamma x)^2] for a standard
        // normal rail with the actual quantizer transfer function.
        for (bits, clip) in [(1u32, 2.0f64), (2, 2.0), (3, 2.5), (6, 3.0)] {
            let c = cfg(bits, clip);
            let gamma = bussgang_gain(&c);
            let (delta, max) = (c.delta(), c.max_level());
            let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
            let (n, hi) = (400_000usize, 10.0f64);
            let h = hi / n as f64;
            // Midpoint rule on (0, 10]; the integrand is even in x.
            let mut acc = 0.0;
            for i in 0..n {
                let x = (i as f64 + 0.5) * h;
                let err = quantize_rail(x, delta, max) - gamma * x;
                acc += err * err * phi(x) * h;
            }
            let numeric = 2.0 * acc / (gamma * gamma);
            let analytic = distortion_factor(&c);
            // Midpoint-rule accuracy is limited by the kinks at the
            // quantizer thresholds.
            assert_abs_diff_eq!(analytic, numeric, epsilon = 2e-5);
        }
    }

    #[test]
    fn distortion_factor_shrinks_with_resolution() {
        let ks: Vec<f64> = (1..=8).map(|b| distortion_factor(&cfg(b, 2.0))).collect();
        for w in ks.windows(2) {
            assert!(w[1] < w[0], "{ks:?}");
        }
        // At 2 bits the quantizer contributes about -8.7 dB of distortion.
        assert!((ks[1] - 0.1349).abs() < 1e-3, "{}", ks[1]);
    }

    #[test]
    fn f32_path_matches_f64() {
        let c64 = cfg(2, 2.0);
        let c32 = QuantizerConfig::<f32>::new(2, 2.0).unwrap();
        assert_abs_diff_eq!(bussgang_gain(&c32) as f64, bussgang_gain(&c64), epsilon = 1e-6);
        assert_abs_diff_eq!(
            quantize_rail(0.7f32, c32.delta(), c32.max_level()) as f64,
            quantize_rail(0.7f64, c64.delta(), c64.max_level()),
            epsilon = 1e-6
        );
    }
}

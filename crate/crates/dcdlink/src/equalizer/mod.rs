//! Multi-user detection per subcarrier: correlation (Gram) and matched-filter
//! front products, the equivalent real expansion, the bounded
//! coordinate-descent detector, the linear MMSE baseline, and hard QAM
//! demapping.

pub mod dcd;
pub mod qam;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Float;

use crate::complexity::{inversion_ops, matvec_ops, regularize_ops, OpCount};
use crate::error::{Error, Result};
use crate::num::Scalar;

pub use dcd::{dcd_bound, DcdLedger, DcdOutcome, DcdProblem, DcdStep};
pub use qam::{demap_qam16, demap_symbol_qam16, modulate_16qam, qam16_scale, BITS_PER_SYMBOL};

/// Receive-correlation matrix `G = H^H H` with its operation tally.
///
/// Only the diagonal and strict lower triangle are computed; the upper
/// triangle is mirrored by conjugation, which is what the tally assumes:
/// each diagonal entry is a real norm accumulation (2·N_rx multiplies,
/// 2·N_rx−1 additions), each strict-lower entry a complex dot product
/// (4·N_rx multiplies, 4·N_rx−2 additions).
pub fn gram<T: Scalar>(h: &DMatrix<Complex<T>>) -> (DMatrix<Complex<T>>, OpCount) {
    let (n_rx, n_users) = h.shape();
    let mut g = DMatrix::from_element(n_users, n_users, Complex::default());
    let mut ops = OpCount::default();
    for j in 0..n_users {
        let mut acc = T::zero();
        for r in 0..n_rx {
            let v = h[(r, j)];
            acc += v.re * v.re + v.im * v.im;
        }
        g[(j, j)] = Complex::new(acc, T::zero());
        ops += OpCount::new(2 * n_rx as u64 - 1, 2 * n_rx as u64);
        for i in (j + 1)..n_users {
            let mut acc = Complex::default();
            for r in 0..n_rx {
                acc += h[(r, i)].conj() * h[(r, j)];
            }
            g[(i, j)] = acc;
            g[(j, i)] = acc.conj();
            ops += OpCount::new(4 * n_rx as u64 - 2, 4 * n_rx as u64);
        }
    }
    (g, ops)
}

/// Matched filter `H^H y` with its operation tally (one complex dot product
/// per user).
pub fn matched_filter<T: Scalar>(
    h: &DMatrix<Complex<T>>,
    y: &DVector<Complex<T>>,
) -> Result<(DVector<Complex<T>>, OpCount)> {
    let (n_rx, n_users) = h.shape();
    if y.len() != n_rx {
        return Err(Error::Dimension(format!(
            "length-{} observation for {n_rx} receive antennas",
            y.len()
        )));
    }
    let mut v = DVector::from_element(n_users, Complex::default());
    let mut ops = OpCount::default();
    for u in 0..n_users {
        let mut acc = Complex::default();
        for r in 0..n_rx {
            acc += h[(r, u)].conj() * y[r];
        }
        v[u] = acc;
        ops += OpCount::new(4 * n_rx as u64 - 2, 4 * n_rx as u64);
    }
    Ok((v, ops))
}

/// Expand a Hermitian system into its equivalent real form:
/// `A = [[Re G, −Im G], [Im G, Re G]]`, `b = [Re v; Im v]`.
///
/// `A` is built from the lower triangle of `G` so it comes out bitwise
/// symmetric. Rejects a non-Hermitian `G` (tolerance `1e-9` relative to the
/// largest diagonal magnitude).
pub fn realify<T: Scalar>(
    g: &DMatrix<Complex<T>>,
    v: &DVector<Complex<T>>,
) -> Result<(DMatrix<T>, DVector<T>)> {
    let n = g.nrows();
    if g.ncols() != n || v.len() != n {
        return Err(Error::Dimension(format!(
            "{}x{} matrix with length-{} vector",
            g.nrows(),
            g.ncols(),
            v.len()
        )));
    }
    let scale = (0..n)
        .map(|i| Float::abs(g[(i, i)].re))
        .fold(T::one(), |a, b| if b > a { b } else { a });
    let tol = T::of(1e-9) * scale;
    for i in 0..n {
        for j in 0..=i {
            let d = g[(i, j)] - g[(j, i)].conj();
            if Float::abs(d.re) > tol || Float::abs(d.im) > tol {
                return Err(Error::NotHermitian { row: i, col: j });
            }
        }
    }
    let mut a = DMatrix::from_element(2 * n, 2 * n, T::zero());
    for i in 0..n {
        for j in 0..=i {
            let re = g[(i, j)].re;
            let im = if i == j { T::zero() } else { g[(i, j)].im };
            a[(i, j)] = re;
            a[(j, i)] = re;
            a[(n + i, n + j)] = re;
            a[(n + j, n + i)] = re;
            a[(n + i, j)] = im;
            a[(j, n + i)] = im;
            a[(n + j, i)] = -im;
            a[(i, n + j)] = -im;
        }
    }
    let mut b = DVector::from_element(2 * n, T::zero());
    for i in 0..n {
        b[i] = v[i].re;
        b[n + i] = v[i].im;
    }
    Ok((a, b))
}

/// Fold a real solution of the expanded system back into complex symbols.
pub fn recombine<T: Scalar>(x: &DVector<T>) -> Result<DVector<Complex<T>>> {
    if x.len() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "real solution of odd length {}",
            x.len()
        )));
    }
    let n = x.len() / 2;
    Ok(DVector::from_fn(n, |i, _| Complex::new(x[i], x[n + i])))
}

/// Linear MMSE detection `x̂ = (G + reg·I)^{-1} v` via Cholesky
/// factorization.
///
/// The tally charges the conventional decomposition: diagonal loading (2N
/// real additions), the inversion (calibrated constants), and applying the
/// inverse to the vector — regardless of the factorization actually used.
/// Normalization/unbiasing is uncounted by the same convention.
pub fn mmse_detect<T: Scalar>(
    g: &DMatrix<Complex<T>>,
    v: &DVector<Complex<T>>,
    reg: T,
) -> Result<(DVector<Complex<T>>, OpCount)> {
    let n = g.nrows();
    if g.ncols() != n || v.len() != n {
        return Err(Error::Dimension(format!(
            "{}x{} matrix with length-{} vector",
            g.nrows(),
            g.ncols(),
            v.len()
        )));
    }
    if !(reg > T::zero()) {
        return Err(Error::NonPositive {
            name: "reg",
            value: reg.to64(),
        });
    }
    let mut m = g.clone();
    for i in 0..n {
        m[(i, i)] += Complex::new(reg, T::zero());
    }
    let chol = crate::num::cholesky_hermitian(m)?;
    let x = chol.solve(v);
    let ops = regularize_ops(n) + inversion_ops(n) + matvec_ops(n);
    Ok((x, ops))
}

/// Diagonal of `(G + reg·I)^{-1} G`: the per-user amplitude bias of the MMSE
/// detector, used to rescale symbol estimates before demapping. Uncounted
/// (normalization is outside the complexity tallies).
pub fn mmse_bias_factors<T: Scalar>(g: &DMatrix<Complex<T>>, reg: T) -> Result<Vec<T>> {
    let n = g.nrows();
    if !(reg > T::zero()) {
        return Err(Error::NonPositive {
            name: "reg",
            value: reg.to64(),
        });
    }
    let mut m = g.clone();
    for i in 0..n {
        m[(i, i)] += Complex::new(reg, T::zero());
    }
    let chol = crate::num::cholesky_hermitian(m)?;
    let z = chol.solve(g);
    Ok((0..n).map(|i| z[(i, i)].re).collect())
}

/// Parameters of the bounded coordinate-descent detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdOptions<T> {
    /// Initial step size (power of two, at most `bound`).
    pub step: T,
    /// Box bound on each rail of each symbol estimate.
    pub bound: T,
    /// Accepted-update budget (checked after each pass).
    pub max_updates: u64,
    /// Step-halving budget.
    pub max_halvings: u32,
}

impl<T: Scalar> Default for DcdOptions<T> {
    fn default() -> Self {
        let bound = default_box_bound::<T>();
        DcdOptions {
            step: default_step_for(bound),
            bound,
            max_updates: DEFAULT_MAX_UPDATES,
            max_halvings: DEFAULT_MAX_HALVINGS,
        }
    }
}

/// Default accepted-update budget: effectively unlimited, so the halving
/// budget governs termination.
pub const DEFAULT_MAX_UPDATES: u64 = u64::MAX;

/// Default step-halving budget.
pub const DEFAULT_MAX_HALVINGS: u32 = 8;

/// Box bound tightly enclosing unit-energy 16-QAM: the outer rail level
/// plus one ulp of headroom, so constellation points themselves are
/// admissible. (In `f32` the rounding of the headroom may land exactly on
/// the outer level; decisions are unaffected.)
pub fn default_box_bound<T: Scalar>() -> T {
    let corner = 3.0 * qam16_scale::<f64>();
    T::of(f64::from_bits(corner.to_bits() + 1))
}

/// Largest power of two not exceeding `bound` — the recommended initial
/// step.
pub fn default_step_for<T: Scalar>(bound: T) -> T {
    T::of(bound.to64().log2().floor().exp2())
}

/// Output of one per-subcarrier detection: complex symbol estimates plus,
/// for the coordinate-descent path, the residual and operation ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerOutput<T> {
    pub symbols: DVector<Complex<T>>,
    pub residual: Option<DVector<T>>,
    pub ledger: Option<DcdLedger>,
}

/// Detect one subcarrier with bounded coordinate descent: expand `(G, v)` to
/// the real form, descend, and fold the solution back to complex symbols.
pub fn detect_dcd<T: Scalar>(
    g: &DMatrix<Complex<T>>,
    v: &DVector<Complex<T>>,
    opts: &DcdOptions<T>,
) -> Result<EqualizerOutput<T>> {
    let (a, b) = realify(g, v)?;
    let problem = DcdProblem {
        a,
        b,
        step: opts.step,
        bound: opts.bound,
        max_updates: opts.max_updates,
        max_halvings: opts.max_halvings,
        record_trace: false,
    };
    let out = dcd_bound(&problem)?;
    Ok(EqualizerOutput {
        symbols: recombine(&out.x)?,
        residual: Some(out.residual),
        ledger: Some(out.ledger),
    })
}

/// Detect one subcarrier with the linear MMSE baseline, including the
/// (uncounted) per-user bias correction before demapping.
pub fn detect_mmse<T: Scalar>(
    g: &DMatrix<Complex<T>>,
    v: &DVector<Complex<T>>,
    reg: T,
) -> Result<EqualizerOutput<T>> {
    let (mut x, _ops) = mmse_detect(g, v, reg)?;
    let bias = mmse_bias_factors(g, reg)?;
    for (xi, &beta) in x.iter_mut().zip(&bias) {
        if beta > T::zero() {
            *xi = xi.unscale(beta);
        }
    }
    Ok(EqualizerOutput {
        symbols: x,
        residual: None,
        ledger: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_complex_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex<f64>> {
        let mut rng = seeding::rng(seed, &[0xE]);
        DMatrix::from_fn(rows, cols, |_, _| {
            Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    fn random_complex_vector(len: usize, seed: u64) -> DVector<Complex<f64>> {
        let mut rng = seeding::rng(seed, &[0xF]);
        DVector::from_fn(len, |_, _| {
            Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    #[test]
    fn gram_of_identity_is_identity() {
        let h = DMatrix::<Complex<f64>>::identity(8, 8);
        let (g, _) = gram(&h);
        assert_eq!(g, DMatrix::identity(8, 8));
    }

    #[test]
    fn gram_counts_match_the_reference_size() {
        let h = random_complex_matrix(64, 8, 1);
        let (_, ops) = gram(&h);
        assert_eq!(ops, OpCount::new(8128, 8192));
        assert_eq!(ops, crate::complexity::gram_ops(64, 8));
    }

    #[test]
    fn gram_matches_the_naive_product() {
        let h = random_complex_matrix(4, 2, 2);
        let (g, _) = gram(&h);
        let naive = h.adjoint() * &h;
        for i in 0..2 {
            for j in 0..2 {
                assert!((g[(i, j)] - naive[(i, j)]).norm() < 1e-12);
            }
        }
        // Hermitian bitwise by construction.
        assert_eq!(g[(0, 1)], g[(1, 0)].conj());
    }

    #[test]
    fn matched_filter_identity_passes_through() {
        let h = DMatrix::<Complex<f64>>::identity(5, 5);
        let y = random_complex_vector(5, 3);
        let (v, _) = matched_filter(&h, &y).unwrap();
        for i in 0..5 {
            assert!((v[i] - y[i]).norm() < 1e-15);
        }
    }

    #[test]
    fn matched_filter_counts_match_the_reference_size() {
        let h = random_complex_matrix(64, 8, 4);
        let y = random_complex_vector(64, 5);
        let (_, ops) = matched_filter(&h, &y).unwrap();
        assert_eq!(ops, OpCount::new(2032, 2048));
        let naive = h.adjoint() * &y;
        let (v, _) = matched_filter(&h, &y).unwrap();
        for i in 0..8 {
            assert!((v[i] - naive[i]).norm() < 1e-9);
        }
        assert!(matched_filter(&h, &random_complex_vector(63, 6)).is_err());
    }

    #[test]
    fn realify_of_a_real_symmetric_matrix_is_block_diagonal() {
        let g = DMatrix::from_row_slice(2, 2, &[
            Complex::new(2.0, 0.0),
            Complex::new(0.5, 0.0),
            Complex::new(0.5, 0.0),
            Complex::new(3.0, 0.0),
        ]);
        let v = DVector::from_vec(vec![Complex::new(1.0, -1.0), Complex::new(0.0, 2.0)]);
        let (a, b) = realify(&g, &v).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a[(i, j)], g[(i, j)].re);
                assert_eq!(a[(2 + i, 2 + j)], g[(i, j)].re);
                assert_eq!(a[(2 + i, j)], 0.0);
                assert_eq!(a[(i, 2 + j)], 0.0);
            }
        }
        assert_eq!(b.as_slice(), &[1.0, 0.0, -1.0, 2.0]);
    }

    #[test]
    fn realify_places_the_imaginary_blocks_with_opposite_signs() {
        let g = DMatrix::from_row_slice(2, 2, &[
            Complex::new(2.0, 0.0),
            Complex::new(0.0, 1.0),
            Complex::new(0.0, -1.0),
            Complex::new(2.0, 0.0),
        ]);
        let v = DVector::from_vec(vec![Complex::new(0.0, 0.0); 2]);
        let (a, _) = realify(&g, &v).unwrap();
        // −Im G in the upper-right block, +Im G in the lower-left.
        assert_eq!(a[(0, 3)], -1.0);
        assert_eq!(a[(1, 2)], 1.0);
        assert_eq!(a[(2, 1)], 1.0);
        assert_eq!(a[(3, 0)], -1.0);
        assert_eq!(a.transpose(), a);
    }

    #[test]
    fn realified_solve_equals_the_complex_solve() {
        let h = random_complex_matrix(6, 3, 7);
        let (g, _) = gram(&h);
        let v = random_complex_vector(3, 8);
        let (a, b) = realify(&g, &v).unwrap();
        let x_real = a.clone().lu().solve(&b).expect("well conditioned");
        let x = recombine(&x_real).unwrap();
        let oracle = g.clone().lu().solve(&v).expect("well conditioned");
        for i in 0..3 {
            assert!((x[i] - oracle[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn non_hermitian_input_is_rejected() {
        let mut g = DMatrix::from_element(2, 2, Complex::new(1.0, 0.0));
        g[(0, 1)] = Complex::new(0.3, 0.2);
        g[(1, 0)] = Complex::new(0.3, 0.2); // should be the conjugate
        let v = DVector::from_vec(vec![Complex::new(0.0, 0.0); 2]);
        assert!(matches!(
            realify(&g, &v),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn mmse_of_identity_halves_the_input() {
        let g = DMatrix::<Complex<f64>>::identity(4, 4);
        let v = random_complex_vector(4, 9);
        let (x, _) = mmse_detect(&g, &v, 1.0).unwrap();
        for i in 0..4 {
            assert!((x[i] - v[i].unscale(2.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn mmse_counts_follow_the_charged_decomposition() {
        let h = random_complex_matrix(64, 8, 10);
        let (g, _) = gram(&h);
        let v = random_complex_vector(8, 11);
        let (_, ops) = mmse_detect(&g, &v, 1.0).unwrap();
        assert_eq!(ops, OpCount::new(16 + 1700 + 240, 1900 + 256));
    }

    #[test]
    fn mmse_matches_a_dense_solver_oracle() {
        let h = random_complex_matrix(7, 4, 12);
        let (g, _) = gram(&h);
        let v = random_complex_vector(4, 13);
        let reg = 0.37;
        let (x, _) = mmse_detect(&g, &v, reg).unwrap();
        let mut m = g.clone();
        for i in 0..4 {
            m[(i, i)] += Complex::new(reg, 0.0);
        }
        let oracle = m.try_inverse().expect("pd") * &v;
        for i in 0..4 {
            assert!((x[i] - oracle[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn mmse_rejects_bad_inputs() {
        let g = DMatrix::<Complex<f64>>::identity(3, 3);
        let v = random_complex_vector(3, 14);
        assert!(mmse_detect(&g, &v, 0.0).is_err());
        let neg = -DMatrix::<Complex<f64>>::identity(3, 3) * Complex::new(2.0, 0.0);
        assert!(matches!(
            mmse_detect(&neg, &v, 0.5),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn bias_factors_unbias_the_identity_case() {
        let g = DMatrix::<Complex<f64>>::identity(4, 4);
        let bias = mmse_bias_factors(&g, 1.0).unwrap();
        for &b in &bias {
            assert_abs_diff_eq!(b, 0.5, epsilon = 1e-14);
        }
        // detect_mmse applies the correction: identity channel returns v.
        let v = random_complex_vector(4, 15);
        let out = detect_mmse(&g, &v, 1.0).unwrap();
        for i in 0..4 {
            assert!((out.symbols[i] - v[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn default_box_admits_the_whole_constellation() {
        let bound = default_box_bound::<f64>();
        let step = default_step_for(bound);
        assert_eq!(step, 0.5);
        assert!(crate::num::is_power_of_two(step));
        for label in 0u8..16 {
            let bits = [(label >> 3) & 1, (label >> 2) & 1, (label >> 1) & 1, label & 1];
            let s = modulate_16qam::<f64>(&bits).unwrap()[0];
            assert!(s.re.abs() <= bound && s.im.abs() <= bound);
        }
        assert!(bound < 0.94869);
    }

    #[test]
    fn dcd_detection_recovers_noiseless_symbols() {
        // Well-conditioned 16×4 system, noiseless: coordinate descent with a
        // generous halving budget must land within demap distance of the
        // transmitted constellation points.
        let h = random_complex_matrix(16, 4, 16);
        let bits: Vec<u8> = {
            let mut rng = seeding::rng(17, &[]);
            (0..16).map(|_| rng.random_range(0..2) as u8).collect()
        };
        let sym = modulate_16qam::<f64>(&bits).unwrap();
        let x_true = DVector::from_vec(sym.clone());
        let y = &h * &x_true;
        let (g, _) = gram(&h);
        let (v, _) = matched_filter(&h, &y).unwrap();
        let opts = DcdOptions {
            max_halvings: 20,
            ..DcdOptions::default()
        };
        let out = detect_dcd(&g, &v, &opts).unwrap();
        let recovered = demap_qam16(out.symbols.as_slice(), 1.0);
        assert_eq!(recovered, bits);
        let ledger = out.ledger.unwrap();
        assert_eq!(ledger.multiplications, 0);
        assert!(ledger.accepted_updates > 0);
    }
}

//! Per-user channel estimation: least-squares pilot despreading, then a
//! separable 2×1D MMSE clean-up — model-based interpolation/smoothing across
//! frequency and plain averaging across the pilot-bearing OFDM symbols.
//!
//! The frequency stage is banded: each output subcarrier uses only the `K_C`
//! nearest pilot observations, which keeps the per-row solve small while
//! reproducing the dense estimator exactly when `K_C` covers all pilots.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::channel::correlation_at_lag;
use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::num::Scalar;
use crate::refsig::PilotPattern;

/// Statistical side information handed to the estimator.
///
/// The simulator feeds ground-truth values; overriding them models an
/// estimator working from mismatched statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorModel<T> {
    /// Assumed RMS delay spread in seconds.
    pub tau_rms: T,
    /// Subcarrier spacing in Hz.
    pub delta_f: T,
    /// Assumed per-user SNR in dB (sets the regularizing noise term).
    pub snr_db: T,
    /// Band limit: pilots consulted per output subcarrier.
    pub k_c: usize,
}

/// Despread pilot observations on the full vectorized grid.
///
/// Entries off the pilot set are exactly zero by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RawPilotEstimate<T> {
    pattern: PilotPattern,
    full: Vec<Complex<T>>,
}

impl<T: Scalar> RawPilotEstimate<T> {
    /// Assemble from one pilot vector per pilot symbol (ascending subcarrier
    /// order, `pilots_per_symbol` entries each).
    pub fn from_pilot_vectors(pattern: PilotPattern, per_symbol: &[Vec<Complex<T>>]) -> Result<Self> {
        pattern.validate()?;
        if per_symbol.len() != pattern.num_dmrs_symbols {
            return Err(Error::Dimension(format!(
                "{} pilot vectors for {} pilot symbols",
                per_symbol.len(),
                pattern.num_dmrs_symbols
            )));
        }
        let kp = pattern.pilots_per_symbol();
        let mut full = vec![Complex::default(); pattern.n_sc * pattern.n_sym];
        for (d, v) in per_symbol.iter().enumerate() {
            if v.len() != kp {
                return Err(Error::Dimension(format!(
                    "pilot vector of length {}, expected {kp}",
                    v.len()
                )));
            }
            let sym = pattern.ell0 + d;
            for (j, sc) in pattern.pilot_subcarriers().enumerate() {
                full[sym * pattern.n_sc + sc] = v[j];
            }
        }
        Ok(RawPilotEstimate { pattern, full })
    }

    /// The vectorized (subcarrier-fastest) observation vector, zero off the
    /// pilot set.
    pub fn full(&self) -> &[Complex<T>] {
        &self.full
    }

    pub fn pattern(&self) -> &PilotPattern {
        &self.pattern
    }

    /// Pilot observations of the `d`-th pilot symbol, ascending subcarrier.
    pub fn pilot_vector(&self, d: usize) -> Vec<Complex<T>> {
        let sym = self.pattern.ell0 + d;
        self.pattern
            .pilot_subcarriers()
            .map(|sc| self.full[sym * self.pattern.n_sc + sc])
            .collect()
    }
}

/// Despread the receive grid with one layer's known pilots.
///
/// On every pilot resource element `p` of the pattern the estimate is
/// `y_p * conj(a_p)`; everywhere else zero. Pilots must be unit modulus so
/// conjugate multiplication equals division.
pub fn ls_pilot_estimate<T: Scalar>(
    y: &ResourceGrid<T>,
    a: &ResourceGrid<T>,
    pattern: &PilotPattern,
) -> Result<RawPilotEstimate<T>> {
    pattern.validate()?;
    y.check_same_shape(a)?;
    if y.n_sc() != pattern.n_sc || y.n_sym() != pattern.n_sym {
        return Err(Error::GridShape {
            want_sc: pattern.n_sc,
            want_sym: pattern.n_sym,
            got_sc: y.n_sc(),
            got_sym: y.n_sym(),
        });
    }
    let mut full = vec![Complex::default(); pattern.n_sc * pattern.n_sym];
    for idx in pattern.vec_indices() {
        let pilot = a.as_slice()[idx];
        let modulus = pilot.norm().to64();
        if (modulus - 1.0).abs() > 1e-4 {
            return Err(Error::NonUnitPilot {
                index: idx,
                modulus,
            });
        }
        full[idx] = y.as_slice()[idx] * pilot.conj();
    }
    Ok(RawPilotEstimate {
        pattern: *pattern,
        full,
    })
}

/// One banded row of the frequency interpolator: `taps` apply to the pilot
/// vector starting at pilot index `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow<T> {
    pub start: usize,
    pub taps: Vec<Complex<T>>,
}

/// MMSE frequency interpolation/smoothing matrix in banded form, one row per
/// output subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqInterpolator<T> {
    n_sc: usize,
    pilot_sc: Vec<usize>,
    rows: Vec<BandRow<T>>,
}

impl<T: Scalar> FreqInterpolator<T> {
    /// Interpolate one pilot symbol's observations to every subcarrier.
    pub fn apply(&self, pilots: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if pilots.len() != self.pilot_sc.len() {
            return Err(Error::Dimension(format!(
                "{} pilot observations for {} pilot subcarriers",
                pilots.len(),
                self.pilot_sc.len()
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                let mut acc = Complex::default();
                for (t, p) in row.taps.iter().zip(&pilots[row.start..]) {
                    acc += t * p;
                }
                acc
            })
            .collect())
    }

    /// Expand to the dense `n_sc x n_pilots` operator (for tests/analysis).
    pub fn to_dense(&self) -> DMatrix<Complex<T>> {
        let mut m = DMatrix::from_element(self.n_sc, self.pilot_sc.len(), Complex::default());
        for (k, row) in self.rows.iter().enumerate() {
            for (j, t) in row.taps.iter().enumerate() {
                m[(k, row.start + j)] = *t;
            }
        }
        m
    }

    /// Output dimension (subcarriers).
    pub fn n_sc(&self) -> usize {
        self.n_sc
    }

    /// Pilot subcarrier positions the interpolator consumes.
    pub fn pilot_subcarriers(&self) -> &[usize] {
        &self.pilot_sc
    }
}

/// Build the banded MMSE frequency interpolator.
///
/// Row `k` solves the Wiener equation on the `K_C` pilots nearest subcarrier
/// `k`: `row = r_k (R_pp + sigma^2 I)^{-1}` with correlations from the
/// single-pole delay-profile model. With `snr_db = +inf` the noise term
/// vanishes; that is only valid while the pilot correlation matrix stays
/// well conditioned.
pub fn build_af<T: Scalar>(
    pattern: &PilotPattern,
    model: &EstimatorModel<T>,
) -> Result<FreqInterpolator<T>> {
    pattern.validate()?;
    let pilot_sc: Vec<usize> = pattern.pilot_subcarriers().collect();
    let kp = pilot_sc.len();
    if model.k_c == 0 || model.k_c > kp {
        return Err(Error::Config(format!(
            "band limit {} outside 1..={kp}",
            model.k_c
        )));
    }
    if model.tau_rms < T::zero() {
        return Err(Error::NonPositive {
            name: "tau_rms",
            value: model.tau_rms.to64(),
        });
    }
    let sigma2 = T::of(10f64.powf(-model.snr_db.to64() / 10.0));
    let kc = model.k_c;
    let rho = |d: i64| correlation_at_lag(model.tau_rms, model.delta_f, d);

    let mut rows = Vec::with_capacity(pattern.n_sc);
    let mut order: Vec<usize> = (0..kp).collect();
    for k in 0..pattern.n_sc {
        // The K_C pilots nearest k (ties toward the lower index) form a
        // contiguous window because pilots are uniformly spaced.
        order.sort_by_key(|&j| ((pilot_sc[j] as i64 - k as i64).abs(), j as i64));
        let start = order[..kc].iter().copied().min().expect("kc >= 1");
        let end = order[..kc].iter().copied().max().expect("kc >= 1");
        debug_assert_eq!(end - start + 1, kc, "pilot window must be contiguous");

        let m = DMatrix::from_fn(kc, kc, |i, j| {
            let mut v = rho(pilot_sc[start + i] as i64 - pilot_sc[start + j] as i64);
            if i == j {
                v += Complex::new(sigma2, T::zero());
            }
            v
        });
        let rhs = DVector::from_fn(kc, |j, _| {
            rho(k as i64 - pilot_sc[start + j] as i64).conj()
        });
        let chol = crate::num::cholesky_hermitian(m)?;
        let z = chol.solve(&rhs);
        rows.push(BandRow {
            start,
            taps: z.iter().map(|v| v.conj()).collect(),
        });
    }
    Ok(FreqInterpolator {
        n_sc: pattern.n_sc,
        pilot_sc,
        rows,
    })
}

/// Time-direction weights: a uniform average over the pilot symbols, applied
/// identically to every output OFDM symbol (zero-Doppler assumption).
pub fn build_at<T: Scalar>(pattern: &PilotPattern) -> Vec<T> {
    vec![
        T::one() / T::of(pattern.num_dmrs_symbols as f64);
        pattern.num_dmrs_symbols
    ]
}

/// The separable estimator: frequency interpolator plus time weights.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpolatorBank<T> {
    pub pattern: PilotPattern,
    pub freq: FreqInterpolator<T>,
    pub time: Vec<T>,
}

impl<T: Scalar> InterpolatorBank<T> {
    pub fn build(pattern: &PilotPattern, model: &EstimatorModel<T>) -> Result<Self> {
        Ok(InterpolatorBank {
            pattern: *pattern,
            freq: build_af(pattern, model)?,
            time: build_at(pattern),
        })
    }
}

/// Channel estimate over the slot.
///
/// The time stage averages the pilot symbols with identical weights for every
/// output symbol, so the estimate is one frequency profile replicated across
/// the slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate<T> {
    pattern: PilotPattern,
    freq: Vec<Complex<T>>,
    raw: RawPilotEstimate<T>,
}

impl<T: Scalar> ChannelEstimate<T> {
    /// Estimated response at subcarrier `k` (any OFDM symbol).
    #[inline]
    pub fn at(&self, k: usize) -> Complex<T> {
        self.freq[k]
    }

    /// Per-subcarrier estimate.
    pub fn freq(&self) -> &[Complex<T>] {
        &self.freq
    }

    /// The despread pilot observations this estimate was built from.
    pub fn raw(&self) -> &RawPilotEstimate<T> {
        &self.raw
    }

    /// Expand to a full slot grid (every symbol holds the same profile).
    pub fn grid(&self) -> ResourceGrid<T> {
        let mut g = ResourceGrid::zeros(self.pattern.n_sc, self.pattern.n_sym);
        for sym in 0..self.pattern.n_sym {
            g.symbol_mut(sym).copy_from_slice(&self.freq);
        }
        g
    }
}

/// Run the separable 2×1D clean-up on despread pilots.
///
/// Equivalent to applying the full Kronecker operator (time ⊗ frequency) to
/// the vectorized observations, computed as two cheap 1-D passes.
pub fn interpolate<T: Scalar>(
    raw: &RawPilotEstimate<T>,
    bank: &InterpolatorBank<T>,
) -> Result<ChannelEstimate<T>> {
    if raw.pattern != bank.pattern {
        return Err(Error::Config(
            "interpolator bank built for a different pilot pattern".into(),
        ));
    }
    if bank.time.len() != bank.pattern.num_dmrs_symbols {
        return Err(Error::Dimension(format!(
            "{} time weights for {} pilot symbols",
            bank.time.len(),
            bank.pattern.num_dmrs_symbols
        )));
    }
    let mut freq = vec![Complex::default(); bank.pattern.n_sc];
    for (d, &w) in bank.time.iter().enumerate() {
        let pilots = raw.pilot_vector(d);
        let interp = bank.freq.apply(&pilots)?;
        for (dst, v) in freq.iter_mut().zip(interp) {
            *dst += v.scale(w);
        }
    }
    Ok(ChannelEstimate {
        pattern: bank.pattern,
        freq,
        raw: raw.clone(),
    })
}

/// Despread and clean up in one call.
pub fn estimate_link<T: Scalar>(
    y: &ResourceGrid<T>,
    a: &ResourceGrid<T>,
    bank: &InterpolatorBank<T>,
) -> Result<ChannelEstimate<T>> {
    let raw = ls_pilot_estimate(y, a, &bank.pattern)?;
    interpolate(&raw, bank)
}

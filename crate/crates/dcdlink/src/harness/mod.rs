//! Monte-Carlo harness: slot pipeline, per-point aggregation, SNR sweeps,
//! and deterministic result files.

pub mod config;
pub mod output;

pub use config::{ChestMode, SimConfig};
pub use output::write_outputs;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rayon::prelude::*;

use crate::channel::{apply_channel, gen_channel};
use crate::chest::{estimate_link, EstimatorModel, InterpolatorBank};
use crate::complexity::{dcd_addition_histogram, AdditionHistogram, DetectorKind};
use crate::equalizer::{
    demap_symbol_qam16, detect_dcd, detect_mmse, gram, matched_filter, modulate_16qam, DcdLedger,
    DcdOptions,
};
use crate::error::{Error, Result};
use crate::frontend::{bussgang_gain, digitize, distortion_factor, QuantizerConfig};
use crate::grid::ResourceGrid;
use crate::num::Scalar;
use crate::refsig::{
    dmrs_grid, gold_sequence, layer_weights, qpsk_map, DmrsLayerConfig, GoldConfig, PilotPattern,
};
use crate::seeding;

/// Stream tag for payload bit generation (per slot, per user).
const STREAM_DATA: u64 = 1;
/// Stream tag for channel realizations (per slot).
const STREAM_CHANNEL: u64 = 2;
/// Stream tag for thermal noise (per slot; antennas split inside).
const STREAM_NOISE: u64 = 3;

/// One point of a bit-error-rate curve, with a 95% Wilson score interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Aggregated solver effort for one simulated point.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    /// Number of per-subcarrier solves behind the averages.
    pub solves: u64,
    pub additions: u64,
    pub comparisons: u64,
    pub bit_shifts: u64,
    pub multiplications: u64,
    pub accepted_updates: u64,
    /// Distribution of per-solve (additions + comparisons) totals.
    pub histogram: AdditionHistogram,
}

/// Everything measured at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub record: BerRecord,
    /// Present when the coordinate-descent detector ran.
    pub solver: Option<SolverStats>,
}

/// A full sweep: one result per requested SNR, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// 95% Wilson score interval for `errors` successes in `bits` trials.
pub fn wilson_interval(errors: u64, bits: u64) -> (f64, f64) {
    const Z: f64 = 1.959963984540054;
    if bits == 0 {
        return (0.0, 1.0);
    }
    let n = bits as f64;
    let p = errors as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (Z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // At the boundary counts the analytic endpoints are exact; keep them
    // free of rounding residue.
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors == bits {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Per-point immutable context shared by every slot worker.
struct PointContext<'a, T> {
    cfg: &'a SimConfig<T>,
    snr_db: T,
    /// Thermal noise variance at unit per-user transmit power.
    sigma2: T,
    layers: Vec<DmrsLayerConfig>,
    /// Pilot-only transmit grids, one per user; data symbols are zero.
    pilot_grids: Vec<ResourceGrid<T>>,
    /// Interpolator per comb offset (pilot-based estimation only).
    banks: [Option<InterpolatorBank<T>>; 2],
    quantizer: QuantizerConfig<T>,
    /// Effective linear gain of the quantizer.
    gamma: T,
    /// Indices of the data-bearing OFDM symbols, ascending.
    data_syms: Vec<usize>,
}

impl<'a, T: Scalar> PointContext<'a, T> {
    fn build(cfg: &'a SimConfig<T>, snr_db: T) -> Result<Self> {
        let base_bits = gold_sequence(&GoldConfig::new(cfg.seq_seed, cfg.n_sc))?;
        let base_seq = qpsk_map::<T>(&base_bits)?;

        let mut layers = Vec::with_capacity(cfg.n_users);
        let mut patterns = Vec::with_capacity(cfg.n_users);
        let mut pilot_grids = Vec::with_capacity(cfg.n_users);
        for u in 0..cfg.n_users {
            let layer = layer_weights(u + 1)?.with_pilot_symbols(cfg.ell0, cfg.n_dmrs_syms);
            let pattern = PilotPattern::for_layer(cfg.n_sc, cfg.n_sym, &layer)?;
            pilot_grids.push(dmrs_grid(&layer, &pattern, &base_seq)?);
            layers.push(layer);
            patterns.push(pattern);
        }

        let quantizer = cfg.quantizer()?;
        let mut banks = [None, None];
        if cfg.chest == ChestMode::Mmse {
            // The estimator regularizes against everything the front end
            // adds, not just thermal noise: the quantizer's distortion,
            // referred to the input, scales with the total received power.
            let sigma2 = 10f64.powf(-snr_db.to64() / 10.0);
            let kappa = distortion_factor(&quantizer).to64();
            let effective_noise = sigma2 + kappa * (cfg.n_users as f64 + sigma2);
            let model = EstimatorModel {
                tau_rms: cfg.pdp.tau_rms,
                delta_f: cfg.pdp.delta_f,
                snr_db: T::of(-10.0 * effective_noise.log10()),
                k_c: cfg.k_c,
            };
            for (u, pattern) in patterns.iter().enumerate() {
                let comb = layers[u].w_fdm as usize;
                if banks[comb].is_none() {
                    banks[comb] = Some(InterpolatorBank::build(pattern, &model)?);
                }
            }
        }

        let data_syms: Vec<usize> = (0..cfg.n_sym)
            .filter(|&l| !(cfg.ell0..cfg.ell0 + cfg.n_dmrs_syms).contains(&l))
            .collect();

        Ok(PointContext {
            cfg,
            snr_db,
            sigma2: T::of(10f64.powf(-snr_db.to64() / 10.0)),
            layers,
            pilot_grids,
            banks,
            quantizer,
            gamma: bussgang_gain(&quantizer),
            data_syms,
        })
    }
}

/// Outcome of one simulated slot.
struct SlotOutcome {
    bit_errors: u64,
    bits: u64,
    ledgers: Vec<DcdLedger>,
}

/// Simulate one slot end to end: modulate, superpose pilots, propagate,
/// digitize, estimate, detect every data-bearing resource element, and count
/// bit errors against the transmitted payload. Pilot resource elements never
/// enter the error count.
fn simulate_slot<T: Scalar>(ctx: &PointContext<'_, T>, slot: usize) -> Result<SlotOutcome> {
    let cfg = ctx.cfg;
    let n_sc = cfg.n_sc;
    let n_users = cfg.n_users;
    let n_rx = cfg.n_rx;
    let n_data = ctx.data_syms.len();
    let bits_per_user = n_data * n_sc * crate::equalizer::BITS_PER_SYMBOL;

    // Transmit side: payload bits and grids with pilots superposed.
    let mut tx_bits: Vec<Vec<u8>> = Vec::with_capacity(n_users);
    let mut tx_grids: Vec<ResourceGrid<T>> = Vec::with_capacity(n_users);
    for u in 0..n_users {
        let mut rng = seeding::rng(cfg.seed, &[STREAM_DATA, slot as u64, u as u64]);
        let bits: Vec<u8> = (0..bits_per_user)
            .map(|_| rand::Rng::random_range(&mut rng, 0..2u8))
            .collect();
        let symbols = modulate_16qam::<T>(&bits)?;
        let mut grid = ctx.pilot_grids[u].clone();
        for (pos, &sym) in ctx.data_syms.iter().enumerate() {
            grid.symbol_mut(sym)
                .copy_from_slice(&symbols[pos * n_sc..(pos + 1) * n_sc]);
        }
        tx_bits.push(bits);
        tx_grids.push(grid);
    }

    // Propagation and the analog front end.
    let channel = gen_channel(
        &cfg.pdp,
        n_rx,
        n_users,
        n_sc,
        seeding::derive(cfg.seed, &[STREAM_CHANNEL, slot as u64]),
    )?;
    let received = apply_channel(
        &tx_grids,
        &channel,
        Some(ctx.snr_db),
        seeding::derive(cfg.seed, &[STREAM_NOISE, slot as u64]),
    )?;
    let mut quantized = Vec::with_capacity(n_rx);
    for y in &received {
        let (q, _gain) = digitize(y, &ctx.quantizer)?;
        quantized.push(q);
    }

    // Channel knowledge, flattened as [(rx * n_users + user) * n_sc + k].
    let mut hhat = vec![Complex::new(T::zero(), T::zero()); n_rx * n_users * n_sc];
    match cfg.chest {
        ChestMode::Ideal => {
            // The genie reports the digital-domain effective response: the
            // true channel through the quantizer's linear gain. (The AGC
            // gain cancels because the digitizer rescales its output back
            // to input units.)
            for rx in 0..n_rx {
                for u in 0..n_users {
                    let link = channel.resp.link(rx, u);
                    let dst = &mut hhat[(rx * n_users + u) * n_sc..(rx * n_users + u + 1) * n_sc];
                    for (d, &h) in dst.iter_mut().zip(link) {
                        *d = h.scale(ctx.gamma);
                    }
                }
            }
        }
        ChestMode::Mmse => {
            for rx in 0..n_rx {
                for u in 0..n_users {
                    let comb = ctx.layers[u].w_fdm as usize;
                    let bank = ctx.banks[comb]
                        .as_ref()
                        .ok_or(Error::Config("missing interpolator bank".into()))?;
                    let est = estimate_link(&quantized[rx], &ctx.pilot_grids[u], bank)?;
                    let dst = &mut hhat[(rx * n_users + u) * n_sc..(rx * n_users + u + 1) * n_sc];
                    dst.copy_from_slice(est.freq());
                }
            }
        }
    }

    // Per-subcarrier detection across all data symbols. Both detectors
    // produce unbiased symbol estimates, so the demapper slices at the
    // nominal constellation amplitude.
    let demap_scale = T::one();
    let dcd_opts: DcdOptions<T> = cfg.dcd;
    let mut bit_errors = 0u64;
    let mut bits = 0u64;
    let mut ledgers = Vec::with_capacity(if cfg.detector == DetectorKind::Dcd {
        n_sc * n_data
    } else {
        0
    });
    let mut y_vec = DVector::from_element(n_rx, Complex::new(T::zero(), T::zero()));
    for k in 0..n_sc {
        let h_k = DMatrix::from_fn(n_rx, n_users, |r, u| hhat[(r * n_users + u) * n_sc + k]);
        let (g_k, _) = gram(&h_k);
        for (pos, &sym) in ctx.data_syms.iter().enumerate() {
            for r in 0..n_rx {
                y_vec[r] = quantized[r].symbol(sym)[k];
            }
            let (v, _) = matched_filter(&h_k, &y_vec)?;
            let out = match cfg.detector {
                DetectorKind::Dcd => detect_dcd(&g_k, &v, &dcd_opts)?,
                DetectorKind::Mmse => detect_mmse(&g_k, &v, ctx.sigma2)?,
            };
            if let Some(ledger) = out.ledger {
                ledgers.push(ledger);
            }
            for u in 0..n_users {
                let decided = demap_symbol_qam16(out.symbols[u], demap_scale);
                let offset = (pos * n_sc + k) * crate::equalizer::BITS_PER_SYMBOL;
                let sent = &tx_bits[u][offset..offset + crate::equalizer::BITS_PER_SYMBOL];
                bit_errors += decided
                    .iter()
                    .zip(sent)
                    .filter(|(d, s)| d != s)
                    .count() as u64;
                bits += crate::equalizer::BITS_PER_SYMBOL as u64;
            }
        }
    }

    Ok(SlotOutcome {
        bit_errors,
        bits,
        ledgers,
    })
}

/// Simulate one SNR point over the configured number of slots.
///
/// Slots run in parallel but aggregate in slot order, and every random
/// stream is derived from (seed, stream, slot, ...) indices alone, so
/// results are independent of thread scheduling and of which other SNR
/// points run in the same process.
pub fn run_point<T: Scalar>(cfg: &SimConfig<T>, snr_db: T) -> Result<PointResult> {
    cfg.validate()?;
    let ctx = PointContext::build(cfg, snr_db)?;
    let outcomes: Vec<SlotOutcome> = (0..cfg.n_slots)
        .into_par_iter()
        .map(|slot| simulate_slot(&ctx, slot))
        .collect::<Result<_>>()?;

    let mut bit_errors = 0u64;
    let mut bits = 0u64;
    let mut ledgers = Vec::new();
    for o in outcomes {
        bit_errors += o.bit_errors;
        bits += o.bits;
        ledgers.extend(o.ledgers);
    }
    let ber = if bits == 0 {
        0.0
    } else {
        bit_errors as f64 / bits as f64
    };
    let (ci_low, ci_high) = wilson_interval(bit_errors, bits);

    let solver = if ledgers.is_empty() {
        None
    } else {
        let histogram = dcd_addition_histogram(&ledgers)?;
        let mut stats = SolverStats {
            solves: ledgers.len() as u64,
            additions: 0,
            comparisons: 0,
            bit_shifts: 0,
            multiplications: 0,
            accepted_updates: 0,
            histogram,
        };
        for l in &ledgers {
            stats.additions += l.additions;
            stats.comparisons += l.comparisons;
            stats.bit_shifts += l.bit_shifts;
            stats.multiplications += l.multiplications;
            stats.accepted_updates += l.accepted_updates;
        }
        Some(stats)
    };

    Ok(PointResult {
        record: BerRecord {
            snr_db: snr_db.to64(),
            bits,
            bit_errors,
            ber,
            ci_low,
            ci_high,
        },
        solver,
    })
}

/// Simulate every SNR point of the configured grid, in order.
pub fn run_sweep<T: Scalar>(cfg: &SimConfig<T>) -> Result<SweepResult> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.snr_grid_db.len());
    for &snr in &cfg.snr_grid_db {
        points.push(run_point(cfg, snr)?);
    }
    Ok(SweepResult { points })
}

impl SweepResult {
    /// The point whose SNR is closest to 0 dB among those with solver
    /// statistics; convergence histograms are reported there.
    pub fn histogram_point(&self) -> Option<&PointResult> {
        self.points
            .iter()
            .filter(|p| p.solver.is_some())
            .min_by(|a, b| {
                a.record
                    .snr_db
                    .abs()
                    .total_cmp(&b.record.snr_db.abs())
            })
    }
}

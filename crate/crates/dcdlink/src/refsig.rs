//! Reference-signal generation: comb-type OFDM demodulation pilots for up to
//! eight MIMO layers.
//!
//! Layers are separated by three mechanisms, configured per layer through a
//! fixed weight table:
//!  - cyclic shift (CS): a ±1 weight pattern over pilot pairs in frequency,
//!  - frequency-division multiplexing (FDM): even/odd subcarrier combs,
//!  - code-division multiplexing (CDM): a ±1 cover across the pilot symbols.
//!
//! The base sequence is a length-31 Gold sequence mapped to unit-modulus QPSK
//! symbols, shared by all layers so that the weight patterns alone carry the
//! layer separation.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::ResourceGrid;
use crate::num::Scalar;

/// 31-bit mask for the shift-register states.
const LFSR_MASK: u32 = 0x7FFF_FFFF;

/// Conventional fast-forward applied before taking sequence outputs.
pub const GOLD_FAST_FORWARD: usize = 1600;

/// Configuration of the Gold pseudo-noise generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoldConfig {
    /// Initial state of the second shift register (31 bits, nonzero).
    pub seed_init: u32,
    /// Number of initial outputs to discard.
    pub skip: usize,
    /// Number of bits to produce.
    pub length: usize,
}

impl GoldConfig {
    /// Standard configuration: fixed fast-forward, caller-chosen seed/length.
    pub fn new(seed_init: u32, length: usize) -> Self {
        GoldConfig {
            seed_init,
            skip: GOLD_FAST_FORWARD,
            length,
        }
    }
}

#[inline]
fn step_x1(x1: &mut u32) {
    // x1(n+31) = x1(n+3) + x1(n) mod 2, state bit j holding x1(n+j).
    let fb = ((*x1 >> 3) ^ *x1) & 1;
    *x1 = ((*x1 >> 1) | (fb << 30)) & LFSR_MASK;
}

#[inline]
fn step_x2(x2: &mut u32) {
    // x2(n+31) = x2(n+3) + x2(n+2) + x2(n+1) + x2(n) mod 2.
    let fb = ((*x2 >> 3) ^ (*x2 >> 2) ^ (*x2 >> 1) ^ *x2) & 1;
    *x2 = ((*x2 >> 1) | (fb << 30)) & LFSR_MASK;
}

/// Generate a Gold bit sequence.
///
/// The first register always starts from `1`; the second from
/// `cfg.seed_init`, which must be a nonzero 31-bit value. Identical
/// configurations produce identical bits.
pub fn gold_sequence(cfg: &GoldConfig) -> Result<Vec<u8>> {
    if cfg.seed_init == 0 {
        return Err(Error::DegenerateSeed);
    }
    if cfg.seed_init > LFSR_MASK {
        return Err(Error::BadValue {
            key: "seed_init".into(),
            message: format!("{} does not fit in 31 bits", cfg.seed_init),
        });
    }
    let mut x1: u32 = 1;
    let mut x2: u32 = cfg.seed_init;
    for _ in 0..cfg.skip {
        step_x1(&mut x1);
        step_x2(&mut x2);
    }
    let mut bits = Vec::with_capacity(cfg.length);
    for _ in 0..cfg.length {
        bits.push(((x1 ^ x2) & 1) as u8);
        step_x1(&mut x1);
        step_x2(&mut x2);
    }
    Ok(bits)
}

/// Map bit pairs to Gray-labeled QPSK symbols `((1-2b0) + j(1-2b1)) / sqrt(2)`.
///
/// Every output symbol has unit modulus; symbol `n` consumes bits
/// `(2n, 2n+1)`. An odd bit count is an error.
pub fn qpsk_map<T: Scalar>(bits: &[u8]) -> Result<Vec<Complex<T>>> {
    if bits.len() % 2 != 0 {
        return Err(Error::OddBitCount(bits.len()));
    }
    let amp = T::of(std::f64::consts::FRAC_1_SQRT_2);
    Ok(bits
        .chunks_exact(2)
        .map(|pair| {
            let re = if pair[0] == 0 { amp } else { -amp };
            let im = if pair[1] == 0 { amp } else { -amp };
            Complex::new(re, im)
        })
        .collect())
}

/// Per-layer pilot weights and placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DmrsLayerConfig {
    /// Layer index, 1..=8.
    pub layer: usize,
    /// Cyclic-shift weights, indexed by pilot-pair parity `(k/2) mod 2`.
    pub w_cs: [i8; 2],
    /// Comb assignment: pilots occupy subcarriers with `k mod 2 == w_fdm`.
    pub w_fdm: u8,
    /// Code-division cover across the pilot symbols, indexed by `l - l0`.
    pub w_cdm: [i8; 2],
    /// First OFDM symbol carrying pilots.
    pub ell0: usize,
    /// Number of adjacent pilot symbols (1 or 2).
    pub num_dmrs_symbols: usize,
}

/// The eight-layer weight table: (w_cs, w_fdm, w_cdm) per layer.
const LAYER_TABLE: [([i8; 2], u8, [i8; 2]); 8] = [
    ([1, 1], 0, [1, 1]),
    ([1, -1], 0, [1, 1]),
    ([1, 1], 1, [1, 1]),
    ([1, -1], 1, [1, 1]),
    ([1, 1], 0, [1, -1]),
    ([1, -1], 0, [1, -1]),
    ([1, 1], 1, [1, -1]),
    ([1, -1], 1, [1, -1]),
];

/// Default first pilot symbol within a 14-symbol slot (front-loaded).
pub const DEFAULT_FIRST_PILOT_SYMBOL: usize = 2;

/// Default number of adjacent pilot symbols.
pub const DEFAULT_NUM_PILOT_SYMBOLS: usize = 2;

/// Weight-table lookup for a layer, with the default front-loaded placement.
pub fn layer_weights(layer: usize) -> Result<DmrsLayerConfig> {
    if !(1..=8).contains(&layer) {
        return Err(Error::LayerIndex(layer));
    }
    let (w_cs, w_fdm, w_cdm) = LAYER_TABLE[layer - 1];
    Ok(DmrsLayerConfig {
        layer,
        w_cs,
        w_fdm,
        w_cdm,
        ell0: DEFAULT_FIRST_PILOT_SYMBOL,
        num_dmrs_symbols: DEFAULT_NUM_PILOT_SYMBOLS,
    })
}

impl DmrsLayerConfig {
    /// Same weights with a different pilot-symbol placement.
    pub fn with_pilot_symbols(mut self, ell0: usize, num: usize) -> Self {
        self.ell0 = ell0;
        self.num_dmrs_symbols = num;
        self
    }

    /// Cyclic-shift weight at subcarrier `k`: `w_cs[(k/2) mod 2]`.
    #[inline]
    pub fn cs_weight(&self, k: usize) -> i8 {
        self.w_cs[(k / 2) % 2]
    }

    /// Code-division weight at OFDM symbol `l` (must be a pilot symbol).
    #[inline]
    pub fn cdm_weight(&self, l: usize) -> i8 {
        self.w_cdm[l - self.ell0]
    }
}

/// Pilot placement over one slot for a single comb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PilotPattern {
    /// Subcarriers per OFDM symbol.
    pub n_sc: usize,
    /// OFDM symbols per slot.
    pub n_sym: usize,
    /// First pilot-bearing OFDM symbol.
    pub ell0: usize,
    /// Number of adjacent pilot symbols.
    pub num_dmrs_symbols: usize,
    /// Comb offset: pilots sit on subcarriers with `k mod 2 == comb`.
    pub comb: u8,
}

impl PilotPattern {
    /// Pattern matching a layer's comb and symbol placement on a grid.
    pub fn for_layer(n_sc: usize, n_sym: usize, layer: &DmrsLayerConfig) -> Result<Self> {
        let p = PilotPattern {
            n_sc,
            n_sym,
            ell0: layer.ell0,
            num_dmrs_symbols: layer.num_dmrs_symbols,
            comb: layer.w_fdm,
        };
        p.validate()?;
        Ok(p)
    }

    /// Check internal consistency.
    pub fn validate(&self) -> Result<()> {
        if self.n_sc == 0 || self.n_sym == 0 {
            return Err(Error::Config("pilot pattern on an empty grid".into()));
        }
        if !(1..=2).contains(&self.num_dmrs_symbols) {
            return Err(Error::Config(format!(
                "{} pilot symbols unsupported; expected 1 or 2",
                self.num_dmrs_symbols
            )));
        }
        if self.ell0 + self.num_dmrs_symbols > self.n_sym {
            return Err(Error::Config(format!(
                "pilot symbols {}..{} exceed the {}-symbol slot",
                self.ell0,
                self.ell0 + self.num_dmrs_symbols,
                self.n_sym
            )));
        }
        if self.comb > 1 {
            return Err(Error::Config(format!("comb offset {} not in {{0,1}}", self.comb)));
        }
        Ok(())
    }

    /// Pilot subcarrier indices in ascending order.
    pub fn pilot_subcarriers(&self) -> impl Iterator<Item = usize> + '_ {
        (self.comb as usize..self.n_sc).step_by(2)
    }

    /// Number of pilot subcarriers per pilot symbol.
    pub fn pilots_per_symbol(&self) -> usize {
        (self.n_sc - self.comb as usize).div_ceil(2)
    }

    /// Pilot-bearing OFDM symbol indices.
    pub fn pilot_symbols(&self) -> std::ops::Range<usize> {
        self.ell0..self.ell0 + self.num_dmrs_symbols
    }

    /// True when `(sc, sym)` carries a pilot of this pattern.
    pub fn contains(&self, sc: usize, sym: usize) -> bool {
        self.pilot_symbols().contains(&sym) && sc % 2 == self.comb as usize
    }

    /// Vectorized (subcarrier-fastest) indices of all pilot resource elements,
    /// pilot-symbol-major.
    pub fn vec_indices(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_dmrs_symbols * self.pilots_per_symbol());
        for sym in self.pilot_symbols() {
            for sc in self.pilot_subcarriers() {
                out.push(sym * self.n_sc + sc);
            }
        }
        out
    }
}

/// Build one layer's pilot resource grid.
///
/// At pilot symbols, `a_{k,l} = cs(k) * fdm(k) * cdm(l) * s_{k/2}`; everywhere
/// else the grid is zero. `s` must cover index `k/2` for every pilot
/// subcarrier.
pub fn dmrs_grid<T: Scalar>(
    layer: &DmrsLayerConfig,
    pattern: &PilotPattern,
    s: &[Complex<T>],
) -> Result<ResourceGrid<T>> {
    pattern.validate()?;
    if pattern.comb != layer.w_fdm
        || pattern.ell0 != layer.ell0
        || pattern.num_dmrs_symbols != layer.num_dmrs_symbols
    {
        return Err(Error::Config(format!(
            "pattern (comb {}, symbols {}..{}) does not match layer {} (comb {}, symbols {}..{})",
            pattern.comb,
            pattern.ell0,
            pattern.ell0 + pattern.num_dmrs_symbols,
            layer.layer,
            layer.w_fdm,
            layer.ell0,
            layer.ell0 + layer.num_dmrs_symbols,
        )));
    }
    let need = pattern
        .pilot_subcarriers()
        .last()
        .map_or(0, |k| k / 2 + 1);
    if s.len() < need {
        return Err(Error::SequenceTooShort {
            need,
            got: s.len(),
        });
    }
    let mut grid = ResourceGrid::zeros(pattern.n_sc, pattern.n_sym);
    for l in pattern.pilot_symbols() {
        let cdm = T::of(layer.cdm_weight(l) as f64);
        for k in pattern.pilot_subcarriers() {
            let w = T::of(layer.cs_weight(k) as f64) * cdm;
            grid[(k, l)] = s[k / 2].scale(w);
        }
    }
    Ok(grid)
}

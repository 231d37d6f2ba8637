//! Simulation configuration: defaults, validation, flat key/value files,
//! and the resolved-settings manifest.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::channel::PdpConfig;
use crate::complexity::DetectorKind;
use crate::equalizer::{default_box_bound, default_step_for, DcdOptions};
use crate::error::{Error, Result};
use crate::frontend::QuantizerConfig;
use crate::num::Scalar;
use crate::refsig::{layer_weights, PilotPattern, DEFAULT_FIRST_PILOT_SYMBOL, DEFAULT_NUM_PILOT_SYMBOLS};

/// Channel-knowledge mode for the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChestMode {
    /// Pilot-based two-stage linear estimation from the quantized samples.
    Mmse,
    /// Genie knowledge of the true response, scaled by the quantizer's
    /// effective linear gain and the per-antenna AGC gain.
    Ideal,
}

impl ChestMode {
    pub fn label(self) -> &'static str {
        match self {
            ChestMode::Mmse => "mmse",
            ChestMode::Ideal => "ideal",
        }
    }
}

impl FromStr for ChestMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mmse" => Ok(ChestMode::Mmse),
            "ideal" => Ok(ChestMode::Ideal),
            _ => Err(Error::BadValue {
                key: "chest".into(),
                message: format!("unknown estimator '{s}' (expected mmse or ideal)"),
            }),
        }
    }
}

/// Complete description of one simulation run.
///
/// Field defaults reproduce the reference operating point: eight users on
/// 64 antennas, 2-bit conversion, 128 subcarriers, a 14-symbol slot with two
/// front-loaded pilot symbols, and the exponential power-delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    /// Number of simultaneous users (layers), 1..=8.
    pub n_users: usize,
    /// Number of receive antennas.
    pub n_rx: usize,
    /// Converter resolution in bits per rail.
    pub adc_bits: u32,
    /// Clipping point of the converter, in units of the rail spacing base.
    pub clip_scale: T,
    /// Subcarriers per symbol.
    pub n_sc: usize,
    /// OFDM symbols per slot.
    pub n_sym: usize,
    /// First pilot symbol index.
    pub ell0: usize,
    /// Number of adjacent pilot symbols.
    pub n_dmrs_syms: usize,
    /// Power-delay profile of the fading channel.
    pub pdp: PdpConfig<T>,
    /// Initializer for the shared pilot base sequence.
    pub seq_seed: u32,
    /// Per-user SNR grid in dB (pre-quantization, per antenna).
    pub snr_grid_db: Vec<T>,
    /// Independent slots simulated per SNR point.
    pub n_slots: usize,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Channel-knowledge mode.
    pub chest: ChestMode,
    /// Detector selection.
    pub detector: DetectorKind,
    /// Pilots consulted per interpolated subcarrier.
    pub k_c: usize,
    /// Coordinate-descent budgets and box geometry.
    pub dcd: DcdOptions<T>,
    /// Modulation label; only "16qam" is implemented.
    pub modulation: String,
    /// Channel-coding label; reserved, must be "none".
    pub coding: String,
    /// Output directory override from a config file, if any.
    pub out_dir: Option<String>,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            n_users: 8,
            n_rx: 64,
            adc_bits: 2,
            clip_scale: T::of(2.0),
            n_sc: 128,
            n_sym: 14,
            ell0: DEFAULT_FIRST_PILOT_SYMBOL,
            n_dmrs_syms: DEFAULT_NUM_PILOT_SYMBOLS,
            pdp: PdpConfig::default_profile(),
            seq_seed: 12345,
            snr_grid_db: [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0]
                .iter()
                .map(|&s| T::of(s))
                .collect(),
            n_slots: 4,
            seed: 1,
            chest: ChestMode::Mmse,
            detector: DetectorKind::Dcd,
            k_c: 16,
            dcd: DcdOptions::default(),
            modulation: "16qam".into(),
            coding: "none".into(),
            out_dir: None,
        }
    }
}

fn parse_with<T, F>(key: &str, value: &str, f: F) -> Result<T>
where
    F: FnOnce(&str) -> Option<T>,
{
    f(value.trim()).ok_or_else(|| Error::BadValue {
        key: key.into(),
        message: format!("cannot parse '{value}'"),
    })
}

fn parse_num<N: FromStr>(key: &str, value: &str) -> Result<N> {
    parse_with(key, value, |v| v.parse().ok())
}

fn parse_real<T: Scalar>(key: &str, value: &str) -> Result<T> {
    let v: f64 = parse_num(key, value)?;
    Ok(T::of(v))
}

impl<T: Scalar> SimConfig<T> {
    /// Apply one key/value setting. Keys mirror the command-line flags
    /// (hyphens and underscores are interchangeable); a handful of extra
    /// keys expose the full geometry.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        let norm = key.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "users" => self.n_users = parse_num(key, value)?,
            "rx" => self.n_rx = parse_num(key, value)?,
            "adc_bits" => self.adc_bits = parse_num(key, value)?,
            "clip" => self.clip_scale = parse_real(key, value)?,
            "nsc" | "subcarriers" => self.n_sc = parse_num(key, value)?,
            "nsym" | "symbols" => self.n_sym = parse_num(key, value)?,
            "ell0" => self.ell0 = parse_num(key, value)?,
            "dmrs_syms" => self.n_dmrs_syms = parse_num(key, value)?,
            "tau_rms" => self.pdp.tau_rms = parse_real(key, value)?,
            "delta_f" => self.pdp.delta_f = parse_real(key, value)?,
            "taps" => self.pdp.num_taps = parse_num(key, value)?,
            "cp" => self.pdp.cp_len = parse_num(key, value)?,
            "seq_seed" => self.seq_seed = parse_num(key, value)?,
            "snr" => {
                let mut grid = Vec::new();
                for part in value.split(',') {
                    let part = part.trim();
                    if part.is_empty() {
                        continue;
                    }
                    grid.push(parse_real::<T>(key, part)?);
                }
                if grid.is_empty() {
                    return Err(Error::BadValue {
                        key: key.into(),
                        message: "empty SNR list".into(),
                    });
                }
                self.snr_grid_db = grid;
            }
            "slots" => self.n_slots = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "chest" => self.chest = value.parse()?,
            "detector" => self.detector = value.parse()?,
            "kc" => self.k_c = parse_num(key, value)?,
            "bound" => {
                self.dcd.bound = parse_real(key, value)?;
            }
            "step" => self.dcd.step = parse_real(key, value)?,
            "nu" => {
                let v = value.trim();
                self.dcd.max_updates = if v.eq_ignore_ascii_case("inf") || v.eq_ignore_ascii_case("max") {
                    u64::MAX
                } else {
                    parse_num(key, v)?
                };
            }
            "mb" => self.dcd.max_halvings = parse_num(key, value)?,
            "modulation" => self.modulation = value.trim().to_ascii_lowercase(),
            "coding" => self.coding = value.trim().to_ascii_lowercase(),
            "out" => self.out_dir = Some(value.trim().to_string()),
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Parse a flat key/value document: one `key = value` (or `key value`)
    /// per line, `#` comments, blank lines ignored.
    pub fn apply_file_contents(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = match line.split_once('=') {
                Some((k, v)) => (k, v),
                None => line.split_once(char::is_whitespace).ok_or_else(|| {
                    Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
                })?,
            };
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Load settings from a file on disk, on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        self.apply_file_contents(&text)
    }

    /// Number of data-bearing symbols per slot.
    pub fn n_data_syms(&self) -> usize {
        self.n_sym - self.n_dmrs_syms
    }

    /// Payload bits carried per slot across all users.
    pub fn bits_per_slot(&self) -> u64 {
        (self.n_users * self.n_data_syms() * self.n_sc * crate::equalizer::BITS_PER_SYMBOL) as u64
    }

    /// Quantizer settings implied by this configuration.
    pub fn quantizer(&self) -> Result<QuantizerConfig<T>> {
        QuantizerConfig::new(self.adc_bits, self.clip_scale)
    }

    /// Check every cross-field constraint.
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_users > 8 {
            return Err(Error::Config(format!(
                "{} users requested; the layer table supports 1..=8",
                self.n_users
            )));
        }
        if self.n_rx < self.n_users {
            return Err(Error::Config(format!(
                "{} antennas cannot separate {} users",
                self.n_rx, self.n_users
            )));
        }
        self.quantizer()?.validate()?;
        for u in 0..self.n_users {
            let layer = layer_weights(u + 1)?.with_pilot_symbols(self.ell0, self.n_dmrs_syms);
            PilotPattern::for_layer(self.n_sc, self.n_sym, &layer)?.validate()?;
        }
        if self.n_data_syms() == 0 {
            return Err(Error::Config("no data symbols left in the slot".into()));
        }
        self.pdp.validate()?;
        let tau = self.pdp.tau_rms.to64();
        let cp_s = self.pdp.cp_seconds(self.n_sc);
        if 8.0 * tau > cp_s {
            return Err(Error::DelayExceedsCp {
                delay_s: 8.0 * tau,
                cp_s,
            });
        }
        let pilots_per_symbol = self.n_sc / 2;
        if self.k_c == 0 || self.k_c > pilots_per_symbol {
            return Err(Error::Config(format!(
                "band limit {} outside 1..={}",
                self.k_c, pilots_per_symbol
            )));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::EmptyInput("SNR grid"));
        }
        if self.n_slots == 0 {
            return Err(Error::NonPositive {
                name: "slots",
                value: 0.0,
            });
        }
        if !crate::num::is_power_of_two(self.dcd.step) {
            return Err(Error::StepNotPowerOfTwo(self.dcd.step.to64()));
        }
        if self.dcd.step > self.dcd.bound {
            return Err(Error::StepExceedsBound {
                step: self.dcd.step.to64(),
                bound: self.dcd.bound.to64(),
            });
        }
        if self.modulation != "16qam" {
            return Err(Error::BadValue {
                key: "modulation".into(),
                message: format!("'{}' not implemented (only 16qam)", self.modulation),
            });
        }
        if self.coding != "none" {
            return Err(Error::BadValue {
                key: "coding".into(),
                message: format!("'{}' reserved (only none)", self.coding),
            });
        }
        Ok(())
    }

    /// Render every resolved setting as a flat key/value document, suitable
    /// both as a run manifest and as a reusable config file.
    pub fn manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "users = {}", self.n_users);
        let _ = writeln!(s, "rx = {}", self.n_rx);
        let _ = writeln!(s, "adc_bits = {}", self.adc_bits);
        let _ = writeln!(s, "clip = {}", self.clip_scale.to64());
        let _ = writeln!(s, "nsc = {}", self.n_sc);
        let _ = writeln!(s, "nsym = {}", self.n_sym);
        let _ = writeln!(s, "ell0 = {}", self.ell0);
        let _ = writeln!(s, "dmrs_syms = {}", self.n_dmrs_syms);
        let _ = writeln!(s, "tau_rms = {:e}", self.pdp.tau_rms.to64());
        let _ = writeln!(s, "delta_f = {}", self.pdp.delta_f.to64());
        let _ = writeln!(s, "taps = {}", self.pdp.num_taps);
        let _ = writeln!(s, "cp = {}", self.pdp.cp_len);
        let _ = writeln!(s, "seq_seed = {}", self.seq_seed);
        let grid: Vec<String> = self.snr_grid_db.iter().map(|s| format!("{}", s.to64())).collect();
        let _ = writeln!(s, "snr = {}", grid.join(","));
        let _ = writeln!(s, "slots = {}", self.n_slots);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "chest = {}", self.chest.label());
        let _ = writeln!(s, "detector = {}", self.detector.label());
        let _ = writeln!(s, "kc = {}", self.k_c);
        let _ = writeln!(s, "bound = {}", self.dcd.bound.to64());
        let _ = writeln!(s, "step = {}", self.dcd.step.to64());
        if self.dcd.max_updates == u64::MAX {
            let _ = writeln!(s, "nu = inf");
        } else {
            let _ = writeln!(s, "nu = {}", self.dcd.max_updates);
        }
        let _ = writeln!(s, "mb = {}", self.dcd.max_halvings);
        let _ = writeln!(s, "modulation = {}", self.modulation);
        let _ = writeln!(s, "coding = {}", self.coding);
        s
    }

    /// Reset the box geometry to its defaults (outer constellation level
    /// plus headroom, largest admissible power-of-two step).
    pub fn reset_dcd_geometry(&mut self) {
        self.dcd.bound = default_box_bound();
        self.dcd.step = default_step_for(self.dcd.bound);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        SimConfig::<f64>::default().validate().unwrap();
        SimConfig::<f32>::default().validate().unwrap();
    }

    #[test]
    fn default_slot_count_meets_error_budget() {
        // At a raw error ratio of 1e-3 the default run must collect at
        // least 100 bit errors in expectation.
        let cfg = SimConfig::<f64>::default();
        let bits = cfg.bits_per_slot() * cfg.n_slots as u64;
        assert!(bits as f64 * 1e-3 >= 100.0, "{bits} bits is too small");
    }

    #[test]
    fn kv_roundtrip_through_manifest() {
        let mut cfg = SimConfig::<f64>::default();
        cfg.apply_kv("users", "4").unwrap();
        cfg.apply_kv("rx", "32").unwrap();
        cfg.apply_kv("adc-bits", "3").unwrap();
        cfg.apply_kv("snr", "-5, 0, 5").unwrap();
        cfg.apply_kv("chest", "ideal").unwrap();
        cfg.apply_kv("detector", "mmse").unwrap();
        cfg.apply_kv("nu", "inf").unwrap();
        cfg.apply_kv("mb", "9").unwrap();
        cfg.validate().unwrap();

        // Feeding the manifest back in reproduces the configuration.
        let mut round = SimConfig::<f64>::default();
        round.apply_file_contents(&cfg.manifest()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn file_contents_with_comments_and_both_separators() {
        let text = "\
# comment line
users = 2
rx 16            # trailing comment
snr = 0
detector dcd
";
        let mut cfg = SimConfig::<f64>::default();
        cfg.apply_file_contents(text).unwrap();
        assert_eq!(cfg.n_users, 2);
        assert_eq!(cfg.n_rx, 16);
        assert_eq!(cfg.snr_grid_db, vec![0.0]);
    }

    #[test]
    fn rejections() {
        let mut cfg = SimConfig::<f64>::default();
        assert!(matches!(
            cfg.apply_kv("bogus", "1"),
            Err(Error::UnknownKey(_))
        ));
        assert!(matches!(
            cfg.apply_kv("users", "many"),
            Err(Error::BadValue { .. })
        ));

        cfg.n_users = 9;
        assert!(cfg.validate().is_err());
        cfg.n_users = 8;
        cfg.n_rx = 4;
        assert!(cfg.validate().is_err());
        cfg.n_rx = 64;
        cfg.k_c = 65;
        assert!(cfg.validate().is_err());
        cfg.k_c = 16;
        cfg.coding = "ldpc".into();
        assert!(cfg.validate().is_err());
        cfg.coding = "none".into();
        cfg.dcd.step = 0.3;
        assert!(matches!(cfg.validate(), Err(Error::StepNotPowerOfTwo(_))));
        cfg.reset_dcd_geometry();
        cfg.validate().unwrap();
    }

    #[test]
    fn snr_list_rejects_empty() {
        let mut cfg = SimConfig::<f64>::default();
        assert!(cfg.apply_kv("snr", " , ").is_err());
    }
}

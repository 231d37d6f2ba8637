//! Error type shared by every module of the library.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while configuring or running the receive chain.
#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// The second shift register of the sequence generator was seeded with zero,
    /// which locks it in the all-zero state.
    #[error("second shift-register seed must be a nonzero 31-bit value")]
    DegenerateSeed,

    /// A bit buffer fed to the QPSK mapper must pair up exactly.
    #[error("expected an even number of bits, got {0}")]
    OddBitCount(usize),

    /// MIMO layer indices run 1..=8.
    #[error("layer index {0} outside the supported range 1..=8")]
    LayerIndex(usize),

    /// A base symbol sequence did not cover the requested pilot subcarriers.
    #[error("symbol sequence of length {got} too short, need {need}")]
    SequenceTooShort { need: usize, got: usize },

    /// Two grids (or a grid and a pattern) disagree on their dimensions.
    #[error("grid shape ({got_sc} sc, {got_sym} sym) does not match expected ({want_sc} sc, {want_sym} sym)")]
    GridShape {
        want_sc: usize,
        want_sym: usize,
        got_sc: usize,
        got_sym: usize,
    },

    /// Catch-all for mismatched matrix/vector dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// An operation received an empty input where at least one element is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// Automatic gain control cannot normalize an all-zero block.
    #[error("all-zero sample block; gain control is undefined")]
    SilentBlock,

    /// Quantizer resolution outside the supported range.
    #[error("quantizer width {0} bits outside 1..=16")]
    BitWidth(u32),

    /// A strictly positive parameter was zero or negative.
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    /// The channel's delay spread does not fit into the cyclic prefix.
    #[error("tap delay {delay_s:.3e} s exceeds the cyclic prefix {cp_s:.3e} s")]
    DelayExceedsCp { delay_s: f64, cp_s: f64 },

    /// Pilot despreading requires unit-modulus reference symbols.
    #[error("reference symbol at grid index {index} has modulus {modulus}; pilots must be unit modulus")]
    NonUnitPilot { index: usize, modulus: f64 },

    /// A matrix expected to be positive definite failed its factorization.
    #[error("matrix is not positive definite; factorization failed")]
    NotPositiveDefinite,

    /// A matrix expected to be Hermitian was not, within tolerance.
    #[error("matrix is not Hermitian at entry ({row}, {col})")]
    NotHermitian { row: usize, col: usize },

    /// Coordinate-descent step sizes must be powers of two so that halvings
    /// stay exactly representable.
    #[error("step size {0} is not a power of two")]
    StepNotPowerOfTwo(f64),

    /// The initial step must fit inside the box constraint.
    #[error("step size {step} exceeds the box bound {bound}")]
    StepExceedsBound { step: f64, bound: f64 },

    /// An unbounded descent needs strictly positive curvature on every coordinate.
    #[error("nonpositive diagonal entry {value} at coordinate {index} with an unbounded box")]
    BadDiagonal { index: usize, value: f64 },

    /// A key in a configuration file or override that the schema does not know.
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),

    /// A configuration value that failed to parse or violates its constraint.
    #[error("invalid value for `{key}`: {message}")]
    BadValue { key: String, message: String },

    /// A semantic configuration problem spanning several fields.
    #[error("configuration: {0}")]
    Config(String),

    /// Output-file problems, annotated with the path by the harness.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a file path to a raw I/O error.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

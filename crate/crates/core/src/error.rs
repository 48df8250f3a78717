use thiserror::Error;

use crate::modem::ModScheme;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{len} bits cannot be split into {bits_per_symbol}-bit symbols")]
    BitLength { len: usize, bits_per_symbol: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("nyquist check applies to composite pulses (RC or TRI), got {0}")]
    SquareRootPulse(&'static str),

    #[error("{taps} channel taps do not fit in a {n}-point DFT; use a larger N or a shorter span")]
    TooManyTaps { taps: usize, n: usize },

    #[error("quadrature did not converge: estimate {estimate}, error {error:e} > tolerance {tolerance:e}")]
    Quadrature {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("empty {0} grid")]
    EmptyGrid(&'static str),

    #[error("no usable carrier: every gamma is zero")]
    NoUsableCarrier,

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("threshold table is not monotone: {0}")]
    NonMonotone(String),

    #[error("unknown modulation scheme `{0}`")]
    UnknownScheme(String),

    #[error("scheme {0} is missing from the baseline curve")]
    MissingScheme(ModScheme),

    #[error("cannot equalize an inactive carrier (gain {gain}, power {power})")]
    InactiveCarrier { gain: f64, power: f64 },

    #[error("cyclic prefix of {cp} samples is shorter than the channel memory {required}")]
    CyclicPrefix { cp: usize, required: usize },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check(cond: bool, name: &'static str, value: f64, reason: &'static str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter { name, value, reason })
    }
}

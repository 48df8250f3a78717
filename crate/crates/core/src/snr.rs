//! Decibel conventions.
//!
//! `Power` is the usual 10·log10 of a power ratio. `Amplitude` reads the
//! simulation pseudocode's "noise × 10^(−SNR)" literally with SNR in tenths
//! of a decade, so the noise amplitude is 10^(−dB/10) and the linear power
//! ratio is 10^(dB/5). The bundled reference threshold table lives on that axis.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DbScale {
    Power,
    #[default]
    Amplitude,
}

impl DbScale {
    pub fn to_linear(self, db: f64) -> f64 {
        match self {
            DbScale::Power => 10f64.powf(db / 10.0),
            DbScale::Amplitude => 10f64.powf(db / 5.0),
        }
    }

    pub fn to_db(self, linear: f64) -> f64 {
        match self {
            DbScale::Power => 10.0 * linear.log10(),
            DbScale::Amplitude => 5.0 * linear.log10(),
        }
    }
}

//! Faster-than-Nyquist (FTN) signalling toolkit.
//!
//! Models the ISI that sub-Nyquist symbol spacing introduces, evaluates
//! Nyquist and FTN channel capacities by quadrature, and runs seeded OFDM
//! Monte Carlo experiments with water-filling and adaptive bit loading.

pub mod allocation;
pub mod capacity;
mod error;
pub mod isi;
pub mod loading;
pub mod modem;
pub mod pulses;
mod rng;
pub mod sim;
pub mod snr;

pub use error::{Error, Result};
pub use num_complex::Complex64;

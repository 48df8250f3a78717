//! The discrete ISI channel seen at symbol spacing τT.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::check;
use crate::pulses::{half_length, rc_ctft, PulseSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtnParams {
    tau: f64,
    pulse: PulseSpec,
    n: usize,
}

impl FtnParams {
    pub fn new(tau: f64, pulse: PulseSpec, n: usize) -> Result<Self> {
        check_tau(tau)?;
        check(n >= 2 && n.is_power_of_two(), "N", n as f64, "OFDM length must be a power of two >= 2")?;
        Ok(FtnParams { tau, pulse, n })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn pulse(&self) -> &PulseSpec {
        &self.pulse
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    check(tau > 0.0 && tau <= 1.0, "tau", tau, "time acceleration must lie in (0, 1]")
}

/// Real, even composite response h[n] = (h_TX ⊛ h_RX)(nτT).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTaps {
    taps: Vec<f64>,
    center: usize,
}

impl ChannelTaps {
    pub fn new(taps: Vec<f64>, center: usize) -> Result<Self> {
        if center >= taps.len() {
            return Err(Error::LengthMismatch { expected: center + 1, actual: taps.len() });
        }
        Ok(ChannelTaps { taps, center })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// h[n] for signed n, zero outside the stored window.
    pub fn at(&self, n: i64) -> f64 {
        let idx = self.center as i64 + n;
        if idx < 0 || idx >= self.taps.len() as i64 {
            0.0
        } else {
            self.taps[idx as usize]
        }
    }

    /// DTFT of the stored (even) taps, Σ h[n] cos(ωn).
    pub fn dtft(&self, omega: f64) -> f64 {
        self.taps
            .iter()
            .enumerate()
            .map(|(i, h)| h * (omega * (i as f64 - self.center as f64)).cos())
            .sum()
    }
}

/// Samples the composite of `params.pulse` at spacing τT over ±span·T.
pub fn composite_taps(params: &FtnParams) -> ChannelTaps {
    let composite = params.pulse.composite();
    let spacing = params.tau * composite.period();
    let half = half_length(composite.span() * composite.period(), spacing);
    let taps: Vec<f64> = (-(half as i64)..=half as i64)
        .map(|n| composite.time(n as f64 * spacing))
        .collect();
    let peak = taps[half];
    ChannelTaps { taps: taps.into_iter().map(|h| h / peak).collect(), center: half }
}

/// Per-subcarrier DFT gains H[i].
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierGains {
    gains: Vec<Complex64>,
}

impl SubcarrierGains {
    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.gains.iter().map(|g| g.norm()).collect()
    }

    pub fn min_magnitude(&self) -> f64 {
        self.gains.iter().map(|g| g.norm()).fold(f64::INFINITY, f64::min)
    }

    /// γ_i = SNR·|H[i]|².
    pub fn carrier_snrs(&self, snr: f64) -> Vec<f64> {
        self.gains.iter().map(|g| snr * g.norm_sqr()).collect()
    }
}

/// N-point DFT of the taps with the centre tap moved to index 0, so the
/// gains of an even response come out real.
pub fn subcarrier_gains(taps: &ChannelTaps, n: usize) -> Result<SubcarrierGains> {
    check(n >= 1, "N", n as f64, "DFT length must be positive")?;
    if taps.len() > n {
        return Err(Error::TooManyTaps { taps: taps.len(), n });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (i, &h) in taps.taps.iter().enumerate() {
        let k = (i as i64 - taps.center as i64).rem_euclid(n as i64) as usize;
        buf[k] += h;
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(SubcarrierGains { gains: buf })
}

/// (1/τT) Σ_k 𝓗_RC((ω − 2πk)/(2πτT)); only the copies overlapping ω are summed.
pub fn dtft_rc(omega: f64, alpha: f64, tau: f64, period: f64) -> f64 {
    let x = omega / (2.0 * PI);
    let reach = tau * (1.0 + alpha) / 2.0;
    let lo = (x - reach).ceil() as i64;
    let hi = (x + reach).floor() as i64;
    let scale = tau * period;
    (lo..=hi)
        .map(|k| rc_ctft((x - k as f64) / scale, alpha, period))
        .sum::<f64>()
        / scale
}

/// True iff the aliased copies overlap everywhere, (1+α)τ > 1.
pub fn invertible(alpha: f64, tau: f64) -> bool {
    (1.0 + alpha) * tau > 1.0
}

/// n×n banded symmetric Toeplitz matrix with entries h[i−j].
pub fn toeplitz_matrix(taps: &ChannelTaps, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| taps.at(i as i64 - j as i64))
}

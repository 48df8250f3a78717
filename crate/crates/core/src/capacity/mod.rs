//! Capacities of Nyquist and FTN signalling, evaluated by quadrature.
//!
//! All rates are bits per second with W = 1/(2T). SNRs are linear here;
//! dB conversion happens in [`capacity_curve`] and at the CLI.

pub mod quadrature;

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::check;
use crate::isi::{check_tau, dtft_rc};
use crate::pulses::{rc_ctft, sinc, PulseFamily, PulseSpec};
use crate::snr::DbScale;
use crate::{Error, Result};

pub use quadrature::{Estimate, Quadrature};

/// Largest number of unit intervals integrated before the sinc² tail takes over.
const MAX_SINC2_INTERVALS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityParams {
    snr: f64,
    period: f64,
    alpha: f64,
    tau: f64,
}

impl CapacityParams {
    pub fn new(snr: f64, period: f64, alpha: f64, tau: f64) -> Result<Self> {
        check(snr >= 0.0 && snr.is_finite(), "snr", snr, "linear SNR must be finite and nonnegative")?;
        check(period > 0.0 && period.is_finite(), "T", period, "period must be positive")?;
        check((0.0..=1.0).contains(&alpha), "alpha", alpha, "roll-off must lie in [0, 1]")?;
        check_tau(tau)?;
        Ok(CapacityParams { snr, period, alpha, tau })
    }

    /// T = 1 with the given SNR, roll-off and τ.
    pub fn unit(snr: f64, alpha: f64, tau: f64) -> Result<Self> {
        Self::new(snr, 1.0, alpha, tau)
    }

    pub fn with_snr(self, snr: f64) -> Result<Self> {
        Self::new(snr, self.period, self.alpha, self.tau)
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        Self::new(self.snr, self.period, self.alpha, tau)
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn bandwidth(&self) -> f64 {
        0.5 / self.period
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapacityResult {
    pub bits_per_second: f64,
    pub error_estimate: f64,
    pub params: CapacityParams,
}

/// Discrete-time capacity in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DtCapacity {
    pub bits_per_use: f64,
    pub error_estimate: f64,
}

/// Power spectrum |H(f)|² of a square-root pulse, normalised so that
/// (1/T) Σ_k |H(f − k/T)|² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PowerSpectrum {
    /// T on |f| < 1/(2T): the ideal sinc pulse.
    Flat,
    RaisedCosine { alpha: f64 },
    /// T·sinc²(fT): the rectangular pulse.
    Sinc2,
}

impl PowerSpectrum {
    pub fn value(&self, f: f64, period: f64) -> f64 {
        match *self {
            PowerSpectrum::Flat => {
                if f.abs() < 0.5 / period {
                    period
                } else {
                    0.0
                }
            }
            PowerSpectrum::RaisedCosine { alpha } => rc_ctft(f, alpha, period),
            PowerSpectrum::Sinc2 => period * sinc(f * period).powi(2),
        }
    }
}

impl From<&PulseSpec> for PowerSpectrum {
    fn from(p: &PulseSpec) -> Self {
        match p.family() {
            PulseFamily::Srrc | PulseFamily::Rc => PowerSpectrum::RaisedCosine { alpha: p.alpha() },
            PulseFamily::Rect | PulseFamily::Tri => PowerSpectrum::Sinc2,
        }
    }
}

fn result(value: Estimate, params: &CapacityParams) -> CapacityResult {
    CapacityResult { bits_per_second: value.value.max(0.0), error_estimate: value.error, params: *params }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// W·log2(1 + SNR).
pub fn c_flat(p: &CapacityParams) -> CapacityResult {
    result(Estimate { value: p.bandwidth() * log2_1p(p.snr), error: 0.0 }, p)
}

/// ∫₀^∞ log2(1 + SNR·|H(f)|²/T) df.
pub fn c_non_flat(p: &CapacityParams, spectrum: &PowerSpectrum) -> Result<CapacityResult> {
    c_non_flat_with(p, spectrum, &Quadrature::default())
}

pub fn c_non_flat_with(p: &CapacityParams, spectrum: &PowerSpectrum, q: &Quadrature) -> Result<CapacityResult> {
    let t = p.period;
    let snr = p.snr;
    let f = |x: f64| log2_1p(snr * spectrum.value(x, t) / t);
    let est = match *spectrum {
        PowerSpectrum::Flat => q.integrate(f, &[0.0, 0.5 / t])?,
        PowerSpectrum::RaisedCosine { alpha } => {
            let pts = quadrature::breakpoints(0.0, (1.0 + alpha) / (2.0 * t), [(1.0 - alpha) / (2.0 * t)]);
            q.integrate(f, &pts)?
        }
        PowerSpectrum::Sinc2 => {
            if snr == 0.0 {
                return Ok(result(Estimate { value: 0.0, error: 0.0 }, p));
            }
            // Beyond K/T, log2(1+x) ≈ x/ln2 and sin² averages to 1/2; both
            // approximations leave an O(K⁻³) remainder.
            let target = 0.1 * q.rel_tol * c_flat(p).bits_per_second.max(1e-3);
            let coeff = (snr / 4.0 + snr * snr / 6.0) / (PI.powi(4) * LN_2 * t);
            let k = ((coeff / target).cbrt().ceil() as usize).clamp(4, MAX_SINC2_INTERVALS);
            let tail = snr / (2.0 * PI * PI * k as f64 * t * LN_2);
            let tail_err = coeff / (k as f64).powi(3);
            let pts: Vec<f64> = (0..=k).map(|i| i as f64 / t).collect();
            let body = q.integrate(f, &pts)?;
            Estimate { value: body.value + tail, error: body.error + tail_err }
        }
    };
    Ok(result(est, p))
}

/// (1/2π) ∫₀^{2π} log2(1 + SNR·H_T(e^{jω})) dω for a nonnegative `dtft`;
/// `kinks` lists points in [0, 2π] where the integrand is not smooth.
pub fn c_dt<F: Fn(f64) -> f64>(snr: f64, dtft: F, kinks: &[f64]) -> Result<DtCapacity> {
    c_dt_with(snr, dtft, kinks, &Quadrature::default())
}

pub fn c_dt_with<F: Fn(f64) -> f64>(snr: f64, dtft: F, kinks: &[f64], q: &Quadrature) -> Result<DtCapacity> {
    check(snr >= 0.0 && snr.is_finite(), "snr", snr, "linear SNR must be finite and nonnegative")?;
    let pts = quadrature::breakpoints(0.0, 2.0 * PI, kinks.iter().copied());
    let est = q.integrate(|w| log2_1p(snr * dtft(w).max(0.0)), &pts)?;
    Ok(DtCapacity { bits_per_use: est.value / (2.0 * PI), error_estimate: est.error / (2.0 * PI) })
}

/// Points in [0, 2π] where the aliased RC spectrum has kinks.
pub fn dtft_rc_kinks(alpha: f64, tau: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    for k in -1..=2 {
        for edge in [1.0 - alpha, 1.0 + alpha] {
            for sign in [-1.0, 1.0] {
                pts.push(2.0 * PI * k as f64 + sign * PI * tau * edge);
            }
        }
    }
    pts
}

/// c_dt of the sampled SRRC system at per-sample SNR τ·SNR, in bits per use.
pub fn c_dt_rc(p: &CapacityParams) -> Result<DtCapacity> {
    let (alpha, tau, t) = (p.alpha, p.tau, p.period);
    c_dt(p.tau * p.snr, |w| dtft_rc(w, alpha, tau, t), &dtft_rc_kinks(alpha, tau))
}

/// ∫₀^{1/(2τT)} log2(1 + SNR·(1/T)Σ_k 𝓗_RC(f − k/τT)) df.
pub fn c_ftn_srrc(p: &CapacityParams) -> Result<CapacityResult> {
    c_ftn_srrc_with(p, &Quadrature::default())
}

pub fn c_ftn_srrc_with(p: &CapacityParams, q: &Quadrature) -> Result<CapacityResult> {
    let (alpha, tau, t, snr) = (p.alpha, p.tau, p.period, p.snr);
    let top = 1.0 / (2.0 * tau * t);
    let shift = 1.0 / (tau * t);
    let mut kinks = Vec::new();
    for k in 0..=1 {
        for edge in [1.0 - alpha, 1.0 + alpha] {
            for sign in [-1.0, 1.0] {
                kinks.push(k as f64 * shift + sign * edge / (2.0 * t));
            }
        }
    }
    let pts = quadrature::breakpoints(0.0, top, kinks);
    // (1/T)Σ_k 𝓗_RC(f − k/τT) = τ·dtft_rc(2πfτT).
    let f = |x: f64| log2_1p(snr * tau * dtft_rc(2.0 * PI * x * tau * t, alpha, tau, t));
    Ok(result(q.integrate(f, &pts)?, p))
}

/// (1/T)Σ_k 𝓗_tri(f − k/τT), evaluated through its finite Fourier series
/// τ Σ_{|n|<1/τ} (1 − |n|τ) cos(2π f n τT).
pub fn aliased_tri(f: f64, tau: f64, period: f64) -> f64 {
    let w = 2.0 * PI * f * tau * period;
    let mut acc = 1.0;
    let mut n = 1;
    while (n as f64) * tau < 1.0 {
        acc += 2.0 * (1.0 - n as f64 * tau) * (w * n as f64).cos();
        n += 1;
    }
    tau * acc
}

/// Same integral as [`c_ftn_srrc`] with the triangular composite spectrum.
pub fn c_ftn_rect(p: &CapacityParams) -> Result<CapacityResult> {
    c_ftn_rect_with(p, &Quadrature::default())
}

pub fn c_ftn_rect_with(p: &CapacityParams, q: &Quadrature) -> Result<CapacityResult> {
    let (tau, t, snr) = (p.tau, p.period, p.snr);
    let top = 1.0 / (2.0 * tau * t);
    // The series has ~1/τ harmonics; seed enough intervals to resolve them.
    let pieces = ((1.0 / tau).ceil() as usize).max(1);
    let pts: Vec<f64> = (0..=pieces).map(|i| top * i as f64 / pieces as f64).collect();
    let f = |x: f64| log2_1p(snr * aliased_tri(x, tau, t).max(0.0));
    Ok(result(q.integrate(f, &pts)?, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expression {
    #[serde(rename = "flat")]
    Flat,
    /// RC spectrum (SRRC pulse).
    #[serde(rename = "nonflat")]
    NonFlat,
    /// sinc² spectrum (rectangular pulse).
    #[serde(rename = "nonflat-rect")]
    NonFlatRect,
    /// Sampled SRRC system in bits per channel use.
    #[serde(rename = "dt")]
    Dt,
    #[serde(rename = "ftn-srrc")]
    FtnSrrc,
    #[serde(rename = "ftn-rect")]
    FtnRect,
}

impl Expression {
    pub const ALL: [Expression; 6] = [
        Expression::Flat,
        Expression::NonFlat,
        Expression::NonFlatRect,
        Expression::Dt,
        Expression::FtnSrrc,
        Expression::FtnRect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Expression::Flat => "flat",
            Expression::NonFlat => "nonflat",
            Expression::NonFlatRect => "nonflat-rect",
            Expression::Dt => "dt",
            Expression::FtnSrrc => "ftn-srrc",
            Expression::FtnRect => "ftn-rect",
        }
    }

    pub fn evaluate(self, p: &CapacityParams) -> Result<(f64, f64)> {
        let r = match self {
            Expression::Flat => c_flat(p),
            Expression::NonFlat => c_non_flat(p, &PowerSpectrum::RaisedCosine { alpha: p.alpha })?,
            Expression::NonFlatRect => c_non_flat(p, &PowerSpectrum::Sinc2)?,
            Expression::Dt => {
                let d = c_dt_rc(p)?;
                return Ok((d.bits_per_use, d.error_estimate));
            }
            Expression::FtnSrrc => c_ftn_srrc(p)?,
            Expression::FtnRect => c_ftn_rect(p)?,
        };
        Ok((r.bits_per_second, r.error_estimate))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expression::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::UnknownName { kind: "capacity expression", name: s.to_string() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub snr_db: f64,
    pub capacity: f64,
    pub error_estimate: f64,
}

/// Rows in (τ, SNR) row-major order. SNRs are power dB.
pub fn capacity_curve(
    expr: Expression,
    snr_grid_db: &[f64],
    tau_list: &[f64],
    base: &CapacityParams,
) -> Result<Vec<CurvePoint>> {
    if snr_grid_db.is_empty() {
        return Err(Error::EmptyGrid("SNR"));
    }
    if tau_list.is_empty() {
        return Err(Error::EmptyGrid("tau"));
    }
    let cells: Vec<(f64, f64)> = tau_list
        .iter()
        .flat_map(|&tau| snr_grid_db.iter().map(move |&db| (tau, db)))
        .collect();
    cells
        .par_iter()
        .map(|&(tau, snr_db)| {
            let p = CapacityParams::new(DbScale::Power.to_linear(snr_db), base.period, base.alpha, tau)?;
            let (capacity, error_estimate) = expr.evaluate(&p)?;
            Ok(CurvePoint { tau, snr_db, capacity, error_estimate })
        })
        .collect()
}

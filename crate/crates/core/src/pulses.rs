//! Modulating pulses in time and frequency.
//!
//! Square-root pulses (SRRC, RECT) have unit energy, so the composite of a
//! pulse with its matched filter (RC, TRI) peaks at exactly 1.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::check;
use crate::{Error, Result};

/// Off-centre sample magnitude accepted by [`nyquist_check`].
pub const NYQUIST_TOLERANCE: f64 = 1e-6;
/// Looser bound for composites obtained by truncated numerical convolution.
pub const NUMERIC_NYQUIST_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseFamily {
    Srrc,
    Rc,
    Rect,
    Tri,
}

impl PulseFamily {
    pub fn name(self) -> &'static str {
        match self {
            PulseFamily::Srrc => "srrc",
            PulseFamily::Rc => "rc",
            PulseFamily::Rect => "rect",
            PulseFamily::Tri => "tri",
        }
    }

    /// True for pulses that already include the matched filter.
    pub fn is_composite(self) -> bool {
        matches!(self, PulseFamily::Rc | PulseFamily::Tri)
    }

    pub fn composite(self) -> PulseFamily {
        match self {
            PulseFamily::Srrc | PulseFamily::Rc => PulseFamily::Rc,
            PulseFamily::Rect | PulseFamily::Tri => PulseFamily::Tri,
        }
    }
}

impl fmt::Display for PulseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PulseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "srrc" => Ok(PulseFamily::Srrc),
            "rc" => Ok(PulseFamily::Rc),
            "rect" => Ok(PulseFamily::Rect),
            "tri" => Ok(PulseFamily::Tri),
            _ => Err(Error::UnknownName { kind: "pulse family", name: s.to_string() }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPulse")]
pub struct PulseSpec {
    family: PulseFamily,
    alpha: f64,
    period: f64,
    span: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    family: PulseFamily,
    alpha: f64,
    period: f64,
    span: f64,
}

impl TryFrom<RawPulse> for PulseSpec {
    type Error = Error;

    fn try_from(r: RawPulse) -> Result<Self> {
        PulseSpec::new(r.family, r.alpha, r.period, r.span)
    }
}

impl PulseSpec {
    pub const DEFAULT_SPAN: f64 = 16.0;

    /// `alpha` is ignored by RECT and TRI but still has to lie in [0, 1].
    pub fn new(family: PulseFamily, alpha: f64, period: f64, span: f64) -> Result<Self> {
        check((0.0..=1.0).contains(&alpha), "alpha", alpha, "roll-off must lie in [0, 1]")?;
        check(period > 0.0 && period.is_finite(), "T", period, "period must be positive")?;
        check(span >= 1.0 && span.is_finite(), "span", span, "span must be at least one period")?;
        Ok(PulseSpec { family, alpha, period, span })
    }

    pub fn srrc(alpha: f64) -> Result<Self> {
        Self::new(PulseFamily::Srrc, alpha, 1.0, Self::DEFAULT_SPAN)
    }

    pub fn rc(alpha: f64) -> Result<Self> {
        Self::new(PulseFamily::Rc, alpha, 1.0, Self::DEFAULT_SPAN)
    }

    pub fn rect() -> Self {
        PulseSpec { family: PulseFamily::Rect, alpha: 0.0, period: 1.0, span: Self::DEFAULT_SPAN }
    }

    pub fn tri() -> Self {
        PulseSpec { family: PulseFamily::Tri, alpha: 0.0, period: 1.0, span: Self::DEFAULT_SPAN }
    }

    pub fn with_period(self, period: f64) -> Result<Self> {
        Self::new(self.family, self.alpha, period, self.span)
    }

    pub fn with_span(self, span: f64) -> Result<Self> {
        Self::new(self.family, self.alpha, self.period, span)
    }

    pub fn family(&self) -> PulseFamily {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    /// Pulse followed by its matched filter; identity for RC and TRI.
    pub fn composite(&self) -> PulseSpec {
        PulseSpec { family: self.family.composite(), ..*self }
    }

    /// Closed-form time response (not truncated).
    pub fn time(&self, t: f64) -> f64 {
        match self.family {
            PulseFamily::Srrc => srrc_time(t, self.alpha, self.period),
            PulseFamily::Rc => rc_time(t, self.alpha, self.period),
            PulseFamily::Rect => rect_time(t, self.period),
            PulseFamily::Tri => tri_time(t, self.period),
        }
    }

    pub fn ctft(&self, f: f64) -> f64 {
        match self.family {
            PulseFamily::Srrc => rc_ctft(f, self.alpha, self.period).sqrt(),
            PulseFamily::Rc => rc_ctft(f, self.alpha, self.period),
            PulseFamily::Rect => self.period.sqrt() * sinc(f * self.period),
            PulseFamily::Tri => tri_ctft(f, self.period),
        }
    }

    /// Frequency beyond which the spectrum vanishes, if bandlimited.
    pub fn band_edge(&self) -> Option<f64> {
        match self.family {
            PulseFamily::Srrc | PulseFamily::Rc => Some((1.0 + self.alpha) / (2.0 * self.period)),
            PulseFamily::Rect | PulseFamily::Tri => None,
        }
    }

    /// Samples at `n·spacing` for |n·spacing| ≤ span·T, centre in the middle.
    pub fn sample(&self, spacing: f64) -> Result<Vec<f64>> {
        check(spacing > 0.0 && spacing.is_finite(), "spacing", spacing, "sample spacing must be positive")?;
        let half = half_length(self.span * self.period, spacing);
        Ok((-(half as i64)..=half as i64).map(|n| self.time(n as f64 * spacing)).collect())
    }
}

/// Largest n with n·spacing ≤ extent, forgiving rounding on exact multiples.
pub(crate) fn half_length(extent: f64, spacing: f64) -> usize {
    (extent / spacing * (1.0 + 1e-12)).floor() as usize
}

/// Normalised sinc, sin(πx)/(πx).
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

pub fn rc_ctft(f: f64, alpha: f64, period: f64) -> f64 {
    let f = f.abs();
    let inner = (1.0 - alpha) / (2.0 * period);
    let outer = (1.0 + alpha) / (2.0 * period);
    if f <= inner {
        period
    } else if f <= outer {
        0.5 * period * (1.0 + (PI * period / alpha * (f - inner)).cos())
    } else {
        0.0
    }
}

pub fn rc_time(t: f64, alpha: f64, period: f64) -> f64 {
    let x = t / period;
    let d = 1.0 - (2.0 * alpha * x).powi(2);
    if d.abs() < 1e-10 {
        PI / 4.0 * sinc(1.0 / (2.0 * alpha))
    } else {
        sinc(x) * (PI * alpha * x).cos() / d
    }
}

/// T·sinc²(fT): equals 1 at f=0 for T=1 and keeps the aliasing sum at one.
pub fn tri_ctft(f: f64, period: f64) -> f64 {
    period * sinc(f * period).powi(2)
}

pub fn tri_time(t: f64, period: f64) -> f64 {
    (1.0 - t.abs() / period).max(0.0)
}

/// Unit-energy rectangle of width T.
pub fn rect_time(t: f64, period: f64) -> f64 {
    let edge = period / 2.0;
    let a = period.sqrt().recip();
    if t.abs() < edge {
        a
    } else if t.abs() == edge {
        a / 2.0
    } else {
        0.0
    }
}

/// Unit-energy SRRC, so its autocorrelation at zero lag is 1.
pub fn srrc_time(t: f64, alpha: f64, period: f64) -> f64 {
    let x = t / period;
    let a = period.sqrt().recip();
    if x == 0.0 {
        return a * (1.0 - alpha + 4.0 * alpha / PI);
    }
    let q = 4.0 * alpha * x;
    if (q.abs() - 1.0).abs() < 1e-10 {
        let arg = PI / (4.0 * alpha);
        return a * alpha / 2f64.sqrt()
            * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * x * (1.0 - alpha)).sin() + q * (PI * x * (1.0 + alpha)).cos();
    a * num / (PI * x * (1.0 - q * q))
}

/// Numerical (h ⊛ h̃)(lag) of a real even pulse over its truncation window,
/// by composite Simpson with `steps_per_period` (even) points per T.
pub fn autocorrelation(p: &PulseSpec, lag: f64, steps_per_period: usize) -> f64 {
    let extent = p.span * p.period;
    let steps = (2.0 * p.span).ceil() as usize * steps_per_period.max(2) / 2 * 2;
    let h = 2.0 * extent / steps as f64;
    let g = |s: f64| {
        let shifted = s - lag;
        if shifted.abs() > extent {
            0.0
        } else {
            p.time(s) * p.time(shifted)
        }
    };
    let mut acc = g(-extent) + g(extent);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(-extent + i as f64 * h);
    }
    acc * h / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NyquistReport {
    pub is_nyquist: bool,
    pub max_off_center: f64,
}

/// Zero-ISI test of a composite pulse at its own period.
pub fn nyquist_check(p: &PulseSpec) -> Result<NyquistReport> {
    nyquist_check_at(p, p.period)
}

/// Zero-ISI test of a composite pulse sampled every `spacing` seconds.
pub fn nyquist_check_at(p: &PulseSpec, spacing: f64) -> Result<NyquistReport> {
    if !p.family.is_composite() {
        return Err(Error::SquareRootPulse(p.family.name()));
    }
    let samples = p.sample(spacing)?;
    Ok(nyquist_check_samples(&samples, samples.len() / 2, NYQUIST_TOLERANCE))
}

/// Zero-ISI test on an explicit sample sequence.
pub fn nyquist_check_samples(samples: &[f64], center: usize, tolerance: f64) -> NyquistReport {
    let max_off_center = samples
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != center)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    NyquistReport { is_nyquist: max_off_center < tolerance, max_off_center }
}

//! TOML experiment configs. Every section and key is optional; unknown keys
//! are rejected with their dotted path and line.

use std::fs;
use std::path::{Path, PathBuf};

use ftn_core::loading::BaselineConfig;
use ftn_core::modem::ModScheme;
use ftn_core::pulses::{PulseFamily, PulseSpec};
use ftn_core::snr::DbScale;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// An SNR grid in dB, either listed or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            Grid::List(ref v) => Ok(v.clone()),
            Grid::Range { start, stop, step } => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(CliError::Usage(format!("bad grid {start}:{stop}:{step}")));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Err(CliError::Usage(format!("grid stop {stop} is below start {start}")));
                }
                Ok((0..=count as usize).map(|i| start + step * i as f64).collect())
            }
        }
    }
}

/// Parses `start:stop:step` or a comma-separated list.
pub fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(format!("expected start:stop:step, got `{s}`"));
        };
        let grid = Grid::Range { start: num(a)?, stop: num(b)?, step: num(c)? };
        grid.values().map_err(|e| e.to_string())?;
        Ok(grid)
    } else {
        s.split(',').map(num).collect::<std::result::Result<Vec<_>, _>>().map(Grid::List)
    }
}

fn pulse_spec(family: PulseFamily, alpha: f64, period: f64, span: f64) -> Result<PulseSpec> {
    Ok(PulseSpec::new(family, alpha, period, span)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub pulse: PulseFamily,
    pub alpha: f64,
    pub period: f64,
    pub span: f64,
    pub tau: f64,
    pub n: usize,
}

impl Default for ChannelSection {
    fn default() -> Self {
        ChannelSection { pulse: PulseFamily::Srrc, alpha: 0.3, period: 1.0, span: PulseSpec::DEFAULT_SPAN, tau: 0.8, n: 1024 }
    }
}

impl ChannelSection {
    pub fn spec(&self) -> Result<PulseSpec> {
        pulse_spec(self.pulse, self.alpha, self.period, self.span)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CapacitySection {
    pub expr: String,
    /// Power dB.
    pub snr_db: Grid,
    pub taus: Vec<f64>,
    pub alpha: f64,
    pub period: f64,
}

impl Default for CapacitySection {
    fn default() -> Self {
        CapacitySection {
            expr: "ftn-srrc".into(),
            snr_db: Grid::Range { start: 0.0, stop: 35.0, step: 1.0 },
            taus: vec![1.0, 0.9, 0.8, 0.7, 0.6],
            alpha: 0.3,
            period: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocSection {
    pub gains: Option<PathBuf>,
    pub snr_db: f64,
    pub db_scale: DbScale,
}

impl Default for AllocSection {
    fn default() -> Self {
        AllocSection { gains: None, snr_db: 10.0, db_scale: DbScale::Amplitude }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub taus: Vec<f64>,
    pub snr_db: Grid,
    pub n: usize,
    pub pulse: PulseFamily,
    pub alpha: f64,
    pub period: f64,
    pub span: f64,
    pub trials: usize,
    pub seed: u64,
    pub cp_len: Option<usize>,
    pub waterfilling: bool,
    /// Adaptive loading from the threshold table; otherwise `fixed_scheme`.
    pub loading: bool,
    pub fixed_scheme: ModScheme,
    /// Threshold CSV; the bundled reference table when absent.
    pub thresholds: Option<PathBuf>,
    pub frames_per_trial: usize,
    pub colored_noise: bool,
    pub db_scale: DbScale,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            taus: vec![1.0, 0.9, 0.8, 0.7, 0.6],
            snr_db: Grid::Range { start: 0.0, stop: 20.0, step: 2.0 },
            n: 1024,
            pulse: PulseFamily::Srrc,
            alpha: 0.3,
            period: 1.0,
            span: PulseSpec::DEFAULT_SPAN,
            trials: 200,
            seed: 1,
            cp_len: None,
            waterfilling: true,
            loading: true,
            fixed_scheme: ModScheme::Qam16,
            thresholds: None,
            frames_per_trial: 8,
            colored_noise: false,
            db_scale: DbScale::Amplitude,
        }
    }
}

impl SimSection {
    pub fn spec(&self) -> Result<PulseSpec> {
        pulse_spec(self.pulse, self.alpha, self.period, self.span)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub channel: ChannelSection,
    pub capacity: CapacitySection,
    pub baseline: BaselineConfig,
    pub alloc: AllocSection,
    pub sim: SimSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, file: &Path) -> Result<Self> {
        let err = |key: String, e: toml::de::Error| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            CliError::Config { file: file.to_path_buf(), key, line, message: e.message().to_string() }
        };
        let de = toml::Deserializer::parse(text).map_err(|e| err(String::new(), e))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            err(key, e.into_inner())
        })
    }
}

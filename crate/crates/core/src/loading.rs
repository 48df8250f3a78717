//! Baseline AWGN throughput per scheme, threshold tables, and adaptive
//! per-carrier bit loading.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::check;
use crate::modem::{bits_to_label, push_label_bits, ModScheme, SymbolVector};
use crate::rng::stream;
use crate::snr::DbScale;
use crate::{Error, Result};

const REFERENCE_TABLE: &str = include_str!("../fixtures/thresholds_reference.csv");

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEntry {
    #[serde(rename = "lower_dB")]
    pub lower_db: f64,
    pub scheme: ModScheme,
}

/// Ordered (lower bound, scheme) pairs; bounds are inclusive lower edges.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdTable {
    entries: Vec<ThresholdEntry>,
}

impl ThresholdTable {
    pub fn new(entries: Vec<ThresholdEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::NonMonotone("table has no entries".into()));
        }
        for w in entries.windows(2) {
            if !(w[1].lower_db > w[0].lower_db) {
                return Err(Error::NonMonotone(format!(
                    "bound {} does not exceed {}",
                    w[1].lower_db, w[0].lower_db
                )));
            }
            if w[1].scheme.bits_per_symbol() <= w[0].scheme.bits_per_symbol() {
                return Err(Error::NonMonotone(format!("{} follows {}", w[1].scheme, w[0].scheme)));
            }
        }
        Ok(ThresholdTable { entries })
    }

    /// Bundled reference table (dB on the amplitude scale).
    pub fn reference() -> Self {
        Self::read_csv(REFERENCE_TABLE.as_bytes()).expect("bundled reference table is valid")
    }

    pub fn entries(&self) -> &[ThresholdEntry] {
        &self.entries
    }

    /// Finite crossover bounds, skipping a leading −∞.
    pub fn bounds(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.lower_db).filter(|b| b.is_finite()).collect()
    }

    /// Highest scheme whose lower bound is ≤ `db`; the first scheme below all bounds.
    pub fn lookup(&self, db: f64) -> ModScheme {
        self.entries
            .iter()
            .rev()
            .find(|e| e.lower_db <= db)
            .unwrap_or(&self.entries[0])
            .scheme
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let entries = r.deserialize().collect::<std::result::Result<Vec<ThresholdEntry>, _>>()?;
        Self::new(entries)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["lower_dB", "scheme"])?;
        for e in &self.entries {
            w.write_record([e.lower_db.to_string(), e.scheme.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl<'de> Deserialize<'de> for ThresholdTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            entries: Vec<ThresholdEntry>,
        }
        let raw = Raw::deserialize(d)?;
        ThresholdTable::new(raw.entries).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub snr_db: Vec<f64>,
    pub schemes: Vec<ModScheme>,
    pub trials: usize,
    pub symbols_per_packet: usize,
    pub seed: u64,
    pub db_scale: DbScale,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            snr_db: (0..=72).map(|i| -2.0 + 0.25 * i as f64).collect(),
            schemes: ModScheme::ALL.to_vec(),
            trials: 10_000,
            symbols_per_packet: 8,
            seed: 7,
            db_scale: DbScale::Amplitude,
        }
    }
}

/// Mean throughput of one (scheme, SNR) cell in bits per symbol slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineCell {
    pub scheme: ModScheme,
    #[serde(rename = "snr_dB")]
    pub snr_db: f64,
    /// Packet goodput: bits of error-free packets only.
    pub throughput: f64,
    /// Raw count of correctly decided bits.
    pub correct_bits: f64,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineCurve {
    pub cells: Vec<BaselineCell>,
}

impl BaselineCurve {
    pub fn cell(&self, scheme: ModScheme, snr_db: f64) -> Option<&BaselineCell> {
        self.cells.iter().find(|c| c.scheme == scheme && c.snr_db == snr_db)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv_writer(out);
        w.write_record(["scheme", "snr_dB", "throughput", "correct_bits", "trials", "seed"])?;
        for c in &self.cells {
            w.write_record([
                c.scheme.to_string(),
                c.snr_db.to_string(),
                c.throughput.to_string(),
                c.correct_bits.to_string(),
                c.trials.to_string(),
                c.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let cells = r.deserialize().collect::<std::result::Result<Vec<BaselineCell>, _>>()?;
        Ok(BaselineCurve { cells })
    }
}

/// Sends random packets over AWGN for every (scheme, SNR) cell.
///
/// Each cell draws from its own stream keyed by (seed, scheme, SNR index),
/// so the result does not depend on scheduling.
pub fn baseline_throughput(cfg: &BaselineConfig) -> Result<BaselineCurve> {
    check(cfg.trials >= 1, "trials", cfg.trials as f64, "need at least one trial")?;
    check(cfg.symbols_per_packet >= 1, "symbols_per_packet", cfg.symbols_per_packet as f64, "packets need a symbol")?;
    if cfg.snr_db.is_empty() {
        return Err(Error::EmptyGrid("SNR"));
    }
    if cfg.schemes.is_empty() {
        return Err(Error::EmptyGrid("scheme"));
    }
    let jobs: Vec<(ModScheme, usize, f64)> = cfg
        .schemes
        .iter()
        .flat_map(|&s| cfg.snr_db.iter().enumerate().map(move |(i, &db)| (s, i, db)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(scheme, idx, db)| baseline_cell(cfg, scheme, idx, db))
        .collect();
    Ok(BaselineCurve { cells })
}

fn baseline_cell(cfg: &BaselineConfig, scheme: ModScheme, snr_index: usize, snr_db: f64) -> BaselineCell {
    let c = scheme.constellation();
    let bps = scheme.bits_per_symbol() as u32;
    let sigma = (0.5 / cfg.db_scale.to_linear(snr_db)).sqrt();
    let mut rng = stream(cfg.seed, scheme.index() as u64, snr_index as u64);
    let mut good = 0u64;
    let mut correct = 0u64;
    for _ in 0..cfg.trials {
        let mut clean = true;
        for _ in 0..cfg.symbols_per_packet {
            let sent = rng.random_range(0..1u32 << bps);
            let n: [f64; 2] = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let y = c.point(sent) + Complex64::new(n[0], n[1]) * sigma;
            let errors = (c.decide(y) ^ sent).count_ones();
            correct += u64::from(bps - errors);
            clean &= errors == 0;
        }
        if clean {
            good += u64::from(bps) * cfg.symbols_per_packet as u64;
        }
    }
    let slots = (cfg.trials * cfg.symbols_per_packet) as f64;
    BaselineCell {
        scheme,
        snr_db,
        throughput: good as f64 / slots,
        correct_bits: correct as f64 / slots,
        trials: cfg.trials,
        seed: cfg.seed,
    }
}

/// Picks the best-goodput scheme at each grid SNR (ties to fewer bits) and
/// places each switch where the two goodput curves cross, by linear
/// interpolation between neighbouring grid points.
pub fn build_thresholds(curve: &BaselineCurve) -> Result<ThresholdTable> {
    let mut schemes: Vec<ModScheme> = curve.cells.iter().map(|c| c.scheme).collect();
    schemes.sort();
    schemes.dedup();
    let mut grid: Vec<f64> = curve.cells.iter().map(|c| c.snr_db).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    if grid.is_empty() {
        return Err(Error::EmptyGrid("SNR"));
    }
    let goodput = |s: ModScheme, db: f64| -> Result<f64> {
        curve.cell(s, db).map(|c| c.throughput).ok_or(Error::MissingScheme(s))
    };

    let mut winners = Vec::with_capacity(grid.len());
    for &db in &grid {
        let mut best = schemes[0];
        let mut best_v = goodput(best, db)?;
        for &s in &schemes[1..] {
            let v = goodput(s, db)?;
            if v > best_v {
                best = s;
                best_v = v;
            }
        }
        winners.push(best);
    }

    let mut entries = vec![ThresholdEntry { lower_db: f64::NEG_INFINITY, scheme: winners[0] }];
    for i in 1..grid.len() {
        let (prev, next) = (winners[i - 1], winners[i]);
        if prev == next {
            continue;
        }
        let (x0, x1) = (grid[i - 1], grid[i]);
        let d0 = goodput(next, x0)? - goodput(prev, x0)?;
        let d1 = goodput(next, x1)? - goodput(prev, x1)?;
        let bound = if d1 > d0 && d0 <= 0.0 { x0 + (x1 - x0) * (-d0) / (d1 - d0) } else { 0.5 * (x0 + x1) };
        entries.push(ThresholdEntry { lower_db: bound, scheme: next });
    }
    ThresholdTable::new(entries)
}

/// Scheme per carrier from its linear SNR; zero-SNR carriers are disabled.
pub fn assign_schemes(carrier_snrs: &[f64], table: &ThresholdTable, scale: DbScale) -> Vec<Option<ModScheme>> {
    carrier_snrs
        .iter()
        .map(|&g| if g > 0.0 { Some(table.lookup(scale.to_db(g))) } else { None })
        .collect()
}

/// OFDM frames produced by [`loading_tx`].
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedFrames {
    pub frames: Vec<SymbolVector>,
    /// Number of payload bits before zero padding.
    pub payload_len: usize,
}

/// Bits carried by one frame under `schemes`.
pub fn bits_per_frame(schemes: &[Option<ModScheme>]) -> usize {
    schemes.iter().flatten().map(|s| s.bits_per_symbol()).sum()
}

/// Round-robin over carriers, taking bits_per_symbol bits for each active
/// carrier; disabled carriers carry zero. The last frame is zero-padded.
pub fn loading_tx(bits: &[bool], schemes: &[Option<ModScheme>]) -> Result<LoadedFrames> {
    let per_frame = bits_per_frame(schemes);
    if per_frame == 0 {
        return Err(Error::NoUsableCarrier);
    }
    let n_frames = bits.len().div_ceil(per_frame);
    let mut padded = bits.to_vec();
    padded.resize(n_frames * per_frame, false);
    let mut frames = Vec::with_capacity(n_frames);
    let mut pos = 0;
    for _ in 0..n_frames {
        let mut values = Vec::with_capacity(schemes.len());
        for scheme in schemes {
            match scheme {
                Some(s) => {
                    let bps = s.bits_per_symbol();
                    values.push(s.constellation().point(bits_to_label(&padded[pos..pos + bps])));
                    pos += bps;
                }
                None => values.push(Complex64::new(0.0, 0.0)),
            }
        }
        frames.push(SymbolVector::from_parts(values, schemes.to_vec())?);
    }
    Ok(LoadedFrames { frames, payload_len: bits.len() })
}

/// Inverse of [`loading_tx`]: demodulates active carriers frame by frame
/// and drops the padding. The caller must pass the same scheme map.
pub fn loading_rx(frames: &[Vec<Complex64>], schemes: &[Option<ModScheme>], payload_len: usize) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(frames.len() * bits_per_frame(schemes));
    for frame in frames {
        if frame.len() != schemes.len() {
            return Err(Error::LengthMismatch { expected: schemes.len(), actual: frame.len() });
        }
        for (&y, scheme) in frame.iter().zip(schemes) {
            if let Some(s) = scheme {
                push_label_bits(s.constellation().decide(y), s.bits_per_symbol(), &mut bits);
            }
        }
    }
    if bits.len() < payload_len {
        return Err(Error::LengthMismatch { expected: payload_len, actual: bits.len() });
    }
    bits.truncate(payload_len);
    Ok(bits)
}

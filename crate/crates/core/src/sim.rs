//! Monte Carlo OFDM over the FTN ISI channel.
//!
//! Per trial a burst of `frames_per_trial` OFDM frames goes through the
//! chain: loading, √P scaling, unitary IFFT, cyclic prefix, convolution
//! with the composite taps, AWGN, FFT, one-tap equalization, demodulation.
//! Each active carrier's symbols across the burst form one packet, and
//! goodput counts only packets decoded without error.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::allocation::{apply_allocation, waterfill, SubcarrierSnrs};
use crate::error::check;
use crate::isi::{composite_taps, subcarrier_gains, ChannelTaps, FtnParams, SubcarrierGains};
use crate::loading::{assign_schemes, bits_per_frame, loading_rx, loading_tx, ThresholdTable};
use crate::modem::ModScheme;
use crate::pulses::PulseSpec;
use crate::rng::stream;
use crate::snr::DbScale;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemePolicy {
    /// Per-carrier scheme from a threshold table.
    Adaptive(ThresholdTable),
    /// The same scheme on every usable carrier.
    Fixed(ModScheme),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub snr_db: Vec<f64>,
    pub n: usize,
    pub pulse: PulseSpec,
    pub tau: f64,
    pub trials: usize,
    pub seed: u64,
    /// Cyclic prefix length in samples; `None` uses the channel memory.
    pub cp_len: Option<usize>,
    pub waterfilling: bool,
    pub policy: SchemePolicy,
    /// OFDM frames per trial, which is also the packet length in symbols.
    pub frames_per_trial: usize,
    /// Shape the noise by √H per carrier instead of leaving it white.
    pub colored_noise: bool,
    pub db_scale: DbScale,
}

impl SimConfig {
    /// WF and adaptive loading on, SRRC α=0.3, N=1024, 200 trials.
    pub fn new(tau: f64, snr_db: Vec<f64>) -> Result<Self> {
        Ok(SimConfig {
            snr_db,
            n: 1024,
            pulse: PulseSpec::srrc(0.3)?,
            tau,
            trials: 200,
            seed: 1,
            cp_len: None,
            waterfilling: true,
            policy: SchemePolicy::Adaptive(ThresholdTable::reference()),
            frames_per_trial: 8,
            colored_noise: false,
            db_scale: DbScale::Amplitude,
        })
    }

    /// Short hex digest of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    fn validate(&self) -> Result<()> {
        check(self.trials >= 1, "trials", self.trials as f64, "need at least one trial")?;
        check(self.frames_per_trial >= 1, "frames_per_trial", self.frames_per_trial as f64, "need at least one frame")?;
        if self.snr_db.is_empty() {
            return Err(Error::EmptyGrid("SNR"));
        }
        Ok(())
    }
}

/// The noiseless part of the chain for one channel realisation.
pub struct OfdmLink {
    n: usize,
    cp: usize,
    taps: ChannelTaps,
    gains: SubcarrierGains,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl OfdmLink {
    pub fn new(pulse: &PulseSpec, tau: f64, n: usize, cp_len: Option<usize>) -> Result<Self> {
        let params = FtnParams::new(tau, *pulse, n)?;
        let taps = composite_taps(&params);
        let gains = subcarrier_gains(&taps, n)?;
        let required = taps.len() - 1;
        let cp = cp_len.unwrap_or(required);
        if cp < required {
            return Err(Error::CyclicPrefix { cp, required });
        }
        check(cp <= n, "cp_len", cp as f64, "cyclic prefix cannot exceed the frame")?;
        let mut planner = FftPlanner::new();
        Ok(OfdmLink { n, cp, fft: planner.plan_fft_forward(n), ifft: planner.plan_fft_inverse(n), taps, gains })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cp_len(&self) -> usize {
        self.cp
    }

    pub fn taps(&self) -> &ChannelTaps {
        &self.taps
    }

    pub fn gains(&self) -> &SubcarrierGains {
        &self.gains
    }

    /// Samples per frame including the prefix.
    pub fn frame_len(&self) -> usize {
        self.n + self.cp
    }

    /// Scales by √P, applies the unitary IFFT and prepends the prefix.
    pub fn transmit(&self, frames: &[Vec<Complex64>], powers: &[f64]) -> Vec<Complex64> {
        let scale = (self.n as f64).sqrt().recip();
        let mut out = Vec::with_capacity(frames.len() * self.frame_len());
        for frame in frames {
            let mut buf: Vec<Complex64> = frame.iter().zip(powers).map(|(s, p)| s * p.sqrt() * scale).collect();
            self.ifft.process(&mut buf);
            out.extend_from_slice(&buf[self.n - self.cp..]);
            out.extend_from_slice(&buf);
        }
        out
    }

    /// Linear convolution with the taps delayed by their centre index,
    /// truncated to the input length.
    pub fn channel(&self, x: &[Complex64]) -> Vec<Complex64> {
        let h = self.taps.taps();
        (0..x.len())
            .map(|m| {
                let lo = m.saturating_sub(h.len() - 1);
                (lo..=m).map(|j| x[j] * h[m - j]).sum()
            })
            .collect()
    }

    /// Strips each prefix, undoes the centre delay and returns Y = FFT(window).
    pub fn receive(&self, r: &[Complex64], n_frames: usize) -> Vec<Vec<Complex64>> {
        let scale = (self.n as f64).sqrt().recip();
        let delay = self.taps.center();
        (0..n_frames)
            .map(|f| {
                let start = f * self.frame_len() + self.cp;
                let window = &r[start..start + self.n];
                let mut buf: Vec<Complex64> = (0..self.n).map(|j| window[(j + delay) % self.n] * scale).collect();
                self.fft.process(&mut buf);
                buf
            })
            .collect()
    }
}

/// ŷ = y / (√P·H) for an active carrier.
pub fn one_tap_equalize(y: Complex64, h: Complex64, power: f64) -> Result<Complex64> {
    if !(power > 0.0) || h.norm() == 0.0 {
        return Err(Error::InactiveCarrier { gain: h.norm(), power });
    }
    Ok(y / (h * power.sqrt()))
}

/// Circularly symmetric complex Gaussian noise with per-sample variance 1/snr.
pub fn awgn<R: Rng>(len: usize, snr_linear: f64, rng: &mut R) -> Result<Vec<Complex64>> {
    check(snr_linear > 0.0, "snr", snr_linear, "linear SNR must be positive")?;
    let sigma = (0.5 / snr_linear).sqrt();
    Ok((0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * sigma
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputRow {
    #[serde(rename = "snr_dB")]
    pub snr_db: f64,
    /// Mean goodput in bits per second.
    pub throughput_bps: f64,
    #[serde(rename = "stderr")]
    pub std_err: f64,
    /// Mean raw correct-bit rate in bits per second.
    pub correct_bps: f64,
    /// Mean goodput bits per OFDM frame.
    pub bits_per_frame: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputCurve {
    pub config_hash: String,
    pub rows: Vec<ThroughputRow>,
}

impl ThroughputCurve {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["snr_dB", "throughput_bps", "stderr", "correct_bps", "bits_per_frame", "trials", "config_hash"])?;
        for r in &self.rows {
            w.write_record([
                r.snr_db.to_string(),
                r.throughput_bps.to_string(),
                r.std_err.to_string(),
                r.correct_bps.to_string(),
                r.bits_per_frame.to_string(),
                r.trials.to_string(),
                self.config_hash.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Carrier plan at one SNR: powers and schemes (None = disabled).
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierPlan {
    pub powers: Vec<f64>,
    pub schemes: Vec<Option<ModScheme>>,
}

pub fn plan_carriers(cfg: &SimConfig, gains: &SubcarrierGains, snr_linear: f64) -> Result<CarrierPlan> {
    let gammas = gains.carrier_snrs(snr_linear);
    let powers = if cfg.waterfilling {
        match waterfill(&SubcarrierSnrs::new(gammas.clone())?) {
            Ok(a) => a.powers,
            Err(Error::NoUsableCarrier) => vec![0.0; gammas.len()],
            Err(e) => return Err(e),
        }
    } else {
        vec![1.0; gammas.len()]
    };
    let effective = apply_allocation(&gammas, &powers)?;
    let schemes = match &cfg.policy {
        SchemePolicy::Adaptive(table) => assign_schemes(&effective, table, cfg.db_scale),
        SchemePolicy::Fixed(s) => effective.iter().map(|&g| (g > 0.0).then_some(*s)).collect(),
    };
    Ok(CarrierPlan { powers, schemes })
}

struct TrialOutcome {
    good_bits: u64,
    correct_bits: u64,
}

fn run_trial<R: Rng>(
    cfg: &SimConfig,
    link: &OfdmLink,
    plan: &CarrierPlan,
    snr_linear: f64,
    rng: &mut R,
) -> Result<TrialOutcome> {
    let per_frame = bits_per_frame(&plan.schemes);
    if per_frame == 0 {
        return Ok(TrialOutcome { good_bits: 0, correct_bits: 0 });
    }
    let s = cfg.frames_per_trial;
    let bits: Vec<bool> = (0..per_frame * s).map(|_| rng.random()).collect();
    let loaded = loading_tx(&bits, &plan.schemes)?;
    let frames: Vec<Vec<Complex64>> = loaded.frames.into_iter().map(|f| f.into_values()).collect();

    let tx = link.transmit(&frames, &plan.powers);
    let mut rx = link.channel(&tx);
    if !cfg.colored_noise {
        for (r, w) in rx.iter_mut().zip(awgn(tx.len(), snr_linear, rng)?) {
            *r += w;
        }
    }
    let mut freq = link.receive(&rx, s);
    if cfg.colored_noise {
        for y in freq.iter_mut() {
            let w = awgn(link.n, snr_linear, rng)?;
            for ((yi, wi), h) in y.iter_mut().zip(w).zip(link.gains.gains()) {
                *yi += wi * h.re.max(0.0).sqrt();
            }
        }
    }

    let h = link.gains.gains();
    let mut equalized = Vec::with_capacity(s);
    for y in &freq {
        let frame = y
            .iter()
            .enumerate()
            .map(|(i, &yi)| match plan.schemes[i] {
                Some(_) => one_tap_equalize(yi, h[i], plan.powers[i]),
                None => Ok(Complex64::new(0.0, 0.0)),
            })
            .collect::<Result<Vec<_>>>()?;
        equalized.push(frame);
    }
    let decided = loading_rx(&equalized, &plan.schemes, loaded.payload_len)?;

    let correct_bits = bits.iter().zip(&decided).filter(|(a, b)| a == b).count() as u64;
    let mut good_bits = 0u64;
    let mut offset = 0;
    for scheme in plan.schemes.iter().flatten() {
        let bps = scheme.bits_per_symbol();
        let clean = (0..s).all(|f| {
            let at = f * per_frame + offset;
            bits[at..at + bps] == decided[at..at + bps]
        });
        if clean {
            good_bits += (bps * s) as u64;
        }
        offset += bps;
    }
    Ok(TrialOutcome { good_bits, correct_bits })
}

/// Runs every (SNR, trial) pair; trial streams are keyed by
/// (seed, SNR index, trial index) and reduced in index order.
pub fn run_ofdm_ftn(cfg: &SimConfig) -> Result<ThroughputCurve> {
    cfg.validate()?;
    let link = OfdmLink::new(&cfg.pulse, cfg.tau, cfg.n, cfg.cp_len)?;
    let plans = cfg
        .snr_db
        .iter()
        .map(|&db| plan_carriers(cfg, &link.gains, cfg.db_scale.to_linear(db)))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize)> =
        (0..cfg.snr_db.len()).flat_map(|i| (0..cfg.trials).map(move |t| (i, t))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(i, t)| {
            let mut rng = stream(cfg.seed, i as u64, t as u64);
            run_trial(cfg, &link, &plans[i], cfg.db_scale.to_linear(cfg.snr_db[i]), &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let seconds = (cfg.frames_per_trial * link.frame_len()) as f64 * cfg.tau * cfg.pulse.period();
    let rows = cfg
        .snr_db
        .iter()
        .zip(outcomes.chunks(cfg.trials))
        .map(|(&snr_db, chunk)| {
            let rates: Vec<f64> = chunk.iter().map(|o| o.good_bits as f64 / seconds).collect();
            let n = rates.len() as f64;
            let mean = rates.iter().sum::<f64>() / n;
            let std_err = if rates.len() > 1 {
                (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
            } else {
                0.0
            };
            let correct = chunk.iter().map(|o| o.correct_bits as f64).sum::<f64>() / n / seconds;
            let per_frame = chunk.iter().map(|o| o.good_bits as f64).sum::<f64>() / n / cfg.frames_per_trial as f64;
            ThroughputRow {
                snr_db,
                throughput_bps: mean,
                std_err,
                correct_bps: correct,
                bits_per_frame: per_frame,
                trials: cfg.trials,
            }
        })
        .collect();
    Ok(ThroughputCurve { config_hash: cfg.hash(), rows })
}

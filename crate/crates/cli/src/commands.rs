use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use ftn_core::allocation::{apply_allocation, waterfill, SubcarrierSnrs};
use ftn_core::capacity::{capacity_curve, CapacityParams, Expression};
use ftn_core::isi::{composite_taps, invertible, subcarrier_gains, FtnParams};
use ftn_core::loading::{baseline_throughput, build_thresholds, BaselineConfig, BaselineCurve, ThresholdTable};
use ftn_core::modem::ModScheme;
use ftn_core::pulses::{PulseFamily, PulseSpec};
use ftn_core::sim::{run_ofdm_ftn, SchemePolicy, SimConfig};
use serde_json::json;

use crate::config::{ExperimentConfig, SimSection};
use crate::error::{CliError, Result};
use crate::output::OutputDir;
use crate::{AllocArgs, BaselineArgs, CapacityArgs, ChannelArgs, ConstellationArgs, PulseArgs, SimArgs, ThresholdsArgs};

pub struct Context {
    pub config: ExperimentConfig,
    pub out_dir: PathBuf,
    pub timestamp: Option<String>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

pub fn channel(ctx: Context, a: ChannelArgs) -> Result<()> {
    let mut sec = ctx.config.channel.clone();
    set(&mut sec.pulse, a.pulse);
    set(&mut sec.alpha, a.alpha);
    set(&mut sec.tau, a.tau);
    set(&mut sec.period, a.period);
    set(&mut sec.span, a.span);
    set(&mut sec.n, a.n);
    let params = FtnParams::new(sec.tau, sec.spec()?, sec.n)?;
    let taps = composite_taps(&params);
    let gains = subcarrier_gains(&taps, sec.n)?;

    let mut out = OutputDir::create(&ctx.out_dir)?;
    out.csv("taps.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["n", "h"])?;
        let half = taps.center() as i64;
        for n in -half..=half {
            w.write_record([n.to_string(), taps.at(n).to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.csv("gains.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["carrier", "omega", "re", "im", "magnitude"])?;
        for (i, h) in gains.gains().iter().enumerate() {
            let omega = 2.0 * std::f64::consts::PI * i as f64 / sec.n as f64;
            w.write_record([i.to_string(), omega.to_string(), h.re.to_string(), h.im.to_string(), h.norm().to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let summary = json!({
        "taps": taps.len(),
        "center": taps.center(),
        "min_magnitude": gains.min_magnitude(),
        "invertible": (sec.pulse == PulseFamily::Srrc).then(|| invertible(sec.alpha, sec.tau)),
    });
    out.finish("channel", &sec, None, summary, ctx.timestamp.as_deref())
}

pub fn capacity(ctx: Context, a: CapacityArgs) -> Result<()> {
    let mut sec = ctx.config.capacity.clone();
    if let Some(e) = a.expr {
        sec.expr = e.name().to_string();
    }
    set(&mut sec.snr_db, a.snr_db);
    set(&mut sec.taus, a.tau);
    set(&mut sec.alpha, a.alpha);
    set(&mut sec.period, a.period);
    let expr: Expression = sec.expr.parse().map_err(|e: ftn_core::Error| CliError::Usage(e.to_string()))?;
    let base = CapacityParams::new(1.0, sec.period, sec.alpha, 1.0)?;
    let rows = capacity_curve(expr, &sec.snr_db.values()?, &sec.taus, &base)?;

    let mut out = OutputDir::create(&ctx.out_dir)?;
    out.csv("capacity.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["expr", "tau", "snr_dB", "capacity_bps", "error_estimate"])?;
        for r in &rows {
            w.write_record([
                expr.name().to_string(),
                r.tau.to_string(),
                r.snr_db.to_string(),
                r.capacity.to_string(),
                r.error_estimate.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let summary = json!({ "rows": rows.len(), "units": if expr == Expression::Dt { "bits per use" } else { "bits/s" } });
    out.finish("capacity", &sec, None, summary, ctx.timestamp.as_deref())
}

fn baseline_config(base: &BaselineConfig, a: BaselineArgs) -> Result<BaselineConfig> {
    let mut cfg = base.clone();
    if let Some(g) = a.snr_db {
        cfg.snr_db = g.values()?;
    }
    set(&mut cfg.trials, a.trials);
    set(&mut cfg.seed, a.seed);
    set(&mut cfg.symbols_per_packet, a.symbols_per_packet);
    set(&mut cfg.schemes, a.schemes);
    set(&mut cfg.db_scale, a.db_scale);
    Ok(cfg)
}

pub fn baseline(ctx: Context, a: BaselineArgs) -> Result<()> {
    let cfg = baseline_config(&ctx.config.baseline, a)?;
    let curve = baseline_throughput(&cfg)?;
    let mut out = OutputDir::create(&ctx.out_dir)?;
    out.csv("baseline.csv", |buf| curve.write_csv(buf))?;
    let summary = json!({ "cells": curve.cells.len() });
    out.finish("baseline", &cfg, Some(cfg.seed), summary, ctx.timestamp.as_deref())
}

fn read_baseline(path: &Path) -> Result<BaselineCurve> {
    let file = File::open(path).map_err(CliError::io(path))?;
    BaselineCurve::read_csv(file).map_err(|e| match e {
        ftn_core::Error::Csv(source) => CliError::Csv { path: path.to_path_buf(), source },
        other => other.into(),
    })
}

pub fn thresholds(ctx: Context, a: ThresholdsArgs) -> Result<()> {
    let mut out = OutputDir::create(&ctx.out_dir)?;
    let (curve, cfg) = match &a.baseline {
        Some(path) => (read_baseline(path)?, None),
        None => {
            let cfg = baseline_config(&ctx.config.baseline, a.run)?;
            let curve = baseline_throughput(&cfg)?;
            out.csv("baseline.csv", |buf| curve.write_csv(buf))?;
            (curve, Some(cfg))
        }
    };
    let table = build_thresholds(&curve)?;
    out.csv("thresholds.csv", |buf| table.write_csv(buf))?;
    let reference = ThresholdTable::reference().bounds();
    let summary = json!({
        "bounds_dB": table.bounds(),
        "schemes": table.entries().iter().map(|e| e.scheme.name()).collect::<Vec<_>>(),
        "reference_bounds_dB": reference,
        "baseline_file": a.baseline,
    });
    let seed = cfg.as_ref().map(|c| c.seed);
    out.finish("thresholds", &cfg, seed, summary, ctx.timestamp.as_deref())
}

/// |H[i]| from the `magnitude` (as written by `channel`) or `gain` column.
fn read_gains(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut r = csv::Reader::from_reader(file);
    let headers = r.headers().map_err(CliError::csv(path))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "magnitude")
        .or_else(|| headers.iter().position(|h| h == "gain"))
        .ok_or_else(|| CliError::Usage(format!("{}: no `magnitude` or `gain` column", path.display())))?;
    let mut gains = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec.map_err(CliError::csv(path))?;
        let field = rec.get(col).unwrap_or("");
        let g: f64 = field.trim().parse().map_err(|_| {
            CliError::Usage(format!("{}: row {}: `{field}` is not a number", path.display(), row + 2))
        })?;
        gains.push(g);
    }
    Ok(gains)
}

pub fn alloc(ctx: Context, a: AllocArgs) -> Result<()> {
    let mut sec = ctx.config.alloc.clone();
    if a.gains.is_some() {
        sec.gains = a.gains;
    }
    set(&mut sec.snr_db, a.snr_db);
    set(&mut sec.db_scale, a.db_scale);
    let path = sec.gains.clone().ok_or_else(|| CliError::Usage("no gains file: pass --gains or set [alloc] gains".into()))?;
    let gains = read_gains(&path)?;
    let snr = sec.db_scale.to_linear(sec.snr_db);
    let gammas: Vec<f64> = gains.iter().map(|g| snr * g * g).collect();
    let allocation = waterfill(&SubcarrierSnrs::new(gammas.clone())?)?;
    let effective = apply_allocation(&gammas, &allocation.powers)?;

    let mut out = OutputDir::create(&ctx.out_dir)?;
    out.csv("powers.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["carrier", "gain", "gamma", "power", "effective_snr"])?;
        for i in 0..gains.len() {
            w.write_record([
                i.to_string(),
                gains[i].to_string(),
                gammas[i].to_string(),
                allocation.powers[i].to_string(),
                effective[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let summary = json!({
        "water_level": allocation.water_level(),
        "cutoff": allocation.cutoff,
        "active": allocation.powers.iter().filter(|&&p| p > 0.0).count(),
        "carriers": gains.len(),
    });
    out.finish("alloc", &sec, None, summary, ctx.timestamp.as_deref())
}

fn sim_config(sec: &SimSection, table: &ThresholdTable, tau: f64, waterfilling: bool, loading: bool) -> Result<SimConfig> {
    Ok(SimConfig {
        snr_db: sec.snr_db.values()?,
        n: sec.n,
        pulse: sec.spec()?,
        tau,
        trials: sec.trials,
        seed: sec.seed,
        cp_len: sec.cp_len,
        waterfilling,
        policy: if loading { SchemePolicy::Adaptive(table.clone()) } else { SchemePolicy::Fixed(sec.fixed_scheme) },
        frames_per_trial: sec.frames_per_trial,
        colored_noise: sec.colored_noise,
        db_scale: sec.db_scale,
    })
}

fn on_off(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

pub fn sim(ctx: Context, a: SimArgs) -> Result<()> {
    let mut sec = ctx.config.sim.clone();
    set(&mut sec.taus, a.tau);
    set(&mut sec.snr_db, a.snr_db);
    set(&mut sec.trials, a.trials);
    set(&mut sec.seed, a.seed);
    set(&mut sec.n, a.n);
    set(&mut sec.pulse, a.pulse);
    set(&mut sec.alpha, a.alpha);
    set(&mut sec.waterfilling, a.waterfilling);
    set(&mut sec.loading, a.loading);
    set(&mut sec.fixed_scheme, a.fixed_scheme);
    set(&mut sec.frames_per_trial, a.frames_per_trial);
    set(&mut sec.colored_noise, a.colored_noise);
    set(&mut sec.db_scale, a.db_scale);
    if a.thresholds.is_some() {
        sec.thresholds = a.thresholds;
    }
    if a.cp_len.is_some() {
        sec.cp_len = a.cp_len;
    }
    if sec.taus.is_empty() {
        return Err(CliError::Usage("no tau values given".into()));
    }
    let table = match &sec.thresholds {
        Some(path) => {
            let file = File::open(path).map_err(CliError::io(path))?;
            ThresholdTable::read_csv(file)?
        }
        None => ThresholdTable::reference(),
    };
    let combos: Vec<(bool, bool)> = if a.compare {
        vec![(true, true), (true, false), (false, true), (false, false)]
    } else {
        vec![(sec.waterfilling, sec.loading)]
    };

    let mut out = OutputDir::create(&ctx.out_dir)?;
    let mut runs = Vec::new();
    for &tau in &sec.taus {
        for &(wf, loading) in &combos {
            let cfg = sim_config(&sec, &table, tau, wf, loading)?;
            let curve = run_ofdm_ftn(&cfg)?;
            let name = if a.compare {
                format!("throughput_tau{tau}_wf-{}_loading-{}.csv", on_off(wf), on_off(loading))
            } else {
                format!("throughput_tau{tau}.csv")
            };
            out.csv(&name, |buf| curve.write_csv(buf))?;
            runs.push(json!({
                "file": name,
                "tau": tau,
                "waterfilling": wf,
                "loading": loading,
                "config_hash": curve.config_hash,
            }));
        }
    }
    let summary = json!({ "compare": a.compare, "runs": runs, "fixed_scheme": ModScheme::name(sec.fixed_scheme) });
    out.finish("sim", &sec, Some(sec.seed), summary, ctx.timestamp.as_deref())
}

pub fn pulse(ctx: Context, a: PulseArgs) -> Result<()> {
    let spec = PulseSpec::new(a.pulse, a.alpha, a.period, a.span)?;
    let composite = spec.composite();
    let spacing = a.period / a.samples_per_period as f64;
    let half = (a.span * a.samples_per_period as f64).floor() as i64;
    let mut out = OutputDir::create(&ctx.out_dir)?;
    out.csv("pulse_time.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["t", "pulse", "composite"])?;
        for k in -half..=half {
            let t = k as f64 * spacing;
            w.write_record([t.to_string(), spec.time(t).to_string(), composite.time(t).to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    out.csv("pulse_spectrum.csv", |buf| {
        let mut w = csv_writer(buf);
        w.write_record(["f", "pulse", "composite"])?;
        let m = a.freq_points.max(2);
        for k in 0..m {
            let f = (-2.0 + 4.0 * k as f64 / (m - 1) as f64) / a.period;
            w.write_record([f.to_string(), spec.ctft(f).to_string(), composite.ctft(f).to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    let summary = json!({ "pulse": spec, "composite": composite.family().name() });
    out.finish("pulse", &summary, None, json!({}), ctx.timestamp.as_deref())
}

pub fn constellation(ctx: Context, a: ConstellationArgs) -> Result<()> {
    let schemes: Vec<ModScheme> = a.scheme.map_or(ModScheme::ALL.to_vec(), |s| vec![s]);
    let mut out = OutputDir::create(&ctx.out_dir)?;
    for s in &schemes {
        out.csv(&format!("constellation_{}.csv", s.name()), |buf| s.constellation().write_csv(buf))?;
    }
    let names: Vec<&str> = schemes.iter().map(|s| s.name()).collect();
    out.finish("constellation", &names, None, json!({}), ctx.timestamp.as_deref())
}

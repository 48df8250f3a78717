use ftn_core::loading::{
    assign_schemes, baseline_throughput, bits_per_frame, build_thresholds, loading_rx, loading_tx, BaselineCell,
    BaselineConfig, BaselineCurve, ThresholdEntry, ThresholdTable,
};
use ftn_core::modem::ModScheme;
use ftn_core::snr::DbScale;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian tail Q(x) by Simpson's rule on the density.
fn q_func(x: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (x, x + 14.0);
    let h = (b - a) / n as f64;
    let pdf = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = pdf(a) + pdf(b);
    for i in 1..n {
        acc += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn small_config(snr_db: Vec<f64>, trials: usize) -> BaselineConfig {
    BaselineConfig { snr_db, trials, ..BaselineConfig::default() }
}

#[test]
fn high_and_low_snr_limits() {
    let curve = baseline_throughput(&small_config(vec![-30.0, 40.0], 500)).unwrap();
    for s in ModScheme::ALL {
        let bps = s.bits_per_symbol() as f64;
        let hi = curve.cell(s, 40.0).unwrap();
        assert_eq!(hi.throughput, bps);
        assert_eq!(hi.correct_bits, bps);
        let lo = curve.cell(s, -30.0).unwrap();
        assert!(lo.throughput < 0.02 * bps, "{s}: {}", lo.throughput);
        // Pure noise still gets half the bits right.
        assert!((lo.correct_bits - bps / 2.0).abs() < 0.05 * bps, "{s}: {}", lo.correct_bits);
    }
}

#[test]
fn qpsk_matches_gaussian_tail() {
    // Per-bit error Q(√snr) for unit-energy QPSK with noise variance 1/snr.
    let trials = 20_000;
    let dbs = vec![0.0, 2.0, 4.0, 6.0];
    let cfg = BaselineConfig { schemes: vec![ModScheme::Qpsk, ModScheme::Bpsk], ..small_config(dbs.clone(), trials) };
    let curve = baseline_throughput(&cfg).unwrap();
    let slots = (trials * cfg.symbols_per_packet) as f64;
    for db in dbs {
        let snr = DbScale::Amplitude.to_linear(db);
        let p = q_func(snr.sqrt());
        let cell = curve.cell(ModScheme::Qpsk, db).unwrap();
        let want_bits = 2.0 * (1.0 - p);
        let sd_bits = 2.0 * (p * (1.0 - p) / (2.0 * slots)).sqrt();
        assert!((cell.correct_bits - want_bits).abs() < 5.0 * sd_bits + 1e-12, "QPSK {db}: {} vs {want_bits}", cell.correct_bits);
        let ok = (1.0 - p).powi(2 * cfg.symbols_per_packet as i32);
        let want_good = 2.0 * ok;
        let sd_good = 2.0 * (ok * (1.0 - ok) / trials as f64).sqrt();
        assert!((cell.throughput - want_good).abs() < 5.0 * sd_good + 1e-12, "QPSK {db}: {} vs {want_good}", cell.throughput);

        let pb = q_func((2.0 * snr).sqrt());
        let bpsk = curve.cell(ModScheme::Bpsk, db).unwrap();
        let sd = (pb * (1.0 - pb) / slots).sqrt();
        assert!((bpsk.correct_bits - (1.0 - pb)).abs() < 5.0 * sd + 1e-12, "BPSK {db}");
    }
}

#[test]
fn goodput_rises_with_snr() {
    let dbs: Vec<f64> = (0..=9).map(|i| -2.0 + 2.0 * i as f64).collect();
    let curve = baseline_throughput(&small_config(dbs.clone(), 2000)).unwrap();
    for s in ModScheme::ALL {
        let v: Vec<f64> = dbs.iter().map(|&d| curve.cell(s, d).unwrap().throughput).collect();
        let bps = s.bits_per_symbol() as f64;
        for w in v.windows(2) {
            // Allow a little Monte Carlo jitter between independent cells.
            assert!(w[1] >= w[0] - 0.05 * bps, "{s}: {v:?}");
        }
        assert!(v[v.len() - 1] > v[0]);
    }
}

#[test]
fn baseline_is_deterministic_and_seeded() {
    let cfg = small_config(vec![3.0, 8.0], 300);
    let a = baseline_throughput(&cfg).unwrap();
    let b = baseline_throughput(&cfg).unwrap();
    assert_eq!(a, b);
    let c = baseline_throughput(&BaselineConfig { seed: 99, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn baseline_csv_round_trip() {
    let curve = baseline_throughput(&small_config(vec![-1.5, 4.25], 50)).unwrap();
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("scheme,snr_dB,throughput,correct_bits,trials,seed\n"));
    assert!(!text.contains('\r'));
    assert_eq!(BaselineCurve::read_csv(buf.as_slice()).unwrap(), curve);
}

#[test]
fn baseline_rejects_bad_config() {
    assert!(baseline_throughput(&small_config(vec![], 10)).is_err());
    assert!(baseline_throughput(&small_config(vec![1.0], 0)).is_err());
    let empty = BaselineConfig { schemes: vec![], ..small_config(vec![1.0], 10) };
    assert!(baseline_throughput(&empty).is_err());
}

/// Synthetic linear curves: BPSK 1, QPSK x − 3, 8QAM 2(x − 7), floored at 0.
fn synthetic(dbs: &[f64]) -> BaselineCurve {
    let mut cells = Vec::new();
    for s in [ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Qam8] {
        for &d in dbs {
            let v = match s {
                ModScheme::Bpsk => 1.0,
                ModScheme::Qpsk => (d - 3.0).max(0.0),
                _ => (2.0 * (d - 7.0)).max(0.0),
            };
            cells.push(BaselineCell { scheme: s, snr_db: d, throughput: v, correct_bits: v, trials: 1, seed: 0 });
        }
    }
    BaselineCurve { cells }
}

#[test]
fn thresholds_interpolate_crossings() {
    // QPSK beats BPSK from x = 4 and 8QAM beats QPSK from x = 11.
    let dbs: Vec<f64> = (0..=12).map(|i| i as f64 * 1.3).collect();
    let t = build_thresholds(&synthetic(&dbs)).unwrap();
    let schemes: Vec<_> = t.entries().iter().map(|e| e.scheme).collect();
    assert_eq!(schemes, vec![ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Qam8]);
    let b = t.bounds();
    assert!((b[0] - 4.0).abs() < 1e-12, "{b:?}");
    assert!((b[1] - 11.0).abs() < 1e-12, "{b:?}");
    assert_eq!(t.entries()[0].lower_db, f64::NEG_INFINITY);
}

#[test]
fn thresholds_from_simulated_baseline_are_ordered() {
    let dbs: Vec<f64> = (0..=36).map(|i| -2.0 + 0.5 * i as f64).collect();
    let curve = baseline_throughput(&small_config(dbs, 1500)).unwrap();
    let t = build_thresholds(&curve).unwrap();
    let b = t.bounds();
    assert_eq!(t.entries().len(), 6);
    assert!(b.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn threshold_csv_round_trip() {
    let dbs: Vec<f64> = (0..=12).map(|i| i as f64 * 1.3).collect();
    let t = build_thresholds(&synthetic(&dbs)).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    assert_eq!(ThresholdTable::read_csv(buf.as_slice()).unwrap(), t);
    assert!(ThresholdTable::read_csv("lower_dB,scheme\n0,QPSK\n-1,16QAM\n".as_bytes()).is_err());
}

#[test]
fn lookup_matches_linear_scan() {
    let t = ThresholdTable::reference();
    let entries = t.entries().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let db: f64 = rng.random_range(-10.0..20.0);
        let mut want = entries[0].scheme;
        for e in &entries {
            if db >= e.lower_db {
                want = e.scheme;
            }
        }
        assert_eq!(t.lookup(db), want);
    }
    for e in &entries[1..] {
        assert_eq!(t.lookup(e.lower_db), e.scheme);
    }
}

#[test]
fn assign_uses_requested_scale() {
    let t = ThresholdTable::reference();
    // 10^(7/5) is 7 dB on the amplitude axis and 14 dB on the power axis.
    let g = 10f64.powf(1.4);
    assert_eq!(assign_schemes(&[g], &t, DbScale::Amplitude), vec![Some(ModScheme::Qam16)]);
    assert_eq!(assign_schemes(&[g], &t, DbScale::Power), vec![Some(ModScheme::Qam64)]);
    assert_eq!(assign_schemes(&[0.0], &t, DbScale::Power), vec![None]);
}

#[test]
fn rx_rejects_wrong_frame_width() {
    let schemes = [Some(ModScheme::Qpsk); 3];
    let out = loading_tx(&[true; 10], &schemes).unwrap();
    let mut frames: Vec<_> = out.frames.iter().map(|f| f.values().to_vec()).collect();
    frames[0].pop();
    assert!(loading_rx(&frames, &schemes, out.payload_len).is_err());
}

fn scheme_map() -> impl Strategy<Value = Vec<Option<ModScheme>>> {
    let one = prop_oneof![Just(None), prop::sample::select(ModScheme::ALL.to_vec()).prop_map(Some)];
    prop::collection::vec(one, 1..40).prop_filter("needs an active carrier", |m| m.iter().any(Option::is_some))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn loading_round_trip(map in scheme_map(), seed in any::<u64>(), len in 0usize..600) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<bool> = (0..len).map(|_| rng.random()).collect();
        let out = loading_tx(&bits, &map).unwrap();
        prop_assert_eq!(out.frames.len(), len.div_ceil(bits_per_frame(&map)));
        for f in &out.frames {
            prop_assert_eq!(f.schemes(), map.as_slice());
            for (v, s) in f.values().iter().zip(&map) {
                if s.is_none() {
                    prop_assert_eq!(v.norm(), 0.0);
                }
            }
        }
        let frames: Vec<_> = out.frames.iter().map(|f| f.values().to_vec()).collect();
        prop_assert_eq!(loading_rx(&frames, &map, out.payload_len).unwrap(), bits);
    }

    #[test]
    fn lookup_is_monotone(a in -20.0f64..30.0, b in -20.0f64..30.0) {
        let t = ThresholdTable::reference();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(t.lookup(lo) <= t.lookup(hi));
    }

    #[test]
    fn valid_tables_accept_sorted_bounds(raw in prop::collection::vec(-10.0f64..20.0, 1..6)) {
        let mut b = raw.clone();
        b.sort_by(f64::total_cmp);
        b.dedup();
        let entries: Vec<_> = b.iter().zip(ModScheme::ALL).map(|(&d, s)| ThresholdEntry { lower_db: d, scheme: s }).collect();
        prop_assert!(ThresholdTable::new(entries).is_ok());
    }
}

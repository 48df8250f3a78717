use ftn_core::loading::ThresholdTable;
use ftn_core::modem::{modulate, ModScheme};
use ftn_core::pulses::PulseSpec;
use ftn_core::sim::{awgn, one_tap_equalize, plan_carriers, run_ofdm_ftn, OfdmLink, SchemePolicy, SimConfig};
use ftn_core::snr::DbScale;
use ftn_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

fn random_frames(n: usize, count: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let bits: Vec<bool> = (0..4 * n).map(|_| rng.random()).collect();
            modulate(&bits, ModScheme::Qam16).unwrap().into_values()
        })
        .collect()
}

fn srrc() -> PulseSpec {
    PulseSpec::srrc(0.3).unwrap()
}

#[test]
fn noiseless_chain_is_multiplicative() {
    for tau in [0.8, 0.9] {
        let n = 256;
        let link = OfdmLink::new(&srrc(), tau, n, None).unwrap();
        let frames = random_frames(n, 3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let powers: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        let y = link.receive(&link.channel(&link.transmit(&frames, &powers)), 3);
        let h = link.gains().gains();
        for (yf, xf) in y.iter().zip(&frames) {
            for i in 0..n {
                let want = xf[i] * powers[i].sqrt() * h[i];
                assert!((yf[i] - want).norm() < 1e-9, "tau {tau} carrier {i}");
                let eq = one_tap_equalize(yf[i], h[i], powers[i]).unwrap();
                assert!((eq - xf[i]).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn receive_window_is_circular_convolution() {
    // Oracle: IFFT, circular convolution with the centred taps, FFT.
    let n = 128;
    let link = OfdmLink::new(&srrc(), 0.7, n, None).unwrap();
    let frames = random_frames(n, 2, 5);
    let ones = vec![1.0; n];
    let got = link.receive(&link.channel(&link.transmit(&frames, &ones)), 2);
    let mut planner = FftPlanner::new();
    let (fwd, inv) = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    let taps = link.taps();
    let half = taps.center() as i64;
    for (frame, y) in frames.iter().zip(&got) {
        let mut x = frame.clone();
        inv.process(&mut x);
        let x: Vec<Complex64> = x.iter().map(|v| v / (n as f64).sqrt()).collect();
        let mut conv: Vec<Complex64> = (0..n)
            .map(|m| {
                (-half..=half)
                    .map(|k| x[(m as i64 - k).rem_euclid(n as i64) as usize] * taps.at(k))
                    .sum::<Complex64>()
            })
            .collect();
        fwd.process(&mut conv);
        for (a, b) in conv.iter().zip(y) {
            assert!((a / (n as f64).sqrt() - b).norm() < 1e-9);
        }
    }
}

#[test]
fn prefix_length_checks() {
    let link = OfdmLink::new(&srrc(), 0.8, 1024, None).unwrap();
    assert_eq!(link.cp_len(), link.taps().len() - 1);
    assert_eq!(link.frame_len(), 1024 + link.cp_len());
    assert!(OfdmLink::new(&srrc(), 0.8, 1024, Some(link.cp_len() - 1)).is_err());
    assert!(OfdmLink::new(&srrc(), 0.8, 64, Some(65)).is_err());
    assert!(OfdmLink::new(&srrc(), 0.8, 1000, None).is_err());
    let longer = OfdmLink::new(&srrc(), 0.8, 256, Some(60)).unwrap();
    let frames = random_frames(256, 2, 1);
    let ones = vec![1.0; 256];
    let y = longer.receive(&longer.channel(&longer.transmit(&frames, &ones)), 2);
    for (yf, xf) in y.iter().zip(&frames) {
        for i in 0..256 {
            assert!((yf[i] - xf[i] * longer.gains().gains()[i]).norm() < 1e-9);
        }
    }
}

#[test]
fn nyquist_rate_qpsk_is_error_free_at_high_snr() {
    let mut cfg = SimConfig::new(1.0, vec![60.0]).unwrap();
    cfg.n = 64;
    cfg.trials = 20;
    cfg.waterfilling = false;
    cfg.policy = SchemePolicy::Fixed(ModScheme::Qpsk);
    let curve = run_ofdm_ftn(&cfg).unwrap();
    let row = &curve.rows[0];
    assert_eq!(row.bits_per_frame, 128.0);
    let cp = OfdmLink::new(&cfg.pulse, 1.0, 64, None).unwrap().cp_len() as f64;
    assert!((row.throughput_bps - 128.0 / (64.0 + cp)).abs() < 1e-12);
    assert!((row.correct_bps - row.throughput_bps).abs() < 1e-12);
    assert!(row.std_err < 1e-12);
}

#[test]
fn awgn_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let snr = 4.0;
    let w = awgn(1_000_000, snr, &mut rng).unwrap();
    let n = w.len() as f64;
    let var = w.iter().map(|v| v.norm_sqr()).sum::<f64>() / n;
    assert!((var * snr - 1.0).abs() < 5e-3, "{var}");
    let re_var = w.iter().map(|v| v.re * v.re).sum::<f64>() / n;
    assert!((re_var / var - 0.5).abs() < 5e-3);
    let cross = w.iter().map(|v| v.re * v.im).sum::<f64>() / n / (var / 2.0);
    assert!(cross.abs() < 5e-3, "{cross}");
    let lag = w.windows(2).map(|p| (p[0] * p[1].conj()).re).sum::<f64>() / n / var;
    assert!(lag.abs() < 5e-3, "{lag}");
    let mean = w.iter().sum::<Complex64>() / n;
    assert!(mean.norm() < 5e-3);

    let again = awgn(1000, snr, &mut ChaCha8Rng::seed_from_u64(21)).unwrap();
    assert_eq!(again[..], w[..1000]);
}

/// Equalized noise variance per carrier with zero signal.
fn equalized_noise(colored: bool) -> (Vec<f64>, Vec<f64>) {
    let n = 256;
    let link = OfdmLink::new(&srrc(), 0.8, n, None).unwrap();
    let frames = vec![vec![Complex64::new(0.0, 0.0); n]; 400];
    let ones = vec![1.0; n];
    let snr = 100.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut rx = link.channel(&link.transmit(&frames, &ones));
    if !colored {
        let noise = awgn(rx.len(), snr, &mut rng).unwrap();
        for (r, w) in rx.iter_mut().zip(noise) {
            *r += w;
        }
    }
    let mut y = link.receive(&rx, frames.len());
    let h = link.gains().gains();
    if colored {
        for f in y.iter_mut() {
            for ((v, w), g) in f.iter_mut().zip(awgn(n, snr, &mut rng).unwrap()).zip(h) {
                *v += w * g.re.max(0.0).sqrt();
            }
        }
    }
    let var = (0..n)
        .map(|i| y.iter().map(|f| one_tap_equalize(f[i], h[i], 1.0).unwrap().norm_sqr()).sum::<f64>() / y.len() as f64 * snr)
        .collect();
    (var, h.iter().map(|g| g.norm()).collect())
}

#[test]
fn weak_carriers_amplify_noise() {
    // Post-equalizer noise variance is 1/(snr·|H|²) for white noise.
    let (var, mag) = equalized_noise(false);
    let mut checked = 0;
    for (v, m) in var.iter().zip(&mag) {
        let want = m.powi(-2);
        // 400 complex samples: relative standard deviation 5%.
        assert!((v / want - 1.0).abs() < 0.25, "|H| {m}: {v} vs {want}");
        if (m - 0.1).abs() < 0.05 {
            checked += 1;
        }
    }
    assert!(checked > 0);
    let (cvar, cmag) = equalized_noise(true);
    for (v, m) in cvar.iter().zip(&cmag) {
        assert!((v * m - 1.0).abs() < 0.25);
    }
}

#[test]
fn run_is_deterministic_and_thread_independent() {
    let mut cfg = SimConfig::new(0.8, vec![6.0, 14.0]).unwrap();
    cfg.n = 128;
    cfg.trials = 12;
    let a = run_ofdm_ftn(&cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_ofdm_ftn(&cfg).unwrap());
    assert_eq!(a, b);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert!(text.starts_with("snr_dB,throughput_bps,stderr,correct_bps,bits_per_frame,trials,config_hash\n"));
    cfg.seed += 1;
    assert_ne!(run_ofdm_ftn(&cfg).unwrap().rows, a.rows);
}

#[test]
fn waterfilling_switches_off_weak_carriers() {
    let mut cfg = SimConfig::new(0.8, vec![10.0]).unwrap();
    cfg.policy = SchemePolicy::Fixed(ModScheme::Qam64);
    let link = OfdmLink::new(&cfg.pulse, 0.8, cfg.n, None).unwrap();
    let snr = DbScale::Amplitude.to_linear(0.0);
    let plan = plan_carriers(&cfg, link.gains(), snr).unwrap();
    let off = plan.powers.iter().filter(|&&p| p == 0.0).count();
    assert!(off > 0 && off < cfg.n);
    assert_eq!(plan.schemes.iter().filter(|s| s.is_none()).count(), off);
    assert!((plan.powers.iter().sum::<f64>() - cfg.n as f64).abs() < 1e-6);

    cfg.waterfilling = false;
    let flat = plan_carriers(&cfg, link.gains(), snr).unwrap();
    assert!(flat.powers.iter().all(|&p| p == 1.0));
    assert!(flat.schemes.iter().all(|s| *s == Some(ModScheme::Qam64)));
}

#[test]
fn waterfilling_helps_64qam_near_its_threshold() {
    let mut cfg = SimConfig::new(0.8, vec![8.0]).unwrap();
    cfg.policy = SchemePolicy::Fixed(ModScheme::Qam64);
    cfg.trials = 60;
    let with = run_ofdm_ftn(&cfg).unwrap().rows[0];
    cfg.waterfilling = false;
    let without = run_ofdm_ftn(&cfg).unwrap().rows[0];
    assert!(
        with.throughput_bps > without.throughput_bps + 2.0 * (with.std_err + without.std_err),
        "{with:?} vs {without:?}"
    );
}

#[test]
fn adaptive_plan_follows_table() {
    let cfg = SimConfig::new(0.9, vec![10.0]).unwrap();
    let link = OfdmLink::new(&cfg.pulse, 0.9, cfg.n, None).unwrap();
    let snr = DbScale::Amplitude.to_linear(10.0);
    let plan = plan_carriers(&cfg, link.gains(), snr).unwrap();
    let table = ThresholdTable::reference();
    let gammas = link.gains().carrier_snrs(snr);
    for i in 0..cfg.n {
        let eff = gammas[i] * plan.powers[i];
        let want = (eff > 0.0).then(|| table.lookup(DbScale::Amplitude.to_db(eff)));
        assert_eq!(plan.schemes[i], want);
    }
}

#[test]
fn rejects_bad_config() {
    let mut cfg = SimConfig::new(0.8, vec![]).unwrap();
    assert!(run_ofdm_ftn(&cfg).is_err());
    cfg.snr_db = vec![1.0];
    cfg.trials = 0;
    assert!(run_ofdm_ftn(&cfg).is_err());
    cfg.trials = 1;
    cfg.n = 1000;
    assert!(run_ofdm_ftn(&cfg).is_err());
}

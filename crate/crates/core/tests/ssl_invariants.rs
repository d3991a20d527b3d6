mod common;

use meetbot::sim::{synthesize_frame, AcousticConfig, Scenario};
use meetbot::ssl::{
    detect_vad, estimate_doa, fractional_delay, gcc_phat_delay, DoaConfig, SslError,
};
use meetbot::{angular_distance, Angle, AudioFrame, Timestamp};
use proptest::prelude::*;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

const FS: f64 = 16_000.0;

fn speaker_at(azimuth: f64, snr: f64) -> Scenario {
    Scenario::from_json(&format!(
        r#"{{"attendees": [{{"id": 0, "azimuth": {azimuth}}}],
            "schedule": [{{"attendee_id": 0, "start": 0, "end": 10}}],
            "noise_snr_db": {snr}, "seed": 42}}"#
    ))
    .unwrap()
}

fn frame_for(azimuth: f64, snr: f64) -> AudioFrame {
    synthesize_frame(
        &speaker_at(azimuth, snr),
        Timestamp::new(1.0),
        8000,
        &AcousticConfig::default(),
    )
    .unwrap()
}

fn estimate(frame: &AudioFrame) -> Angle {
    let cfg = AcousticConfig::default();
    estimate_doa(frame, &cfg.geometry, &cfg.doa).unwrap().angle
}

/// Band-limited test signal: random tones below 6 kHz.
fn tones(seed: u64, n: usize) -> Vec<f64> {
    let mut r = common::rng(seed);
    let parts: Vec<(f64, f64, f64)> = (0..40)
        .map(|_| {
            (
                r.random_range(100.0..6000.0),
                r.random_range(0.0..std::f64::consts::TAU),
                r.random_range(0.2..1.0),
            )
        })
        .collect();
    (0..n)
        .map(|k| {
            let t = k as f64 / FS;
            parts
                .iter()
                .map(|(f, p, a)| a * (std::f64::consts::TAU * f * t + p).sin())
                .sum()
        })
        .collect()
}

/// Cross-correlation of `x` and `y` at fractional lags, evaluated from the
/// spectra (a band-limited interpolation of the correlation), maximized on
/// a 0.001-sample grid over `[lo, hi]`.
fn dense_correlation_peak(x: &[f64], y: &[f64], lo: f64, hi: f64) -> f64 {
    let n = x.len().next_power_of_two() * 2;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let spectrum = |s: &[f64]| {
        let mut buf: Vec<Complex<f64>> = s.iter().map(|&v| Complex::new(v, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        fft.process(&mut buf);
        buf
    };
    let (sx, sy) = (spectrum(x), spectrum(y));
    let cross: Vec<Complex<f64>> = (0..=n / 2).map(|k| sy[k] * sx[k].conj()).collect();
    let corr = |tau: f64| -> f64 {
        cross
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = if k == 0 || k == n / 2 { 1.0 } else { 2.0 };
                let phase = std::f64::consts::TAU * k as f64 * tau / n as f64;
                w * (c * Complex::from_polar(1.0, phase)).re
            })
            .sum()
    };
    let steps = ((hi - lo) / 0.001).round() as usize;
    (0..=steps)
        .map(|i| lo + i as f64 * 0.001)
        .max_by(|a, b| corr(*a).total_cmp(&corr(*b)))
        .unwrap()
}

#[test]
fn fractional_delay_of_four_and_a_half_samples() {
    let x = tones(1, 4096);
    let y = fractional_delay(&x, 4.5);
    // First confirm the synthesizer really delays by 4.5 samples.
    let true_lag = dense_correlation_peak(&x, &y, 3.0, 6.0);
    assert!((true_lag - 4.5).abs() < 0.01, "synthesizer lag {true_lag}");
    let d = gcc_phat_delay(&x, &y, FS, 0.002).unwrap();
    assert!((d * FS - 4.5).abs() <= 0.2, "gcc lag {} samples", d * FS);
    assert!((d - 2.8125e-4).abs() <= 0.2 / FS);
}

#[test]
fn integer_shift_examples() {
    let x = tones(2, 4096);
    assert_eq!(gcc_phat_delay(&x, &x, FS, 0.002).unwrap(), 0.0);
    let mut y = vec![0.0; 5];
    y.extend_from_slice(&x[..x.len() - 5]);
    let d = gcc_phat_delay(&x, &y, FS, 0.002).unwrap();
    assert!((d - 3.125e-4).abs() < 0.05 / FS, "{d}");
}

#[test]
fn doa_examples() {
    for (az, snr) in [(0.0, 30.0), (90.0, 30.0)] {
        let est = estimate(&frame_for(az, snr));
        assert!(angular_distance(est, Angle::new(az)) <= 1.0, "{az}: {est}");
    }
    let silent = AudioFrame::new(vec![vec![0.0; 1024]; 4], FS, Timestamp::ZERO).unwrap();
    let cfg = AcousticConfig::default();
    assert!(matches!(
        estimate_doa(&silent, &cfg.geometry, &cfg.doa),
        Err(SslError::NoVoiceActivity)
    ));
}

#[test]
fn rotation_equivariance_on_ten_degree_grid() {
    let est: Vec<f64> = (0..36)
        .map(|i| estimate(&frame_for(i as f64 * 10.0, 20.0)).degrees())
        .collect();
    for i in 0..36 {
        for j in 0..36 {
            let rotated = est[(i + j) % 36];
            let shifted = Angle::new(est[i] + j as f64 * 10.0);
            assert!(
                angular_distance(Angle::new(rotated), shifted) <= 2.0,
                "theta {} delta {}: {rotated} vs {shifted}",
                i * 10,
                j * 10
            );
        }
    }
}

#[test]
fn gain_does_not_change_the_angle() {
    let cfg = AcousticConfig::default();
    let permissive = DoaConfig {
        vad_threshold: 0.0,
        ..cfg.doa
    };
    for az in [0.0, 37.0, 123.0, 250.0, 311.0] {
        let frame = frame_for(az, 20.0);
        let base = estimate_doa(&frame, &cfg.geometry, &permissive)
            .unwrap()
            .angle;
        for g in [1e-4, 0.01, 0.5, 3.0, 1e3] {
            let got = estimate_doa(&frame.scaled(g), &cfg.geometry, &permissive)
                .unwrap()
                .angle;
            assert_eq!(got, base, "azimuth {az} gain {g}");
        }
    }
}

#[test]
fn vad_rejects_quiet_white_noise() {
    let mut r = common::rng(5);
    let noise: Vec<f64> = (0..4096)
        .map(|_| r.random_range(-1.0..1.0) * 1e-4)
        .collect();
    // Oracle: uniform noise of amplitude A has mean square A^2 / 3.
    let energy: f64 = noise.iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
    assert!((energy - 1e-8 / 3.0).abs() < 2e-10);
    let frame = AudioFrame::new(vec![noise], FS, Timestamp::ZERO).unwrap();
    let d = detect_vad(&frame, 1e-6);
    assert!(!d.is_active());
    assert_eq!(d.duration_so_far(), 0.0);
    assert!((d.energy() - energy).abs() < 1e-18);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gcc_is_antisymmetric(seed in any::<u64>(), shift in -12.0f64..12.0) {
        let x = tones(seed, 2048);
        let y = fractional_delay(&x, shift);
        let forward = gcc_phat_delay(&x, &y, FS, 0.002).unwrap() * FS;
        let backward = gcc_phat_delay(&y, &x, FS, 0.002).unwrap() * FS;
        prop_assert!((forward + backward).abs() <= 0.1, "{forward} vs {backward}");
        prop_assert!((forward - shift).abs() <= 0.2, "{forward} vs true {shift}");
    }

    #[test]
    fn vad_matches_energy_threshold(amp in 0.0f64..1.0, threshold in 1e-6f64..0.5) {
        let samples: Vec<f64> = (0..512).map(|k| amp * (k as f64 * 0.3).sin()).collect();
        let energy = samples.iter().map(|v| v * v).sum::<f64>() / 512.0;
        let frame = AudioFrame::new(vec![samples], FS, Timestamp::ZERO).unwrap();
        prop_assert_eq!(detect_vad(&frame, threshold).is_active(), energy > threshold);
    }
}

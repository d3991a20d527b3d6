//! Anechoic far-field synthesis of the scripted speech at each microphone.

use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::scenario::{Attendee, Scenario};
use super::SimError;
use crate::ssl::{DoaConfig, VadConfig};
use crate::{AudioFrame, MicArrayGeometry, Timestamp};

/// Mean-square level of a synthesized voice.
pub const SPEECH_POWER: f64 = 0.01;
/// Envelope modulation rate of the synthetic voice, Hz.
const MODULATION_HZ: f64 = 4.0;
const MODULATION_DEPTH: f64 = 0.5;
const HARMONICS: usize = 3;
const NOISE_BLOCK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AcousticConfig {
    pub sample_rate: f64,
    /// Length of the frame handed to the DOA estimator, seconds.
    pub doa_frame_seconds: f64,
    pub geometry: MicArrayGeometry,
    pub vad: VadConfig<f64>,
    pub doa: DoaConfig<f64>,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000.0,
            doa_frame_seconds: 0.5,
            geometry: MicArrayGeometry::four_mic_default(),
            vad: VadConfig::default(),
            doa: DoaConfig::default(),
        }
    }
}

impl AcousticConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad("sample_rate must be positive");
        }
        if !(self.doa_frame_seconds * self.sample_rate >= crate::ssl::MIN_FRAME_LEN as f64) {
            return bad("doa_frame_seconds too short for the minimum frame length");
        }
        if !(self.vad.threshold > 0.0
            && self.vad.release_ratio > 0.0
            && self.vad.release_ratio <= 1.0)
        {
            return bad("vad threshold must be positive and release_ratio in (0, 1]");
        }
        self.geometry
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))
    }
}

/// Fundamental frequency used for an attendee's voice.
pub fn voice_pitch(scenario: &Scenario, attendee: &Attendee) -> f64 {
    attendee.pitch_hz.unwrap_or_else(|| {
        let idx = scenario.attendee_index(attendee.id).unwrap_or(0);
        140.0 + 35.0 * (idx % 4) as f64
    })
}

/// Voiced-like source signal: three harmonics of `f0` under a 4 Hz
/// amplitude envelope, scaled to [`SPEECH_POWER`] on average.
pub fn voice_sample(f0: f64, phase_seed: usize, t: f64) -> f64 {
    let harmonic_power: f64 = (1..=HARMONICS).map(|h| 0.5 / (h * h) as f64).sum();
    let envelope_power = 1.0 + MODULATION_DEPTH * MODULATION_DEPTH / 2.0;
    let amp = (SPEECH_POWER / (harmonic_power * envelope_power)).sqrt();
    let envelope = 1.0 + MODULATION_DEPTH * (2.0 * PI * MODULATION_HZ * t).sin();
    let tone: f64 = (1..=HARMONICS)
        .map(|h| {
            let phase = 0.7 * h as f64 + 1.3 * phase_seed as f64;
            (2.0 * PI * h as f64 * f0 * t + phase).sin() / h as f64
        })
        .sum();
    amp * envelope * tone
}

fn mix_seed(seed: u64, mic: usize, block: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed
        ^ (mic as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ block.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Unit-variance white noise for `mic`, addressed by absolute sample
/// index so overlapping frames see identical noise.
fn noise_samples(seed: u64, mic: usize, first: u64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut block = first / NOISE_BLOCK as u64;
    let mut offset = (first % NOISE_BLOCK as u64) as usize;
    while out.len() < len {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, mic, block));
        let samples: Vec<f64> = (0..NOISE_BLOCK)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let take = (NOISE_BLOCK - offset).min(len - out.len());
        out.extend_from_slice(&samples[offset..offset + take]);
        block += 1;
        offset = 0;
    }
    out
}

/// Multi-channel frame of `len` samples starting at `start`.
///
/// Each active speaker's voice reaches microphone `m` delayed by the exact
/// far-field offset for its azimuth; the voice is evaluated analytically at
/// the delayed instant, which is an ideal fractional delay. Speech is gated
/// by the schedule at the source. Every channel gets independent white
/// noise at `scenario.noise_snr_db` below [`SPEECH_POWER`].
pub fn synthesize_frame(
    scenario: &Scenario,
    start: Timestamp,
    len: usize,
    cfg: &AcousticConfig,
) -> Result<AudioFrame, SimError> {
    let fs = cfg.sample_rate;
    let geometry = &cfg.geometry;
    let first = (start.secs() * fs).round() as u64;
    let noise_sigma = (SPEECH_POWER * 10f64.powf(-scenario.noise_snr_db / 10.0)).sqrt();

    let voices: Vec<(usize, &Attendee, f64)> = scenario
        .attendees
        .iter()
        .enumerate()
        .map(|(i, a)| (i, a, voice_pitch(scenario, a)))
        .collect();

    let channels = (0..geometry.mic_count())
        .map(|m| {
            let offsets: Vec<f64> = voices
                .iter()
                .map(|(_, a, _)| geometry.arrival_offset(m, a.azimuth))
                .collect();
            let noise = noise_samples(scenario.seed, m, first, len);
            (0..len)
                .map(|k| {
                    let t = (first + k as u64) as f64 / fs;
                    let speech: f64 = voices
                        .iter()
                        .zip(&offsets)
                        .map(|(&(idx, a, f0), &off)| {
                            let src_t = t - off;
                            if scenario.is_speaking(a.id, src_t) {
                                voice_sample(f0, idx, src_t)
                            } else {
                                0.0
                            }
                        })
                        .sum();
                    speech + noise_sigma * noise[k]
                })
                .collect()
        })
        .collect();
    AudioFrame::new(channels, fs, start).map_err(|e| SimError::InvalidConfig(e.to_string()))
}

/// Renders the whole session to a 32-bit float WAV file, one channel per
/// microphone.
pub fn dump_wav(scenario: &Scenario, cfg: &AcousticConfig, path: &Path) -> Result<(), SimError> {
    let len = (scenario.duration() * cfg.sample_rate).round() as usize;
    let frame = synthesize_frame(
        scenario,
        Timestamp::ZERO,
        len.max(crate::ssl::MIN_FRAME_LEN),
        cfg,
    )?;
    crate::wav::write_f32(path, frame.channels(), cfg.sample_rate as u32).map_err(SimError::Io)
}

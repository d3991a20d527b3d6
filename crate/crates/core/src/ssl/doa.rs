use serde::{Deserialize, Serialize};

use super::gcc::{pick_peak, GccConfig, Spectra};
use super::{frame_energy, AudioFrame, MicArrayGeometry, SslError};
use crate::angle::{Angle, Timestamp};
use crate::num::Scalar;

/// Azimuth estimate produced by the localization front-end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct DoaEstimate<T> {
    pub angle: Angle<T>,
    pub timestamp: Timestamp,
    /// `1 / (1 + rms delay residual in samples)`, in `(0, 1]`.
    pub confidence: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct DoaConfig<T> {
    /// Channel-0 energy a frame must exceed to be localized.
    pub vad_threshold: T,
    /// Azimuth grid spacing in degrees.
    pub grid_step: T,
    pub gcc: GccConfig<T>,
}

impl<T: Scalar> Default for DoaConfig<T> {
    fn default() -> Self {
        Self {
            vad_threshold: T::lit(1e-3),
            grid_step: T::one(),
            gcc: GccConfig::default(),
        }
    }
}

/// Far-field azimuth of the dominant source in `frame`.
///
/// Every microphone pair contributes a GCC-PHAT delay; the returned
/// azimuth is the grid point whose predicted pair delays best match the
/// measured ones in the least-squares sense.
pub fn estimate_doa<T: Scalar>(
    frame: &AudioFrame<T>,
    geometry: &MicArrayGeometry<T>,
    cfg: &DoaConfig<T>,
) -> Result<DoaEstimate<T>, SslError> {
    if frame.channel_count() != geometry.mic_count() {
        return Err(SslError::ChannelMismatch {
            channels: frame.channel_count(),
            mics: geometry.mic_count(),
        });
    }
    if !(frame_energy(frame) > cfg.vad_threshold) {
        return Err(SslError::NoVoiceActivity);
    }

    let fs = frame.sample_rate();
    let signals: Vec<&[T]> = frame.channels().iter().map(|c| c.as_slice()).collect();
    let spectra = Spectra::compute(&signals);
    let pairs = geometry.pairs();

    let mut measured = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let max_lag = (geometry.baseline_length(i, j) / geometry.speed_of_sound * fs)
            .ceil()
            .to_usize()
            .unwrap_or(0)
            + 1;
        let corr = spectra.phat_correlation(i, j, &cfg.gcc);
        measured.push(pick_peak(&corr, max_lag, &cfg.gcc)? / fs);
    }

    let steps = (T::lit(360.0) / cfg.grid_step)
        .round()
        .to_usize()
        .unwrap_or(360)
        .max(1);
    let mut best = (T::zero(), T::infinity());
    for s in 0..steps {
        let theta = T::lit(s as f64) * cfg.grid_step;
        let az = Angle::new(theta);
        let sse = pairs
            .iter()
            .zip(&measured)
            .fold(T::zero(), |acc, (&(i, j), &tau)| {
                let e = tau - geometry.pair_delay(i, j, az);
                acc + e * e
            });
        if sse < best.1 {
            best = (theta, sse);
        }
    }

    let rms_samples = (best.1 / T::lit(pairs.len() as f64)).sqrt() * fs;
    Ok(DoaEstimate {
        angle: Angle::new(best.0),
        timestamp: frame.start_time(),
        confidence: T::one() / (T::one() + rms_samples),
    })
}

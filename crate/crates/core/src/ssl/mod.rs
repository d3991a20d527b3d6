//! Sound-source localization front-end: energy VAD, GCC-PHAT time delays
//! and far-field azimuth search over a planar microphone array.

mod doa;
mod fractional;
mod gcc;
mod geometry;
mod vad;

pub use doa::{estimate_doa, DoaConfig, DoaEstimate};
pub use fractional::fractional_delay;
pub use gcc::{gcc_phat_delay, gcc_phat_delay_with, GccConfig};
pub use geometry::MicArrayGeometry;
pub use vad::{detect_vad, frame_energy, VadConfig, VadDecision, VoiceActivityDetector};

use thiserror::Error;

use crate::angle::Timestamp;
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SslError {
    #[error("no voice activity in frame")]
    NoVoiceActivity,
    #[error("cross-correlation has no unique peak above the noise floor")]
    NoPeak,
    #[error("invalid audio frame: {0}")]
    InvalidFrame(String),
    #[error("invalid microphone geometry: {0}")]
    InvalidGeometry(String),
    #[error("frame has {channels} channels but the array has {mics} microphones")]
    ChannelMismatch { channels: usize, mics: usize },
}

/// Minimum number of samples per channel in a frame.
pub const MIN_FRAME_LEN: usize = 256;

/// Block of synchronously sampled multi-channel audio.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFrame<T> {
    channels: Vec<Vec<T>>,
    sample_rate: T,
    start_time: Timestamp,
}

impl<T: Scalar> AudioFrame<T> {
    pub fn new(
        channels: Vec<Vec<T>>,
        sample_rate: T,
        start_time: Timestamp,
    ) -> Result<Self, SslError> {
        if channels.is_empty() {
            return Err(SslError::InvalidFrame("no channels".into()));
        }
        if !(sample_rate > T::zero()) {
            return Err(SslError::InvalidFrame(format!(
                "sample rate {sample_rate} must be positive"
            )));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(SslError::InvalidFrame("channels differ in length".into()));
        }
        if len < MIN_FRAME_LEN {
            return Err(SslError::InvalidFrame(format!(
                "{len} samples per channel, need at least {MIN_FRAME_LEN}"
            )));
        }
        Ok(Self {
            channels,
            sample_rate,
            start_time,
        })
    }

    pub fn channels(&self) -> &[Vec<T>] {
        &self.channels
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn start_time(&self) -> Timestamp {
        self.start_time
    }

    /// Frame length in seconds.
    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate.as_f64()
    }

    /// Same frame with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: T) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(|c| c.iter().map(|&s| s * gain).collect())
                .collect(),
            sample_rate: self.sample_rate,
            start_time: self.start_time,
        }
    }
}

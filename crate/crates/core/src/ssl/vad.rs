use serde::{Deserialize, Serialize};

use super::AudioFrame;
use crate::num::Scalar;

/// Mean-square energy of channel 0.
pub fn frame_energy<T: Scalar>(frame: &AudioFrame<T>) -> T {
    let ch = &frame.channels()[0];
    let sum = ch.iter().fold(T::zero(), |acc, &s| acc + s * s);
    sum / T::lit(ch.len() as f64)
}

/// Voice-activity verdict for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadDecision<T> {
    active: bool,
    energy: T,
    duration_so_far: f64,
}

impl<T: Scalar> VadDecision<T> {
    /// Active frame; `duration_so_far` is the length of the contiguous
    /// active run ending with this frame, in seconds.
    pub fn active(energy: T, duration_so_far: f64) -> Self {
        Self {
            active: true,
            energy,
            duration_so_far: duration_so_far.max(0.0),
        }
    }

    pub fn inactive(energy: T) -> Self {
        Self {
            active: false,
            energy,
            duration_so_far: 0.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn energy(&self) -> T {
        self.energy
    }

    pub fn duration_so_far(&self) -> f64 {
        self.duration_so_far
    }
}

/// Single-frame decision without hysteresis: active iff the channel-0
/// energy exceeds `threshold`.
pub fn detect_vad<T: Scalar>(frame: &AudioFrame<T>, threshold: T) -> VadDecision<T> {
    let energy = frame_energy(frame);
    if energy > threshold {
        VadDecision::active(energy, frame.duration())
    } else {
        VadDecision::inactive(energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct VadConfig<T> {
    /// Energy above which an idle detector turns on.
    pub threshold: T,
    /// An active detector stays on while energy exceeds
    /// `threshold * release_ratio`.
    pub release_ratio: T,
}

impl<T: Scalar> Default for VadConfig<T> {
    fn default() -> Self {
        Self {
            threshold: T::lit(1e-3),
            release_ratio: T::lit(0.5),
        }
    }
}

/// Energy detector with hysteresis. Owns the run-length state for one
/// audio stream; frames must be fed in order.
#[derive(Debug, Clone, PartialEq)]
pub struct VoiceActivityDetector<T> {
    cfg: VadConfig<T>,
    active: bool,
    run: f64,
}

impl<T: Scalar> VoiceActivityDetector<T> {
    pub fn new(cfg: VadConfig<T>) -> Self {
        Self {
            cfg,
            active: false,
            run: 0.0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn update(&mut self, frame: &AudioFrame<T>) -> VadDecision<T> {
        let energy = frame_energy(frame);
        let threshold = if self.active {
            self.cfg.threshold * self.cfg.release_ratio
        } else {
            self.cfg.threshold
        };
        self.active = energy > threshold;
        if self.active {
            self.run += frame.duration();
            VadDecision::active(energy, self.run)
        } else {
            self.run = 0.0;
            VadDecision::inactive(energy)
        }
    }

    pub fn reset(&mut self) {
        self.active = false;
        self.run = 0.0;
    }
}

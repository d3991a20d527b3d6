use serde::{Deserialize, Serialize};

use super::SslError;
use crate::angle::Angle;
use crate::num::Scalar;

/// Upper bound on the array aperture for the far-field model to hold.
const MAX_APERTURE_M: f64 = 0.5;

/// Planar microphone positions (meters) and the speed of sound (m/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicArrayGeometry<T> {
    pub mic_positions: Vec<[T; 2]>,
    pub speed_of_sound: T,
}

impl<T: Scalar> MicArrayGeometry<T> {
    pub fn new(mic_positions: Vec<[T; 2]>, speed_of_sound: T) -> Result<Self, SslError> {
        let g = Self {
            mic_positions,
            speed_of_sound,
        };
        g.validate()?;
        Ok(g)
    }

    /// `n` microphones evenly spaced on a circle, the first on the +x axis.
    pub fn circular(n: usize, radius: T, speed_of_sound: T) -> Result<Self, SslError> {
        let step = T::lit(360.0 / n.max(1) as f64);
        let positions = (0..n)
            .map(|i| {
                let (c, s) = Angle::new(step * T::lit(i as f64)).unit();
                [radius * c, radius * s]
            })
            .collect();
        Self::new(positions, speed_of_sound)
    }

    /// Four microphones on a 32 mm radius circle, c = 343 m/s.
    pub fn four_mic_default() -> Self {
        Self::circular(4, T::lit(0.032), T::lit(343.0)).expect("default geometry is valid")
    }

    pub fn validate(&self) -> Result<(), SslError> {
        let n = self.mic_positions.len();
        if n < 2 {
            return Err(SslError::InvalidGeometry(format!(
                "{n} microphones, need at least 2"
            )));
        }
        if !(self.speed_of_sound > T::zero()) || !self.speed_of_sound.is_finite() {
            return Err(SslError::InvalidGeometry(
                "speed of sound must be positive".into(),
            ));
        }
        if self.mic_positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SslError::InvalidGeometry(
                "non-finite microphone coordinate".into(),
            ));
        }
        for (i, j) in self.pairs() {
            let d = self.baseline_length(i, j);
            if d <= T::zero() {
                return Err(SslError::InvalidGeometry(format!(
                    "microphones {i} and {j} coincide"
                )));
            }
            if d > T::lit(MAX_APERTURE_M) {
                return Err(SslError::InvalidGeometry(format!(
                    "microphones {i} and {j} are {d} m apart (max {MAX_APERTURE_M} m)"
                )));
            }
        }
        Ok(())
    }

    pub fn mic_count(&self) -> usize {
        self.mic_positions.len()
    }

    /// All unordered microphone pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.mic_positions.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    }

    pub fn baseline_length(&self, i: usize, j: usize) -> T {
        let [xi, yi] = self.mic_positions[i];
        let [xj, yj] = self.mic_positions[j];
        (xi - xj).hypot(yi - yj)
    }

    /// Arrival time of a far-field plane wave from `azimuth` at microphone
    /// `m`, relative to the array origin. Microphones facing the source hear
    /// it first (negative offset).
    pub fn arrival_offset(&self, m: usize, azimuth: Angle<T>) -> T {
        let (ux, uy) = azimuth.unit();
        let [x, y] = self.mic_positions[m];
        -(x * ux + y * uy) / self.speed_of_sound
    }

    /// Far-field delay of microphone `j` relative to microphone `i`
    /// (positive when `j` hears the wavefront later).
    pub fn pair_delay(&self, i: usize, j: usize, azimuth: Angle<T>) -> T {
        let (ux, uy) = azimuth.unit();
        let [xi, yi] = self.mic_positions[i];
        let [xj, yj] = self.mic_positions[j];
        ((xi - xj) * ux + (yi - yj) * uy) / self.speed_of_sound
    }
}

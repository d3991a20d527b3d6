use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::SslError;
use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct GccConfig<T> {
    /// Cross-spectrum bins weaker than this fraction of the strongest bin
    /// get zero weight instead of unit weight. Relative, so the estimate
    /// stays independent of signal gain.
    pub magnitude_floor: T,
    /// Two lags count as tied when their correlations differ by less than
    /// this fraction of the peak.
    pub tie_tolerance: T,
}

impl<T: Scalar> Default for GccConfig<T> {
    fn default() -> Self {
        Self {
            magnitude_floor: T::lit(0.1),
            tie_tolerance: T::lit(1e-9),
        }
    }
}

/// Zero-padded spectra of a set of equal-length signals, sized for linear
/// (non-wrapping) cross-correlation.
pub(crate) struct Spectra<T> {
    pub nfft: usize,
    pub bins: Vec<Vec<Complex<T>>>,
}

impl<T: Scalar> Spectra<T> {
    pub fn compute(signals: &[&[T]]) -> Self {
        let len = signals.first().map_or(0, |s| s.len());
        let nfft = (2 * len).next_power_of_two().max(2);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nfft);
        let bins = signals
            .iter()
            .map(|s| {
                let mut buf: Vec<Complex<T>> =
                    s.iter().map(|&v| Complex::new(v, T::zero())).collect();
                buf.resize(nfft, Complex::new(T::zero(), T::zero()));
                fft.process(&mut buf);
                buf
            })
            .collect();
        Self { nfft, bins }
    }

    /// Phase-transform weighted cross-correlation of signal `j` against
    /// signal `i`. Index `k` (mod nfft) holds lag `k`; a peak at positive
    /// `k` means `j` lags `i` by `k` samples.
    pub fn phat_correlation(&self, i: usize, j: usize, cfg: &GccConfig<T>) -> Vec<T> {
        let mut cross: Vec<Complex<T>> = self.bins[j]
            .iter()
            .zip(&self.bins[i])
            .map(|(y, x)| y * x.conj())
            .collect();
        let peak_mag = cross.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        let floor = peak_mag * cfg.magnitude_floor;
        for c in cross.iter_mut() {
            let mag = c.norm();
            if mag > floor && mag > T::min_positive_value() {
                *c = *c / mag;
            } else {
                *c = Complex::new(T::zero(), T::zero());
            }
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(self.nfft).process(&mut cross);
        let scale = T::lit(1.0 / self.nfft as f64);
        cross.into_iter().map(|c| c.re * scale).collect()
    }
}

/// Locates the correlation peak within `|lag| <= max_lag` samples and
/// refines it with a parabola through the peak and its two neighbours.
pub(crate) fn pick_peak<T: Scalar>(
    corr: &[T],
    max_lag: usize,
    cfg: &GccConfig<T>,
) -> Result<T, SslError> {
    let n = corr.len() as isize;
    let max_lag = (max_lag as isize).min(n / 2 - 1);
    let at = |lag: isize| corr[lag.rem_euclid(n) as usize];

    let mut best_lag = 0isize;
    let mut best = T::neg_infinity();
    for lag in -max_lag..=max_lag {
        let v = at(lag);
        if v > best {
            best = v;
            best_lag = lag;
        }
    }
    if !best.is_finite() || best <= T::zero() {
        return Err(SslError::NoPeak);
    }
    let tie = best - best * cfg.tie_tolerance;
    let tied = (-max_lag..=max_lag).any(|lag| (lag - best_lag).abs() > 1 && at(lag) >= tie);
    if tied {
        return Err(SslError::NoPeak);
    }

    let (l, c, r) = (at(best_lag - 1), best, at(best_lag + 1));
    let denom = l - c - c + r;
    let mut frac = T::zero();
    if denom < T::zero() {
        frac = T::lit(0.5) * (l - r) / denom;
        frac = frac.max(T::lit(-0.5)).min(T::lit(0.5));
    }
    Ok(T::lit(best_lag as f64) + frac)
}

/// Time delay of `y` relative to `x` in seconds (positive when `y` lags),
/// searched within `|delay| <= max_delay`.
pub fn gcc_phat_delay<T: Scalar>(
    x: &[T],
    y: &[T],
    sample_rate: T,
    max_delay: T,
) -> Result<T, SslError> {
    gcc_phat_delay_with(x, y, sample_rate, max_delay, &GccConfig::default())
}

pub fn gcc_phat_delay_with<T: Scalar>(
    x: &[T],
    y: &[T],
    sample_rate: T,
    max_delay: T,
    cfg: &GccConfig<T>,
) -> Result<T, SslError> {
    if x.len() != y.len() {
        return Err(SslError::InvalidFrame(format!(
            "signal lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if !(sample_rate > T::zero()) {
        return Err(SslError::InvalidFrame(
            "sample rate must be positive".into(),
        ));
    }
    let duration = T::lit(x.len() as f64) / sample_rate;
    if !(max_delay >= T::zero()) || max_delay >= duration / T::lit(2.0) {
        return Err(SslError::InvalidFrame(format!(
            "max delay {max_delay} s must be below half the frame duration"
        )));
    }
    let spectra = Spectra::compute(&[x, y]);
    let corr = spectra.phat_correlation(0, 1, cfg);
    let max_lag = (max_delay * sample_rate).floor().to_usize().unwrap_or(0);
    let lag = pick_peak(&corr, max_lag, cfg)?;
    Ok(lag / sample_rate)
}

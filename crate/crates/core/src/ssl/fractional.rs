use crate::num::Scalar;

/// Half-width of the interpolation kernel in samples.
const HALF_TAPS: isize = 32;

/// Delays `signal` by `delay` samples (fractional allowed) with a
/// Blackman-windowed sinc interpolator. Samples before the start of the
/// input are taken as zero; output length equals input length.
pub fn fractional_delay<T: Scalar>(signal: &[T], delay: T) -> Vec<T> {
    let n = signal.len() as isize;
    let whole = delay.floor();
    let frac = delay - whole;
    let shift = whole.to_isize().unwrap_or(0);
    let pi = T::PI();
    let h = T::lit(HALF_TAPS as f64 + 1.0);

    // Tap k multiplies signal[n - shift - k]; kernel evaluated at k - frac.
    let taps: Vec<(isize, T)> = (-HALF_TAPS..=HALF_TAPS)
        .map(|k| {
            let t = T::lit(k as f64) - frac;
            let sinc = if t.abs() < T::lit(1e-12) {
                T::one()
            } else {
                (pi * t).sin() / (pi * t)
            };
            let u = t / h;
            let window = if u.abs() >= T::one() {
                T::zero()
            } else {
                T::lit(0.42)
                    + T::lit(0.5) * (pi * u).cos()
                    + T::lit(0.08) * (T::lit(2.0) * pi * u).cos()
            };
            (k, sinc * window)
        })
        .collect();

    (0..n)
        .map(|i| {
            taps.iter().fold(T::zero(), |acc, &(k, w)| {
                let src = i - shift - k;
                if (0..n).contains(&src) {
                    acc + signal[src as usize] * w
                } else {
                    acc
                }
            })
        })
        .collect()
}

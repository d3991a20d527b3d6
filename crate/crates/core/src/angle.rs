//! Circular (azimuth) arithmetic in degrees and the shared time type.
//!
//! Every azimuth in the crate is an [`Angle`] normalized to `[0, 360)`.
//! Degrees are used throughout; radians only appear inside trigonometric
//! helpers.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum AngleError {
    /// The unit vectors cancel out (e.g. an exactly antipodal pair), so no
    /// mean direction exists.
    #[error("resultant vector too short for a mean direction")]
    DegenerateMean,
    #[error("empty angle list")]
    Empty,
    #[error("angle is not a finite number")]
    NotFinite,
}

/// Azimuth in degrees, always in `[0, 360)`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle<T> {
    degrees: T,
}

fn normalize<T: Scalar>(v: T) -> T {
    let full = T::lit(360.0);
    let mut r = v % full;
    if r < T::zero() {
        r = r + full;
    }
    // -tiny % 360 + 360 rounds up to exactly 360.
    if r >= full {
        r = T::zero();
    }
    r
}

impl<T: Scalar> Angle<T> {
    /// Builds a normalized angle. Panics on NaN or infinity; use
    /// [`Angle::try_new`] for untrusted input.
    pub fn new(degrees: T) -> Self {
        Self::try_new(degrees).expect("angle must be finite")
    }

    pub fn try_new(degrees: T) -> Result<Self, AngleError> {
        if !degrees.is_finite() {
            return Err(AngleError::NotFinite);
        }
        Ok(Self {
            degrees: normalize(degrees),
        })
    }

    pub fn from_radians(rad: T) -> Self {
        Self::new(rad.to_degrees())
    }

    pub fn zero() -> Self {
        Self { degrees: T::zero() }
    }

    #[inline]
    pub fn degrees(self) -> T {
        self.degrees
    }

    #[inline]
    pub fn radians(self) -> T {
        self.degrees.to_radians()
    }

    /// Signed shortest rotation from `self` to `to`, in `(-180, 180]`.
    pub fn delta_to(self, to: Self) -> T {
        let half = T::lit(180.0);
        let mut d = to.degrees - self.degrees;
        if d > half {
            d = d - T::lit(360.0);
        } else if d <= -half {
            d = d + T::lit(360.0);
        }
        d
    }

    /// Unit vector `(cos, sin)` of the azimuth.
    pub fn unit(self) -> (T, T) {
        let r = self.radians();
        (r.cos(), r.sin())
    }

    /// Moves at most `max_step` degrees toward `target` along the shorter arc.
    /// Returns the new angle and whether the target was reached.
    pub fn step_toward(self, target: Self, max_step: T) -> (Self, bool) {
        let d = self.delta_to(target);
        if d.abs() <= max_step {
            (target, true)
        } else {
            (self + max_step * d.signum(), false)
        }
    }

    pub fn cast<U: Scalar>(self) -> Angle<U> {
        Angle::new(U::lit(self.degrees.as_f64()))
    }
}

impl<T: Scalar> Add<T> for Angle<T> {
    type Output = Self;
    fn add(self, rhs: T) -> Self {
        Self::new(self.degrees + rhs)
    }
}

impl<T: Scalar> Sub<T> for Angle<T> {
    type Output = Self;
    fn sub(self, rhs: T) -> Self {
        Self::new(self.degrees - rhs)
    }
}

impl<T: fmt::Debug> fmt::Debug for Angle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}°", self.degrees)
    }
}

impl<T: fmt::Display> fmt::Display for Angle<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.degrees, f)
    }
}

impl<T: Serialize> Serialize for Angle<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.degrees.serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Angle<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = T::deserialize(d)?;
        Angle::try_new(v).map_err(serde::de::Error::custom)
    }
}

/// Shortest angular separation in `[0, 180]`.
pub fn angular_distance<T: Scalar>(a: Angle<T>, b: Angle<T>) -> T {
    a.delta_to(b).abs()
}

fn degenerate_tolerance<T: Scalar>(n: usize) -> T {
    let floor = T::lit(1e-9);
    let rounding = T::epsilon() * T::lit(16.0 * n.max(1) as f64);
    floor.max(rounding)
}

/// Vector-sum mean direction of a set of azimuths.
pub fn circular_mean<T: Scalar>(angles: &[Angle<T>]) -> Result<Angle<T>, AngleError> {
    if angles.is_empty() {
        return Err(AngleError::Empty);
    }
    let (mut c, mut s) = (T::zero(), T::zero());
    for a in angles {
        let (ac, as_) = a.unit();
        c = c + ac;
        s = s + as_;
    }
    if c.hypot(s) <= degenerate_tolerance::<T>(angles.len()) {
        return Err(AngleError::DegenerateMean);
    }
    Ok(Angle::from_radians(s.atan2(c)))
}

/// Point on the shorter arc equidistant from `a` and `b`.
pub fn circular_midpoint<T: Scalar>(a: Angle<T>, b: Angle<T>) -> Result<Angle<T>, AngleError> {
    let d = a.delta_to(b);
    // Resultant of the two unit vectors is 2|cos(d/2)|.
    let resultant = T::lit(2.0) * (d.to_radians() / T::lit(2.0)).cos().abs();
    if resultant <= degenerate_tolerance::<T>(2) {
        return Err(AngleError::DegenerateMean);
    }
    Ok(a + d / T::lit(2.0))
}

/// Seconds since simulation start.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct Timestamp(f64);

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v.is_finite() && v >= 0.0 {
            Ok(Timestamp(v))
        } else {
            Err(serde::de::Error::custom(format!(
                "timestamp {v} must be a non-negative number"
            )))
        }
    }
}

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);

    /// Panics if `secs` is negative or not finite.
    pub fn new(secs: f64) -> Self {
        assert!(secs.is_finite() && secs >= 0.0, "invalid timestamp {secs}");
        Self(secs)
    }

    #[inline]
    pub fn secs(self) -> f64 {
        self.0
    }

    /// Elapsed seconds from `earlier` to `self`.
    pub fn since(self, earlier: Timestamp) -> f64 {
        self.0 - earlier.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.0)
    }
}

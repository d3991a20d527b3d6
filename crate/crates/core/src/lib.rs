//! Meeting-robot attention: sound source localization, DOA qualification,
//! the visual attention state machine, a meeting simulator and UEI metrics.

// `!(x > 0.0)` is used on purpose to reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod attention;
pub mod metrics;
pub mod num;
pub mod qualify;
pub mod sim;
pub mod ssl;
pub mod wav;

pub use angle::{angular_distance, circular_mean, circular_midpoint, AngleError, Timestamp};
pub use num::Scalar;

pub type Angle = angle::Angle<f64>;
pub type AudioFrame = ssl::AudioFrame<f64>;
pub type MicArrayGeometry = ssl::MicArrayGeometry<f64>;
pub type DoaEstimate = ssl::DoaEstimate<f64>;
pub type VadDecision = ssl::VadDecision<f64>;

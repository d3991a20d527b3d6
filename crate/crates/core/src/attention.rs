//! Robot attention state `S(θ1, f1, θ2, f2, θ3, f3, θ4, f4)` and its
//! transition function.
//!
//! The four action slots are:
//!
//! | slot | meaning                                         |
//! |------|-------------------------------------------------|
//! | 1    | turn to a directly qualified DOA                |
//! | 2    | re-center the single face in view               |
//! | 3    | turn to a neutral point or a cluster average    |
//! | 4    | center the lip-moving face(s) among several     |
//!
//! A flag is 1 while its action is running and clears once the robot's
//! heading reaches the slot's target. At most one flag is ever set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qualify::{QualifiedDoa, TurnKind};
use crate::{angular_distance, Angle, Timestamp};

/// Heading error, degrees, below which a turn counts as completed.
pub const REACHED_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error("invalid robot state: {0}")]
    InvalidState(String),
    #[error("invalid camera config: {0}")]
    InvalidCamera(String),
}

/// Which action slot produced a turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    Theta1,
    Theta2,
    Theta3,
    Theta4,
}

impl Reason {
    pub const ALL: [Reason; 4] = [
        Reason::Theta1,
        Reason::Theta2,
        Reason::Theta3,
        Reason::Theta4,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub frame_width: f64,
    /// Horizontal field of view, degrees.
    pub horizontal_fov: f64,
    /// Pixel offset from the frame center treated as centered.
    pub center_tolerance: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            frame_width: 640.0,
            horizontal_fov: 60.0,
            center_tolerance: 5.0,
        }
    }
}

impl CameraConfig {
    pub fn validate(&self) -> Result<(), AttentionError> {
        let bad = |m: String| Err(AttentionError::InvalidCamera(m));
        if !(self.frame_width.is_finite() && self.frame_width > 0.0) {
            return bad(format!("frame_width {} must be positive", self.frame_width));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < 180.0) {
            return bad(format!(
                "horizontal_fov {} must be in (0, 180)",
                self.horizontal_fov
            ));
        }
        if !(self.center_tolerance >= 0.0 && self.center_tolerance < self.frame_width / 2.0) {
            return bad(format!(
                "center_tolerance {} must be in [0, frame_width/2)",
                self.center_tolerance
            ));
        }
        Ok(())
    }

    /// Centering tolerance expressed in degrees.
    pub fn tolerance_degrees(&self) -> f64 {
        self.center_tolerance / self.frame_width * self.horizontal_fov
    }

    /// Rotation, degrees, that brings pixel column `x` to the frame center;
    /// zero inside the tolerance band.
    pub fn pixel_offset(&self, x: f64) -> f64 {
        let px = x - self.frame_width / 2.0;
        if px.abs() <= self.center_tolerance {
            0.0
        } else {
            px / self.frame_width * self.horizontal_fov
        }
    }
}

/// One detected face in a camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub face_id: u32,
    pub box_center_x: f64,
    pub box_width: f64,
    pub lips_moving: bool,
}

/// Signed rotation, degrees, that centers `face`. Positive means the face
/// sits right of center (larger azimuth).
pub fn centering_offset(face: &FaceObservation, cam: &CameraConfig) -> f64 {
    cam.pixel_offset(face.box_center_x)
}

/// Rotation toward the speaking face, or toward the middle of all speaking
/// faces when several move their lips. `None` when nobody speaks.
pub fn select_speaker(faces: &[FaceObservation], cam: &CameraConfig) -> Option<f64> {
    let xs: Vec<f64> = faces
        .iter()
        .filter(|f| f.lips_moving)
        .map(|f| f.box_center_x)
        .collect();
    match xs.as_slice() {
        [] => None,
        [x] => Some(cam.pixel_offset(*x)),
        _ => {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(cam.pixel_offset((lo + hi) / 2.0))
        }
    }
}

/// Rotation request handed to the base controller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnCommand {
    pub target: Angle,
    pub reason: Reason,
    pub issued_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttentionEvent {
    Qualified(QualifiedDoa),
    FaceFrame(Vec<FaceObservation>),
    Silence,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    heading: Angle,
    flags: [bool; 4],
    thetas: [Option<Angle>; 4],
    /// Qualified DOA that arrived while another action was running; applied
    /// once that action completes.
    pending: Option<QualifiedDoa>,
}

impl RobotState {
    /// `S_init`: all flags 0, facing `heading`.
    pub fn new(heading: Angle) -> Self {
        Self {
            heading,
            ..Default::default()
        }
    }

    /// Assembles a state without checking invariants; [`step`] rejects
    /// inconsistent ones.
    pub fn from_parts(
        heading: Angle,
        flags: [bool; 4],
        thetas: [Option<Angle>; 4],
        pending: Option<QualifiedDoa>,
    ) -> Self {
        Self {
            heading,
            flags,
            thetas,
            pending,
        }
    }

    pub fn heading(&self) -> Angle {
        self.heading
    }

    pub fn set_heading(&mut self, heading: Angle) {
        self.heading = heading;
    }

    pub fn flags(&self) -> [bool; 4] {
        self.flags
    }

    pub fn flag(&self, r: Reason) -> bool {
        self.flags[r.index()]
    }

    pub fn theta(&self, r: Reason) -> Option<Angle> {
        self.thetas[r.index()]
    }

    pub fn pending(&self) -> Option<&QualifiedDoa> {
        self.pending.as_ref()
    }

    /// The running action, if any.
    pub fn active(&self) -> Option<Reason> {
        Reason::ALL.into_iter().find(|r| self.flags[r.index()])
    }

    pub fn flag_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn validate(&self) -> Result<(), AttentionError> {
        if self.flag_count() > 1 {
            return Err(AttentionError::InvalidState(format!(
                "more than one control flag set: {:?}",
                self.flags
            )));
        }
        for r in Reason::ALL {
            if self.flags[r.index()] != self.thetas[r.index()].is_some() {
                return Err(AttentionError::InvalidState(format!(
                    "{r:?} flag and target disagree"
                )));
            }
        }
        Ok(())
    }

    fn clear(&mut self) {
        self.flags = [false; 4];
        self.thetas = [None; 4];
    }

    fn engage(&mut self, r: Reason, target: Angle, now: Timestamp) -> TurnCommand {
        self.clear();
        self.flags[r.index()] = true;
        self.thetas[r.index()] = Some(target);
        TurnCommand {
            target,
            reason: r,
            issued_at: now,
        }
    }

    fn apply_qualified(&mut self, q: &QualifiedDoa, now: Timestamp) -> TurnCommand {
        let r = match q.kind {
            TurnKind::Direct => Reason::Theta1,
            TurnKind::Neutral | TurnKind::ClusterAverage => Reason::Theta3,
        };
        self.engage(r, q.angle, now)
    }

    fn apply_visual(
        &mut self,
        faces: &[FaceObservation],
        cam: &CameraConfig,
        now: Timestamp,
    ) -> Option<TurnCommand> {
        let offset = match faces {
            [] => None,
            // A lone face is centered regardless of lips; slot 4 stays off.
            [face] => Some((Reason::Theta2, centering_offset(face, cam))),
            _ => select_speaker(faces, cam).map(|o| (Reason::Theta4, o)),
        };
        match offset {
            Some((r, o)) if o != 0.0 => Some(self.engage(r, self.heading + o, now)),
            _ => {
                self.clear();
                None
            }
        }
    }
}

/// Advances the attention state by one event.
///
/// A running action completes (its flag clears) once the heading matches
/// its target. While an action runs, camera frames are ignored and a new
/// qualified DOA is queued; the queue is served by the next camera frame
/// after completion. Silence clears every flag and never turns.
pub fn step(
    state: &RobotState,
    event: &AttentionEvent,
    now: Timestamp,
    cam: &CameraConfig,
) -> Result<(RobotState, Option<TurnCommand>), AttentionError> {
    state.validate()?;
    let mut next = state.clone();
    if let Some(r) = next.active() {
        let target = next.thetas[r.index()].expect("validated");
        if angular_distance(next.heading, target) <= REACHED_TOLERANCE {
            next.clear();
        }
    }
    let busy = next.active().is_some();

    let command = match event {
        AttentionEvent::Silence => {
            next.clear();
            None
        }
        AttentionEvent::Qualified(q) if busy => {
            next.pending = Some(*q);
            None
        }
        AttentionEvent::Qualified(q) => {
            next.pending = None;
            Some(next.apply_qualified(q, now))
        }
        AttentionEvent::FaceFrame(_) if busy => None,
        AttentionEvent::FaceFrame(faces) => match next.pending.take() {
            Some(q) => Some(next.apply_qualified(&q, now)),
            None => next.apply_visual(faces, cam, now),
        },
    };
    Ok((next, command))
}

//! The closed perception/rotation loop, one tick at a time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::acoustic::{synthesize_frame, AcousticConfig};
use super::scenario::{AttendeeId, Scenario};
use super::trace::{SummaryRow, Trace, TracePayload, TurnId};
use super::SimError;
use crate::attention::{
    self, AttentionEvent, CameraConfig, FaceObservation, RobotState, TurnCommand,
};
use crate::qualify::{self, QualifierState, RuleConfig};
use crate::ssl::{estimate_doa, SslError, VoiceActivityDetector};
use crate::{angular_distance, Angle, DoaEstimate, Timestamp, VadDecision};

/// Real face width, meters, used to size bounding boxes.
const FACE_WIDTH: f64 = 0.16;
const LIP_RNG_SALT: u64 = 0x6c69_7073;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Ground-truth azimuths plus Gaussian noise; no audio.
    #[default]
    Event,
    /// Synthesized microphone audio through the full SSL front-end.
    Acoustic,
}

/// How attendee azimuths map to pixel columns in simulated camera frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceProjection {
    /// Exact inverse of [`attention::centering_offset`].
    #[default]
    Linear,
    /// Pinhole camera: column proportional to the tangent of the offset.
    Pinhole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub mode: SimMode,
    /// Seconds per tick.
    pub dt: f64,
    /// Degrees per second.
    pub max_turn_rate: f64,
    pub camera: CameraConfig,
    pub projection: FaceProjection,
    /// Seconds between camera frames while the base is at rest.
    pub face_interval: f64,
    /// Seconds between DOA estimates during continuous speech.
    pub doa_interval: f64,
    /// Probability that a face's lip-movement flag is reported wrong.
    pub lip_error_prob: f64,
    pub rules: RuleConfig,
    pub acoustic: AcousticConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: SimMode::Event,
            dt: 0.05,
            max_turn_rate: 90.0,
            camera: CameraConfig::default(),
            projection: FaceProjection::Linear,
            face_interval: 0.25,
            doa_interval: 1.0,
            lip_error_prob: 0.0,
            rules: RuleConfig::default(),
            acoustic: AcousticConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        for (name, v) in [
            ("dt", self.dt),
            ("max_turn_rate", self.max_turn_rate),
            ("face_interval", self.face_interval),
            ("doa_interval", self.doa_interval),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.face_interval < self.dt || self.doa_interval < self.dt {
            return bad("face_interval and doa_interval must be at least dt".into());
        }
        if !(0.0..=1.0).contains(&self.lip_error_prob) {
            return bad(format!(
                "lip_error_prob {} must be in [0, 1]",
                self.lip_error_prob
            ));
        }
        self.camera
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        self.rules
            .validate()
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        if self.mode == SimMode::Acoustic {
            self.acoustic.validate()?;
            if self.dt * self.acoustic.sample_rate < crate::ssl::MIN_FRAME_LEN as f64 {
                return bad("dt too short for a VAD frame at this sample rate".into());
            }
        }
        Ok(())
    }

    fn ticks(&self, seconds: f64) -> u64 {
        (seconds / self.dt - 1e-9).ceil().max(1.0) as u64
    }
}

/// Faces the camera sees at `heading`, projected linearly, with lip flags
/// taken from the schedule at time `t`.
pub fn project_faces(
    scenario: &Scenario,
    heading: Angle,
    cam: &CameraConfig,
    t: Timestamp,
) -> Vec<FaceObservation> {
    project_faces_with(scenario, heading, cam, FaceProjection::Linear, t)
}

/// [`project_faces`] under an explicit projection model.
pub fn project_faces_with(
    scenario: &Scenario,
    heading: Angle,
    cam: &CameraConfig,
    projection: FaceProjection,
    t: Timestamp,
) -> Vec<FaceObservation> {
    let half_fov = cam.horizontal_fov / 2.0;
    scenario
        .attendees
        .iter()
        .filter(|a| angular_distance(a.azimuth, heading) < half_fov)
        .map(|a| {
            let offset = heading.delta_to(a.azimuth);
            let column = match projection {
                FaceProjection::Linear => offset / cam.horizontal_fov,
                FaceProjection::Pinhole => {
                    offset.to_radians().tan() / half_fov.to_radians().tan() / 2.0
                }
            };
            let angular_width = 2.0 * (FACE_WIDTH / 2.0 / a.distance).atan().to_degrees();
            FaceObservation {
                face_id: a.id,
                box_center_x: cam.frame_width / 2.0 + column * cam.frame_width,
                box_width: angular_width / cam.horizontal_fov * cam.frame_width,
                lips_moving: scenario.is_speaking(a.id, t.secs()),
            }
        })
        .collect()
}

/// Everything a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub trace: Trace,
    pub summary: Vec<SummaryRow>,
}

struct Motion {
    turn_id: TurnId,
    target: Angle,
}

/// Scheduled DOA emission in event mode.
struct PlannedDoa {
    tick: u64,
    attendee: AttendeeId,
}

/// Runs the scenario to its end and returns the trace.
///
/// Each tick: sense (VAD, and a DOA when one is due), qualify the DOA,
/// feed the resulting events to the attention state machine, then rotate
/// the base toward the latest command by at most `max_turn_rate * dt`.
/// Camera frames are delivered every `face_interval` while the base is at
/// rest. Deterministic for a given scenario and config.
pub fn run(scenario: &Scenario, cfg: &SimConfig) -> Result<SimOutput, SimError> {
    scenario.validate()?;
    cfg.validate()?;

    let total_ticks = cfg.ticks(scenario.duration());
    let doa_every = cfg.ticks(cfg.doa_interval);
    let face_every = cfg.ticks(cfg.face_interval);
    let max_step = cfg.max_turn_rate * cfg.dt;

    let mut doa_rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut lip_rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ LIP_RNG_SALT);
    let doa_noise = Normal::new(0.0, scenario.doa_noise_sigma)
        .map_err(|e| SimError::InvalidScenario(e.to_string()))?;

    let planned = plan_event_doas(scenario, cfg, doa_every);
    let mut planned_iter = planned.iter().peekable();

    let mut trace = Trace::default();
    let mut summary = Vec::with_capacity(total_ticks as usize);
    let mut robot = RobotState::new(scenario.initial_heading);
    let mut qualifier = QualifierState::default();
    let mut vad_detector = VoiceActivityDetector::new(cfg.acoustic.vad);
    let mut vad_onset: Option<u64> = None;
    let mut motion: Option<Motion> = None;
    let mut next_turn: TurnId = 0;
    let frame_len = (cfg.acoustic.doa_frame_seconds * cfg.acoustic.sample_rate).round() as usize;
    let tick_len = (cfg.dt * cfg.acoustic.sample_rate).round() as usize;

    trace.push(
        Timestamp::ZERO,
        robot.heading(),
        TracePayload::SessionStart {
            scenario_digest: scenario.digest(),
            attendee_ids: scenario.attendees.iter().map(|a| a.id).collect(),
        },
    );

    for k in 0..total_ticks {
        let now = Timestamp::new(k as f64 * cfg.dt);
        let heading = robot.heading();
        let speakers: Vec<AttendeeId> = scenario
            .active_segments(now.secs())
            .map(|s| s.attendee_id)
            .collect();

        // Voice activity.
        let (active, energy) = match cfg.mode {
            SimMode::Event => (!speakers.is_empty(), 0.0),
            SimMode::Acoustic => {
                let frame = synthesize_frame(scenario, now, tick_len, &cfg.acoustic)?;
                let d = vad_detector.update(&frame);
                (d.is_active(), d.energy())
            }
        };
        let was_active = vad_onset.is_some();
        if active && !was_active {
            vad_onset = Some(k);
            trace.push(now, heading, TracePayload::VadOnset);
        } else if !active && was_active {
            vad_onset = None;
            trace.push(now, heading, TracePayload::VadOffset);
        }
        let vad = match vad_onset {
            Some(on) => VadDecision::active(energy, (k - on) as f64 * cfg.dt),
            None => VadDecision::inactive(energy),
        };

        // Raw DOAs due at this tick.
        let mut raw: Vec<DoaEstimate> = Vec::new();
        match cfg.mode {
            SimMode::Event => {
                while let Some(p) = planned_iter.next_if(|p| p.tick == k) {
                    let truth = scenario.attendee(p.attendee).expect("validated").azimuth;
                    let noise = if scenario.doa_noise_sigma > 0.0 {
                        doa_noise.sample(&mut doa_rng)
                    } else {
                        0.0
                    };
                    raw.push(DoaEstimate {
                        angle: truth + noise,
                        timestamp: now,
                        confidence: 1.0,
                    });
                }
            }
            SimMode::Acoustic => {
                let frame_ticks = cfg.ticks(cfg.acoustic.doa_frame_seconds);
                let due = vad_onset.is_some_and(|on| {
                    k >= on + frame_ticks && (k - on - frame_ticks).is_multiple_of(doa_every)
                });
                if due {
                    let start =
                        Timestamp::new((now.secs() - cfg.acoustic.doa_frame_seconds).max(0.0));
                    let frame = synthesize_frame(scenario, start, frame_len, &cfg.acoustic)?;
                    match estimate_doa(&frame, &cfg.acoustic.geometry, &cfg.acoustic.doa) {
                        Ok(est) => raw.push(DoaEstimate {
                            timestamp: now,
                            ..est
                        }),
                        Err(SslError::NoVoiceActivity | SslError::NoPeak) => {}
                        Err(e) => return Err(SimError::InvalidConfig(e.to_string())),
                    }
                }
            }
        }

        // Qualification, then the events it produces for the controller.
        let mut events: Vec<AttentionEvent> = Vec::new();
        for doa in &raw {
            let (q, next) = qualify::qualify(std::mem::take(&mut qualifier), doa, &vad, &cfg.rules);
            qualifier = next;
            let cluster = qualifier.last_cluster.expect("qualify assigns a cluster");
            trace.push(
                now,
                heading,
                TracePayload::DoaRaw {
                    angle: doa.angle,
                    confidence: doa.confidence,
                    source_ids: speakers.clone(),
                    cluster,
                },
            );
            if let Some(q) = q {
                trace.push(
                    now,
                    heading,
                    TracePayload::DoaQualified {
                        angle: q.angle,
                        turn_kind: q.kind,
                        cluster: q.source_cluster,
                    },
                );
                events.push(AttentionEvent::Qualified(q));
            }
        }
        if !active && was_active {
            events.push(AttentionEvent::Silence);
        }
        if events.is_empty() && motion.is_none() && k % face_every == 0 {
            let mut faces = project_faces_with(scenario, heading, &cfg.camera, cfg.projection, now);
            if cfg.lip_error_prob > 0.0 {
                for f in &mut faces {
                    if lip_rng.random::<f64>() < cfg.lip_error_prob {
                        f.lips_moving = !f.lips_moving;
                    }
                }
            }
            trace.push(
                now,
                heading,
                TracePayload::FaceFrame {
                    faces: faces.clone(),
                },
            );
            events.push(AttentionEvent::FaceFrame(faces));
        }

        // Attention state machine.
        let mut turn_reason = String::new();
        for event in &events {
            let (next, command) = attention::step(&robot, event, now, &cfg.camera)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            robot = next;
            if let Some(TurnCommand { target, reason, .. }) = command {
                let turn_id = next_turn;
                next_turn += 1;
                trace.push(
                    now,
                    heading,
                    TracePayload::Turn {
                        turn_id,
                        target,
                        reason,
                    },
                );
                turn_reason = format!("{reason:?}");
                motion = Some(Motion { turn_id, target });
            }
        }

        // Base rotation.
        if let Some(m) = &motion {
            let (h, reached) = robot.heading().step_toward(m.target, max_step);
            robot.set_heading(h);
            if reached {
                trace.push(now, h, TracePayload::HeadingReached { turn_id: m.turn_id });
                motion = None;
            }
        }

        summary.push(SummaryRow {
            time: now.secs(),
            heading: robot.heading().degrees(),
            active_speaker: speakers
                .iter()
                .map(|id| id.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            turn_reason,
        });
    }

    Ok(SimOutput { trace, summary })
}

fn plan_event_doas(scenario: &Scenario, cfg: &SimConfig, every: u64) -> Vec<PlannedDoa> {
    if cfg.mode != SimMode::Event {
        return Vec::new();
    }
    let mut planned: Vec<PlannedDoa> = Vec::new();
    for seg in &scenario.schedule {
        let first = (seg.start.secs() / cfg.dt - 1e-9).ceil() as u64;
        let mut tick = first;
        while (tick as f64 * cfg.dt) < seg.end.secs() {
            planned.push(PlannedDoa {
                tick,
                attendee: seg.attendee_id,
            });
            tick += every;
        }
    }
    // Stable: same-tick estimates keep schedule order.
    planned.sort_by_key(|p| p.tick);
    planned
}

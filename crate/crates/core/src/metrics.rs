//! Objective counterparts of the five user-experience parameters and the
//! UEI that averages their scores.
//!
//! | p  | error                                                   | opportunities                         |
//! |----|---------------------------------------------------------|---------------------------------------|
//! | p1 | turn with no speech in the preceding `latency` window   | turns                                 |
//! | p2 | long, off-heading segment with no turn soon after onset | segments longer than `latency`        |
//! | p3 | turn settling far from every recent speaker and their mean | turns                              |
//! | p4 | face-driven turn settling on a non-speaker              | lip-active multi-face frames + Theta2 turns |
//! | p5 | segment never qualified and never faced                 | segments                              |

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attention::Reason;
use crate::sim::{Attendee, AttendeeId, Scenario, Segment, Trace, TraceEvent, TracePayload};
use crate::{angular_distance, circular_mean, Angle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("trace does not match scenario: {0}")]
    TraceMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricTolerances {
    /// Degrees a settled heading may miss its reference by.
    pub heading_tol: f64,
    /// Seconds the robot is given to react to speech.
    pub latency: f64,
    /// Degrees between heading and speaker below which no turn is needed.
    pub angle_threshold: f64,
}

impl Default for MetricTolerances {
    fn default() -> Self {
        Self {
            heading_tol: 10.0,
            latency: 2.0,
            angle_threshold: 5.0,
        }
    }
}

/// One count per parameter, in p1..p5 order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub unnecessary_turns: u32,
    pub missed_turns: u32,
    pub inaccurate_turns: u32,
    pub misjudged_speaker: u32,
    pub missed_detections: u32,
}

impl Counts {
    pub fn as_array(&self) -> [u32; 5] {
        [
            self.unnecessary_turns,
            self.missed_turns,
            self.inaccurate_turns,
            self.misjudged_speaker,
            self.missed_detections,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventCounts {
    pub errors: Counts,
    pub opportunities: Counts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UeiReport {
    pub p1: u8,
    pub p2: u8,
    pub p3: u8,
    pub p4: u8,
    pub p5: u8,
    pub uei: f64,
}

impl UeiReport {
    pub fn from_scores(p: [u8; 5]) -> Self {
        Self {
            p1: p[0],
            p2: p[1],
            p3: p[2],
            p4: p[3],
            p5: p[4],
            uei: uei(p),
        }
    }

    pub fn from_counts(c: &EventCounts) -> Self {
        let e = c.errors.as_array();
        let o = c.opportunities.as_array();
        Self::from_scores(std::array::from_fn(|i| score(e[i], o[i])))
    }

    pub fn scores(&self) -> [u8; 5] {
        [self.p1, self.p2, self.p3, self.p4, self.p5]
    }
}

/// `round(10 * (1 - errors / opportunities))`, halves rounded up, clamped
/// to `[1, 10]`; 10 when there was no opportunity to err.
pub fn score(errors: u32, opportunities: u32) -> u8 {
    if opportunities == 0 {
        return 10;
    }
    let (e, o) = (
        u64::from(errors.min(opportunities)),
        u64::from(opportunities),
    );
    // floor(10 (o - e) / o + 1/2) in integers
    let rounded = (20 * (o - e) + o) / (2 * o);
    rounded.clamp(1, 10) as u8
}

/// Equal-weight mean of the five scores.
pub fn uei(p: [u8; 5]) -> f64 {
    p.iter().map(|&x| f64::from(x)).sum::<f64>() / 5.0
}

pub fn evaluate(
    trace: &Trace,
    scenario: &Scenario,
    tol: &MetricTolerances,
) -> Result<UeiReport, MetricsError> {
    count_events(trace, scenario, tol).map(|c| UeiReport::from_counts(&c))
}

/// Counts errors and opportunities for each parameter.
pub fn count_events(
    trace: &Trace,
    scenario: &Scenario,
    tol: &MetricTolerances,
) -> Result<EventCounts, MetricsError> {
    check_provenance(trace, scenario)?;
    let events = &trace.events;
    let mut errors = Counts::default();
    let mut opportunities = Counts::default();

    for (turn, _, _, reason) in trace.turns() {
        let t = turn.time.secs();
        let speakers = scenario.speakers_within(t - tol.latency, t);
        let settled = settled_heading(trace, turn);
        let near_reference = |h: Angle| {
            reference_angles(&speakers)
                .into_iter()
                .any(|r| angular_distance(h, r) <= tol.heading_tol)
        };

        opportunities.unnecessary_turns += 1;
        opportunities.inaccurate_turns += 1;
        if speakers.is_empty() {
            errors.unnecessary_turns += 1;
        } else if !near_reference(settled) {
            errors.inaccurate_turns += 1;
        }
        if reason == Reason::Theta2 {
            opportunities.misjudged_speaker += 1;
        }
        if matches!(reason, Reason::Theta2 | Reason::Theta4) && !near_reference(settled) {
            errors.misjudged_speaker += 1;
        }
    }

    opportunities.misjudged_speaker += events
        .iter()
        .filter(|e| matches!(&e.payload, TracePayload::FaceFrame { faces } if faces.len() > 1 && faces.iter().any(|f| f.lips_moving)))
        .count() as u32;

    for seg in &scenario.schedule {
        let (start, end) = (seg.start.secs(), seg.end.secs());
        let speaker = scenario
            .attendee(seg.attendee_id)
            .expect("validated scenario")
            .azimuth;
        let before = heading_before(trace, scenario, start);

        if seg.len() > tol.latency {
            opportunities.missed_turns += 1;
            let turned = trace
                .turns()
                .any(|(e, ..)| (start..=start + tol.latency).contains(&e.time.secs()));
            if angular_distance(before, speaker) > tol.angle_threshold && !turned {
                errors.missed_turns += 1;
            }
        }

        opportunities.missed_detections += 1;
        let qualified = events.iter().any(|e| {
            matches!(e.payload, TracePayload::DoaQualified { .. })
                && (start..=end + tol.latency).contains(&e.time.secs())
        });
        if !qualified && !faced_during(trace, seg, before, speaker, tol.heading_tol) {
            errors.missed_detections += 1;
        }
    }

    Ok(EventCounts {
        errors,
        opportunities,
    })
}

/// Attendee azimuths plus their circular mean, the targets a turn may
/// legitimately settle on.
fn reference_angles(speakers: &[&Attendee]) -> Vec<Angle> {
    let mut refs: Vec<Angle> = speakers.iter().map(|a| a.azimuth).collect();
    if refs.len() > 1 {
        if let Ok(mean) = circular_mean(&refs) {
            refs.push(mean);
        }
    }
    refs
}

/// Heading at the first `HeadingReached` after `turn`, or the final
/// heading when the robot never came to rest.
fn settled_heading(trace: &Trace, turn: &TraceEvent) -> Angle {
    let start = trace
        .events
        .iter()
        .position(|e| std::ptr::eq(e, turn))
        .expect("turn belongs to trace");
    trace.events[start..]
        .iter()
        .find(|e| matches!(e.payload, TracePayload::HeadingReached { .. }))
        .or(trace.events.last())
        .map_or(turn.heading, |e| e.heading)
}

/// Heading logged by the last event strictly before `t`.
fn heading_before(trace: &Trace, scenario: &Scenario, t: f64) -> Angle {
    trace
        .events
        .iter()
        .take_while(|e| e.time.secs() < t)
        .last()
        .map_or(scenario.initial_heading, |e| e.heading)
}

fn faced_during(trace: &Trace, seg: &Segment, before: Angle, speaker: Angle, tol: f64) -> bool {
    std::iter::once(before)
        .chain(
            trace
                .events
                .iter()
                .filter(|e| seg.contains(e.time.secs()))
                .map(|e| e.heading),
        )
        .any(|h| angular_distance(h, speaker) <= tol)
}

fn check_provenance(trace: &Trace, scenario: &Scenario) -> Result<(), MetricsError> {
    if let Some((digest, _)) = trace.session_start() {
        let expected = scenario.digest();
        if digest != expected {
            return Err(MetricsError::TraceMismatch(format!(
                "trace was produced from scenario {digest}, not {expected}"
            )));
        }
    }
    let known: HashSet<AttendeeId> = scenario.attendees.iter().map(|a| a.id).collect();
    let unknown = |id: AttendeeId| MetricsError::TraceMismatch(format!("unknown attendee id {id}"));
    for e in &trace.events {
        match &e.payload {
            TracePayload::SessionStart { attendee_ids, .. }
            | TracePayload::DoaRaw {
                source_ids: attendee_ids,
                ..
            } => {
                if let Some(&id) = attendee_ids.iter().find(|id| !known.contains(id)) {
                    return Err(unknown(id));
                }
            }
            TracePayload::FaceFrame { faces } => {
                if let Some(f) = faces.iter().find(|f| !known.contains(&f.face_id)) {
                    return Err(unknown(f.face_id));
                }
            }
            _ => {}
        }
    }
    Ok(())
}

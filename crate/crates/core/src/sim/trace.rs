use serde::{Deserialize, Serialize};

use super::scenario::AttendeeId;
use super::SimError;
use crate::attention::{FaceObservation, Reason};
use crate::qualify::{ClusterId, TurnKind};
use crate::{Angle, Timestamp};

/// Identifies a turn command within one trace.
pub type TurnId = u32;

/// Kind-specific part of a trace line. Serialized inline next to `time`
/// and `heading` with a `kind` tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TracePayload {
    /// First line of every trace: ties it to the scenario that produced it.
    SessionStart {
        scenario_digest: String,
        attendee_ids: Vec<AttendeeId>,
    },
    DoaRaw {
        angle: Angle,
        confidence: f64,
        /// Attendees speaking when the estimate was taken.
        source_ids: Vec<AttendeeId>,
        cluster: ClusterId,
    },
    DoaQualified {
        angle: Angle,
        turn_kind: TurnKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cluster: Option<ClusterId>,
    },
    Turn {
        turn_id: TurnId,
        target: Angle,
        reason: Reason,
    },
    HeadingReached {
        turn_id: TurnId,
    },
    FaceFrame {
        faces: Vec<FaceObservation>,
    },
    VadOnset,
    VadOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: Timestamp,
    /// Robot heading when the event was logged.
    pub heading: Angle,
    #[serde(flatten)]
    pub payload: TracePayload,
}

/// Time-ordered log of one simulated session.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn push(&mut self, time: Timestamp, heading: Angle, payload: TracePayload) {
        debug_assert!(self.events.last().is_none_or(|e| e.time <= time));
        self.events.push(TraceEvent {
            time,
            heading,
            payload,
        });
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace event serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, SimError> {
        let mut events: Vec<TraceEvent> = Vec::new();
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let e: TraceEvent = serde_json::from_str(line)
                .map_err(|err| SimError::InvalidTrace(format!("line {}: {err}", i + 1)))?;
            if events.last().is_some_and(|p| p.time > e.time) {
                return Err(SimError::InvalidTrace(format!(
                    "line {}: time goes backwards",
                    i + 1
                )));
            }
            events.push(e);
        }
        Ok(Self { events })
    }

    pub fn turns(&self) -> impl Iterator<Item = (&TraceEvent, TurnId, Angle, Reason)> {
        self.events.iter().filter_map(|e| match e.payload {
            TracePayload::Turn {
                turn_id,
                target,
                reason,
            } => Some((e, turn_id, target, reason)),
            _ => None,
        })
    }

    pub fn count_turns(&self, reason: Option<Reason>) -> usize {
        self.turns()
            .filter(|t| reason.is_none_or(|r| t.3 == r))
            .count()
    }

    pub fn final_heading(&self) -> Option<Angle> {
        self.events.last().map(|e| e.heading)
    }

    pub fn session_start(&self) -> Option<(&str, &[AttendeeId])> {
        self.events.iter().find_map(|e| match &e.payload {
            TracePayload::SessionStart {
                scenario_digest,
                attendee_ids,
            } => Some((scenario_digest.as_str(), attendee_ids.as_slice())),
            _ => None,
        })
    }
}

/// One row of the per-tick plotting summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub time: f64,
    pub heading: f64,
    /// Attendee ids speaking at this tick, `;`-separated.
    pub active_speaker: String,
    /// Reason of a turn issued at this tick, empty otherwise.
    pub turn_reason: String,
}

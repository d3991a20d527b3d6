use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SimError;
use crate::{Angle, Timestamp};

/// Seconds of silence simulated after the last scheduled segment when the
/// scenario does not set an explicit duration.
pub const DEFAULT_TAIL: f64 = 3.0;

pub type AttendeeId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attendee {
    pub id: AttendeeId,
    pub azimuth: Angle,
    /// Meters from the robot.
    #[serde(default = "default_distance")]
    pub distance: f64,
    /// Fundamental of the synthesized voice; derived from the attendee's
    /// position in the list when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_hz: Option<f64>,
}

fn default_distance() -> f64 {
    1.5
}

/// One attendee speaking over `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub attendee_id: AttendeeId,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Segment {
    pub fn contains(&self, t: f64) -> bool {
        self.start.secs() <= t && t < self.end.secs()
    }

    pub fn len(&self) -> f64 {
        self.end.since(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() <= 0.0
    }
}

/// Scripted meeting: who sits where and who speaks when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub attendees: Vec<Attendee>,
    #[serde(default)]
    pub schedule: Vec<Segment>,
    #[serde(default)]
    pub seed: u64,
    /// Acoustic mode: speech-to-noise ratio of the synthesized audio.
    #[serde(default = "default_snr")]
    pub noise_snr_db: f64,
    /// Event mode: standard deviation of the Gaussian error added to
    /// ground-truth azimuths, in degrees.
    #[serde(default)]
    pub doa_noise_sigma: f64,
    /// Session length in seconds; defaults to the last segment end plus
    /// [`DEFAULT_TAIL`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub initial_heading: Angle,
}

fn default_snr() -> f64 {
    20.0
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidScenario(m));
        let mut ids = HashSet::new();
        for a in &self.attendees {
            if !ids.insert(a.id) {
                return bad(format!("duplicate attendee id {}", a.id));
            }
            if !(a.distance.is_finite() && a.distance > 0.0) {
                return bad(format!("attendee {} distance must be positive", a.id));
            }
            if let Some(p) = a.pitch_hz {
                if !(p.is_finite() && p > 0.0) {
                    return bad(format!("attendee {} pitch must be positive", a.id));
                }
            }
        }
        let mut by_attendee: HashMap<AttendeeId, Vec<&Segment>> = HashMap::new();
        for seg in &self.schedule {
            if !ids.contains(&seg.attendee_id) {
                return bad(format!(
                    "segment references unknown attendee {}",
                    seg.attendee_id
                ));
            }
            if seg.end <= seg.start {
                return bad(format!(
                    "segment of attendee {} ends at {} before it starts at {}",
                    seg.attendee_id, seg.end, seg.start
                ));
            }
            by_attendee.entry(seg.attendee_id).or_default().push(seg);
        }
        for (id, mut segs) in by_attendee {
            segs.sort_by(|a, b| a.start.partial_cmp(&b.start).expect("finite"));
            if let Some(w) = segs.windows(2).find(|w| w[1].start < w[0].end) {
                return bad(format!(
                    "attendee {id} has overlapping segments at {} and {}",
                    w[0].start, w[1].start
                ));
            }
        }
        if !self.noise_snr_db.is_finite() {
            return bad("noise_snr_db must be finite".into());
        }
        if !(self.doa_noise_sigma.is_finite() && self.doa_noise_sigma >= 0.0) {
            return bad("doa_noise_sigma must be non-negative".into());
        }
        if let Some(d) = self.duration {
            if !(d.is_finite() && d > 0.0) {
                return bad("duration must be positive".into());
            }
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.duration.unwrap_or_else(|| {
            self.schedule
                .iter()
                .map(|s| s.end.secs())
                .fold(0.0, f64::max)
                + DEFAULT_TAIL
        })
    }

    pub fn attendee(&self, id: AttendeeId) -> Option<&Attendee> {
        self.attendees.iter().find(|a| a.id == id)
    }

    pub fn attendee_index(&self, id: AttendeeId) -> Option<usize> {
        self.attendees.iter().position(|a| a.id == id)
    }

    /// Segments active at time `t`, in schedule order.
    pub fn active_segments(&self, t: f64) -> impl Iterator<Item = &Segment> {
        self.schedule.iter().filter(move |s| s.contains(t))
    }

    pub fn is_speaking(&self, id: AttendeeId, t: f64) -> bool {
        self.active_segments(t).any(|s| s.attendee_id == id)
    }

    /// Whether `id` speaks at any time within `[from, to]`.
    pub fn speaks_within(&self, id: AttendeeId, from: f64, to: f64) -> bool {
        self.schedule
            .iter()
            .any(|s| s.attendee_id == id && s.start.secs() <= to && s.end.secs() > from)
    }

    /// Attendees speaking at any time within `[from, to]`, sorted by id.
    pub fn speakers_within(&self, from: f64, to: f64) -> Vec<&Attendee> {
        let mut v: Vec<&Attendee> = self
            .attendees
            .iter()
            .filter(|a| self.speaks_within(a.id, from, to))
            .collect();
        v.sort_by_key(|a| a.id);
        v
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded. Ties traces to
    /// the scenario that produced them.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("scenario serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Parameters of [`generate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenParams {
    pub attendees: usize,
    pub seed: u64,
    /// Seconds of scripted conversation.
    pub duration: f64,
    pub doa_noise_sigma: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            attendees: 3,
            seed: 0,
            duration: 60.0,
            doa_noise_sigma: 2.0,
        }
    }
}

/// Random but reproducible meeting: attendees spread around the robot at
/// least 15 degrees apart, taking turns with utterances of 1-6 s separated
/// by pauses of 0.5-3 s.
pub fn generate(p: &GenParams) -> Result<Scenario, SimError> {
    if p.attendees == 0 || p.attendees > 24 {
        return Err(SimError::InvalidConfig(format!(
            "attendee count {} must be in 1..=24",
            p.attendees
        )));
    }
    if !(p.duration.is_finite() && p.duration > 0.0) {
        return Err(SimError::InvalidConfig("duration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let slot = 360.0 / p.attendees as f64;
    let base: f64 = rng.random_range(0.0..360.0);
    let jitter = (slot - 15.0).max(0.0) / 2.0;
    let attendees: Vec<Attendee> = (0..p.attendees)
        .map(|i| Attendee {
            id: i as AttendeeId + 1,
            azimuth: Angle::new(base + i as f64 * slot + rng.random_range(-jitter..=jitter)),
            distance: rng.random_range(1.0..3.0),
            pitch_hz: None,
        })
        .collect();

    let mut schedule = Vec::new();
    let mut t = rng.random_range(0.0..1.0);
    while t < p.duration {
        let who = attendees[rng.random_range(0..attendees.len())].id;
        let len: f64 = rng.random_range(1.0..6.0);
        let end = (t + len).min(p.duration);
        if end - t >= 0.5 {
            schedule.push(Segment {
                attendee_id: who,
                start: Timestamp::new(round_ms(t)),
                end: Timestamp::new(round_ms(end)),
            });
        }
        t = end + rng.random_range(0.5..3.0);
    }

    let s = Scenario {
        name: format!("generated-{}-{}", p.attendees, p.seed),
        attendees,
        schedule,
        seed: p.seed,
        noise_snr_db: 20.0,
        doa_noise_sigma: p.doa_noise_sigma,
        duration: None,
        initial_heading: Angle::zero(),
    };
    s.validate()?;
    Ok(s)
}

fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Scenario {
        Scenario::from_json(
            r#"{
                "attendees": [{"id": 1, "azimuth": 60}, {"id": 2, "azimuth": 120, "distance": 2.0}],
                "schedule": [
                    {"attendee_id": 1, "start": 0, "end": 1.5},
                    {"attendee_id": 2, "start": 2.5, "end": 4}
                ],
                "seed": 3
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn defaults_and_queries() {
        let s = base();
        assert_eq!(s.duration(), 7.0);
        assert_eq!(s.noise_snr_db, 20.0);
        assert_eq!(s.attendee(2).unwrap().distance, 2.0);
        assert!(s.is_speaking(1, 0.0));
        assert!(!s.is_speaking(1, 1.5));
        assert!(s.speaks_within(2, 3.9, 10.0));
        assert_eq!(s.speakers_within(1.0, 3.0).len(), 2);
        assert_eq!(s.active_segments(2.0).count(), 0);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let s = base();
        assert_eq!(s.digest(), base().digest());
        assert_eq!(s.digest().len(), 64);
        let mut t = base();
        t.seed = 4;
        assert_ne!(s.digest(), t.digest());
    }

    #[test]
    fn generated_scenarios_are_valid_and_reproducible() {
        for n in 1..=6 {
            let p = GenParams {
                attendees: n,
                seed: n as u64 * 13,
                ..Default::default()
            };
            let a = generate(&p).unwrap();
            assert_eq!(a, generate(&p).unwrap());
            assert_eq!(a.attendees.len(), n);
            assert!(!a.schedule.is_empty());
            let json = a.to_json_pretty();
            assert_eq!(Scenario::from_json(&json).unwrap(), a);
        }
        assert!(generate(&GenParams {
            attendees: 0,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn invalid_scenarios() {
        let cases = [
            r#"{"attendees": [{"id": 1, "azimuth": 0}, {"id": 1, "azimuth": 5}]}"#,
            r#"{"attendees": [{"id": 1, "azimuth": 0}], "schedule": [{"attendee_id": 9, "start": 0, "end": 1}]}"#,
            r#"{"attendees": [{"id": 1, "azimuth": 0}], "schedule": [{"attendee_id": 1, "start": 2, "end": 1}]}"#,
            r#"{"attendees": [{"id": 1, "azimuth": 0}], "schedule": [
                {"attendee_id": 1, "start": 0, "end": 2}, {"attendee_id": 1, "start": 1, "end": 3}]}"#,
            r#"{"attendees": [{"id": 1, "azimuth": 0, "distance": 0}]}"#,
            r#"{"attendees": [{"id": 1, "azimuth": 0}], "doa_noise_sigma": -1}"#,
            r#"{"attendees": [{"id": 1, "azimuth": 0}], "schedule": [{"attendee_id": 1, "start": -1, "end": 1}]}"#,
            r#"{"attendees": "#,
        ];
        for c in cases {
            assert!(
                matches!(Scenario::from_json(c), Err(SimError::InvalidScenario(_))),
                "{c}"
            );
        }
    }
}

//! Independent reference implementations shared by the integration tests.
//! Written from the rule descriptions, deliberately without calling into
//! the library's angle helpers.

#![allow(dead_code)]

pub mod table;

use meetbot::attention::Reason;
use meetbot::qualify::TurnKind;
use meetbot::sim::{Scenario, Trace, TracePayload};
use meetbot::{Angle, Timestamp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn wrap(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

pub fn dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Circular mean by summed unit vectors; `None` when they cancel.
pub fn mean(angles: &[f64]) -> Option<f64> {
    let (s, c) = angles.iter().fold((0.0, 0.0), |(s, c), a| {
        let r = a.to_radians();
        (s + r.sin(), c + r.cos())
    });
    if (s * s + c * c).sqrt() <= 1e-9_f64.max(16.0 * angles.len() as f64 * f64::EPSILON) {
        None
    } else {
        Some(wrap(s.atan2(c).to_degrees()))
    }
}

/// Point halfway along the shorter arc from `a` to `b`.
pub fn midpoint(a: f64, b: f64) -> Option<f64> {
    let mut d = wrap(b - a);
    if d > 180.0 {
        d -= 360.0;
    }
    if (d.abs() - 180.0).abs() < 1e-12 {
        None
    } else {
        Some(wrap(a + d / 2.0))
    }
}

/// One raw estimate with the VAD run length reported alongside it.
#[derive(Debug, Clone, Copy)]
pub struct Obs {
    pub angle: f64,
    pub time: f64,
    pub vad: f64,
}

/// Random DOA stream: a few seats with jitter, occasional outliers, gaps
/// from bursts to long pauses, VAD runs short and long. With `quantized`
/// all values sit on coarse grids so rule boundaries are hit exactly.
pub fn random_stream(rng: &mut ChaCha8Rng, len: usize, quantized: bool) -> Vec<Obs> {
    let seats: Vec<f64> = (0..rng.random_range(1..5))
        .map(|_| rng.random_range(0.0..360.0))
        .collect();
    let mut t = 0.0;
    let mut run = 0.0;
    (0..len)
        .map(|_| {
            let dt = if quantized {
                rng.random_range(0..9) as f64 * 0.5
            } else {
                rng.random_range(0.0..4.5)
            };
            t += dt;
            run = if rng.random_bool(0.3) { 0.0 } else { run + dt };
            let vad = if quantized {
                (run * 2.0_f64).round() / 2.0
            } else {
                run
            };
            let base = seats[rng.random_range(0..seats.len())];
            let angle = if rng.random_bool(0.1) {
                rng.random_range(0.0..360.0)
            } else {
                base + rng.random_range(-12.0..12.0)
            };
            Obs {
                angle: if quantized {
                    wrap(angle.round())
                } else {
                    wrap(angle)
                },
                time: t,
                vad,
            }
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefOut {
    pub angle: f64,
    pub kind: TurnKind,
    pub cluster: Option<usize>,
}

/// Literal transcription of the qualification flowchart with default
/// thresholds: gap 2 s, angle 5 deg, speech activity 4 s, join 20 deg.
/// Angular comparisons treat distances within 1e-9 deg as equal.
pub struct Reference {
    pub prev_raw: Option<(f64, f64)>,
    pub prev_qualified: Option<f64>,
    pub clusters: Vec<Vec<f64>>,
}

impl Reference {
    pub fn new() -> Self {
        Self {
            prev_raw: None,
            prev_qualified: None,
            clusters: Vec::new(),
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        mean(&self.clusters[i]).unwrap_or(self.clusters[i][0])
    }

    /// Joins the nearest region within 20 deg (lowest index on ties, both
    /// judged to 1e-9 deg) or opens a new one; returns its index.
    pub fn assign(&mut self, angle: f64) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.clusters.len() {
            let d = dist(self.center(i), angle);
            if best.is_none_or(|(_, bd)| d < bd - 1e-9) {
                best = Some((i, d));
            }
        }
        match best {
            Some((i, d)) if d <= 20.0 + 1e-9 => {
                self.clusters[i].push(angle);
                i
            }
            _ => {
                self.clusters.push(vec![angle]);
                self.clusters.len() - 1
            }
        }
    }

    pub fn step(&mut self, o: Obs) -> Option<RefOut> {
        let region = self.assign(o.angle);
        let prev = self.prev_raw.replace((o.angle, o.time));

        // Is there sustained speech activity from this region?
        if o.vad > 4.0 {
            let out = RefOut {
                angle: self.center(region),
                kind: TurnKind::ClusterAverage,
                cluster: Some(region),
            };
            self.prev_qualified = Some(out.angle);
            return Some(out);
        }
        // Did two DOAs arrive within 2 s of each other?
        if let Some((pa, pt)) = prev {
            if o.time - pt < 2.0 {
                if dist(pa, o.angle) > 5.0 + 1e-9 {
                    let out = RefOut {
                        angle: midpoint(pa, o.angle).unwrap_or(pa),
                        kind: TurnKind::Neutral,
                        cluster: None,
                    };
                    self.prev_qualified = Some(out.angle);
                    return Some(out);
                }
                return None;
            }
        }
        // Isolated DOA: turn if it moved more than 5 deg from the target.
        match self.prev_qualified {
            Some(q) if dist(q, o.angle) <= 5.0 + 1e-9 => None,
            _ => {
                self.prev_qualified = Some(o.angle);
                Some(RefOut {
                    angle: o.angle,
                    kind: TurnKind::Direct,
                    cluster: None,
                })
            }
        }
    }
}

/// Loads one of the bundled scenarios by file stem.
pub fn bundled(name: &str) -> Scenario {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    Scenario::from_json(&text).unwrap()
}

pub const BUNDLED: [&str; 3] = ["single_speaker", "two_attendees", "group"];

pub fn push_turn(trace: &mut Trace, t: f64, heading: f64, id: u32, target: f64, reason: Reason) {
    let h = Angle::new(heading);
    trace.push(
        Timestamp::new(t),
        h,
        TracePayload::Turn {
            turn_id: id,
            target: Angle::new(target),
            reason,
        },
    );
    trace.push(
        Timestamp::new(t),
        Angle::new(target),
        TracePayload::HeadingReached { turn_id: id },
    );
}

/// Inserts a Turn (and its arrival) at `t` without moving the robot.
pub fn inject_turn(trace: &Trace, t: f64) -> Trace {
    let at = trace.events.partition_point(|e| e.time.secs() <= t);
    let h = trace.events[at - 1].heading;
    let id = trace.turns().map(|x| x.1).max().map_or(0, |m| m + 1);
    let mut extra = Trace::default();
    push_turn(&mut extra, t, h.degrees(), id, h.degrees(), Reason::Theta1);
    let mut out = trace.clone();
    out.events.splice(at..at, extra.events);
    out
}

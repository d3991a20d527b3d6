//! Transition-table oracle for the attention state machine and the
//! camera-driven centering loop.

use meetbot::attention::{
    step, AttentionError, AttentionEvent, CameraConfig, FaceObservation, Reason, RobotState,
};
use meetbot::qualify::{QualifiedDoa, TurnKind};
use meetbot::sim::{project_faces_with, FaceProjection, Scenario};
use meetbot::{Angle, Timestamp};
use rand::Rng;

pub const HEADING: f64 = 100.0;
pub const TARGET: f64 = 140.0;

/// Event kinds the controller distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Direct,
    Neutral,
    Cluster,
    Silence,
    NoFace,
    CenteredFace,
    OffCenterFace,
    SpeakingGroup,
    SilentGroup,
}

pub const KINDS: [Kind; 9] = [
    Kind::Direct,
    Kind::Neutral,
    Kind::Cluster,
    Kind::Silence,
    Kind::NoFace,
    Kind::CenteredFace,
    Kind::OffCenterFace,
    Kind::SpeakingGroup,
    Kind::SilentGroup,
];

pub fn face(id: u32, x: f64, lips: bool) -> FaceObservation {
    FaceObservation {
        face_id: id,
        box_center_x: x,
        box_width: 50.0,
        lips_moving: lips,
    }
}

pub fn qualified(kind: TurnKind, angle: f64) -> QualifiedDoa {
    QualifiedDoa {
        angle: Angle::new(angle),
        timestamp: Timestamp::ZERO,
        kind,
        source_cluster: (kind == TurnKind::ClusterAverage).then_some(0),
    }
}

pub fn event(k: Kind) -> AttentionEvent {
    match k {
        Kind::Direct => AttentionEvent::Qualified(qualified(TurnKind::Direct, 200.0)),
        Kind::Neutral => AttentionEvent::Qualified(qualified(TurnKind::Neutral, 210.0)),
        Kind::Cluster => AttentionEvent::Qualified(qualified(TurnKind::ClusterAverage, 220.0)),
        Kind::Silence => AttentionEvent::Silence,
        Kind::NoFace => AttentionEvent::FaceFrame(vec![]),
        Kind::CenteredFace => AttentionEvent::FaceFrame(vec![face(0, 322.0, true)]),
        // 480 px on a 640 px, 60 degree frame: +15 degrees.
        Kind::OffCenterFace => AttentionEvent::FaceFrame(vec![face(0, 480.0, false)]),
        // Lips at 160 px: -15 degrees.
        Kind::SpeakingGroup => {
            AttentionEvent::FaceFrame(vec![face(0, 160.0, true), face(1, 500.0, false)])
        }
        Kind::SilentGroup => {
            AttentionEvent::FaceFrame(vec![face(0, 160.0, false), face(1, 500.0, false)])
        }
    }
}

/// Expected outcome: resulting flags and the command (reason, target).
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Invalid,
    Step {
        flags: [bool; 4],
        command: Option<(Reason, f64)>,
        pending: Option<f64>,
    },
}

pub fn only(r: Reason) -> [bool; 4] {
    let mut f = [false; 4];
    f[r as usize] = true;
    f
}

/// The transition table, written out row by row.
///
/// Context: whether an action is in progress (a flag is set and its target
/// not yet reached) and whether a qualified DOA is queued (at 250 deg,
/// Direct). Queued DOAs are served by the next camera frame once idle.
pub fn oracle(flags: [bool; 4], reached: bool, queued: bool, k: Kind) -> Outcome {
    if flags.iter().filter(|&&f| f).count() > 1 {
        return Outcome::Invalid;
    }
    let busy = flags.iter().any(|&f| f) && !reached;
    let idle_flags = if busy { flags } else { [false; 4] };
    let q = if queued { Some(250.0) } else { None };
    let step = |flags, command, pending| Outcome::Step {
        flags,
        command,
        pending,
    };
    use Kind::*;
    match (busy, queued, k) {
        // Silence always quiets the robot and keeps the queue.
        (_, _, Silence) => step([false; 4], None, q),
        // Qualified DOAs preempt nothing: queued while busy.
        (true, _, Direct) => step(flags, None, Some(200.0)),
        (true, _, Neutral) => step(flags, None, Some(210.0)),
        (true, _, Cluster) => step(flags, None, Some(220.0)),
        (false, _, Direct) => step(only(Reason::Theta1), Some((Reason::Theta1, 200.0)), None),
        (false, _, Neutral) => step(only(Reason::Theta3), Some((Reason::Theta3, 210.0)), None),
        (false, _, Cluster) => step(only(Reason::Theta3), Some((Reason::Theta3, 220.0)), None),
        // Camera frames are ignored mid-action.
        (true, _, _) => step(flags, None, q),
        // Idle with a queued DOA: the frame releases it.
        (false, true, _) => step(only(Reason::Theta1), Some((Reason::Theta1, 250.0)), None),
        // Idle, nothing queued: visual logic.
        (false, false, NoFace | CenteredFace | SilentGroup) => step(idle_flags, None, None),
        (false, false, OffCenterFace) => step(
            only(Reason::Theta2),
            Some((Reason::Theta2, HEADING + 15.0)),
            None,
        ),
        (false, false, SpeakingGroup) => step(
            only(Reason::Theta4),
            Some((Reason::Theta4, HEADING - 15.0)),
            None,
        ),
    }
}

pub fn state(flags: [bool; 4], reached: bool, queued: bool) -> RobotState {
    let target = if reached { HEADING } else { TARGET };
    let thetas = flags.map(|f| f.then(|| Angle::new(target)));
    let pending = queued.then(|| qualified(TurnKind::Direct, 250.0));
    RobotState::from_parts(Angle::new(HEADING), flags, thetas, pending)
}

pub fn observe(s: &RobotState, k: Kind) -> Outcome {
    match step(s, &event(k), Timestamp::new(1.0), &CameraConfig::default()) {
        Err(AttentionError::InvalidState(_)) => Outcome::Invalid,
        Err(e) => panic!("unexpected error {e}"),
        Ok((next, cmd)) => Outcome::Step {
            flags: next.flags(),
            command: cmd.map(|c| (c.reason, c.target.degrees())),
            pending: next.pending().map(|q| q.angle.degrees()),
        },
    }
}

pub fn single_face_scenario(azimuth: f64) -> Scenario {
    Scenario::from_json(&format!(
        r#"{{"attendees": [{{"id": 0, "azimuth": {azimuth}}}]}}"#
    ))
    .unwrap()
}

/// Iterates camera frame -> turn -> arrival until the face is centered.
/// Returns the pixel offsets seen at each frame.
pub fn centering_run(
    offset: f64,
    projection: FaceProjection,
    cam: &CameraConfig,
) -> Result<Vec<f64>, String> {
    let scenario = single_face_scenario(180.0 + offset);
    let mut s = RobotState::new(Angle::new(180.0));
    let mut seen = Vec::new();
    let limit = (cam.horizontal_fov / cam.tolerance_degrees()).ceil() as usize;
    for i in 0..=limit + 1 {
        let faces = project_faces_with(&scenario, s.heading(), cam, projection, Timestamp::ZERO);
        if faces.len() != 1 {
            return Err(format!("{projection:?} {offset}: face left the frame"));
        }
        seen.push((faces[0].box_center_x - cam.frame_width / 2.0).abs());
        let (next, cmd) = step(
            &s,
            &AttentionEvent::FaceFrame(faces),
            Timestamp::new(i as f64),
            cam,
        )
        .map_err(|e| e.to_string())?;
        s = next;
        match cmd {
            Some(c) if c.reason == Reason::Theta2 => s.set_heading(c.target),
            Some(c) => return Err(format!("unexpected {:?} turn", c.reason)),
            None => return Ok(seen),
        }
    }
    Err(format!(
        "{projection:?}: no convergence from {offset}: {seen:?}"
    ))
}

/// Checks every (flag configuration x reached x queued x event) row
/// against [`oracle`]; returns the number of rows.
pub fn exhaustive_check() -> Result<usize, String> {
    let mut rows = 0;
    for bits in 0u8..16 {
        let flags = std::array::from_fn(|i| bits & (1 << i) != 0);
        for reached in [false, true] {
            for queued in [false, true] {
                for k in KINDS {
                    let (got, want) = (
                        observe(&state(flags, reached, queued), k),
                        oracle(flags, reached, queued, k),
                    );
                    if got != want {
                        return Err(format!(
                            "flags {flags:?} reached {reached} queued {queued} event {k:?}: {got:?} != {want:?}"
                        ));
                    }
                    rows += 1;
                }
            }
        }
    }
    Ok(rows)
}

/// Random events with the base sometimes completing the running action in
/// between. After every transition: at most one flag, flags and targets in
/// step, a flag only rises above higher-priority ones that are clear, and
/// every command is backed by its flag.
pub fn random_walk(seed: u64, steps: usize) -> Result<(), String> {
    let mut r = super::rng(seed);
    let cam = CameraConfig::default();
    let mut s = RobotState::new(Angle::zero());
    for i in 0..steps {
        if let Some(active) = s.active() {
            if r.random_bool(0.4) {
                s.set_heading(s.theta(active).unwrap());
            }
        }
        let k = KINDS[r.random_range(0..KINDS.len())];
        let before = s.flags();
        let (next, cmd) = step(&s, &event(k), Timestamp::new(i as f64 * 0.05), &cam)
            .map_err(|e| e.to_string())?;
        let after = next.flags();
        let fail = |what: &str| Err(format!("step {i} ({k:?}): {what}; {before:?} -> {after:?}"));
        if next.flag_count() > 1 {
            return fail("flags not exclusive");
        }
        if Reason::ALL
            .iter()
            .any(|&r| after[r.index()] != next.theta(r).is_some())
        {
            return fail("flag without target");
        }
        let rose = |j: usize| !before[j] && after[j];
        if (1..4).any(|j| rose(j) && after[..j].iter().any(|&f| f)) {
            return fail("flag rose over a higher-priority flag");
        }
        match cmd {
            Some(c) if !after[c.reason.index()] || next.theta(c.reason) != Some(c.target) => {
                return fail("command without its flag")
            }
            None if (0..4).any(rose) => return fail("flag rose without a command"),
            _ => {}
        }
        s = next;
    }
    Ok(())
}

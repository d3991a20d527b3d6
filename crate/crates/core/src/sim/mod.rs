mod acoustic;
mod run;
mod scenario;
mod trace;

pub use acoustic::{
    dump_wav, synthesize_frame, voice_pitch, voice_sample, AcousticConfig, SPEECH_POWER,
};
pub use run::{
    project_faces, project_faces_with, run, FaceProjection, SimConfig, SimMode, SimOutput,
};
pub use scenario::{generate, Attendee, AttendeeId, GenParams, Scenario, Segment, DEFAULT_TAIL};
pub use trace::{SummaryRow, Trace, TraceEvent, TracePayload, TurnId};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

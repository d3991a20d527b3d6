use std::path::Path;

use clap::Args;
use meetbot::metrics::MetricTolerances;
use meetbot::qualify::GapReference;
use meetbot::sim::{SimConfig, SimMode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every tunable knob in one file.
///
/// ```json
/// { "sim": { "dt": 0.05, "rules": { "gap_threshold": 2.0 }, "camera": { "horizontal_fov": 60 } },
///   "metrics": { "heading_tol": 10, "latency": 2 } }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub sim: SimConfig,
    pub metrics: MetricTolerances,
}

impl CliConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = crate::read_file(path)?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.sim
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let m = &self.metrics;
        for (name, v) in [
            ("heading_tol", m.heading_tol),
            ("latency", m.latency),
            ("metric angle_threshold", m.angle_threshold),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Event,
    Acoustic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum GapReferenceArg {
    Raw,
    Qualified,
}

/// Flag overrides; each one wins over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub mode: Option<ModeArg>,
    /// Seconds per simulation tick
    #[arg(long)]
    pub dt: Option<f64>,
    /// Degrees per second
    #[arg(long)]
    pub max_turn_rate: Option<f64>,
    /// Seconds between raw DOA estimates
    #[arg(long)]
    pub doa_interval: Option<f64>,
    #[arg(long)]
    pub lip_error_prob: Option<f64>,
    #[arg(long)]
    pub gap_threshold: Option<f64>,
    /// Also sets the metric's angle threshold
    #[arg(long)]
    pub angle_threshold: Option<f64>,
    #[arg(long)]
    pub speech_activity_min: Option<f64>,
    #[arg(long)]
    pub cluster_join_threshold: Option<f64>,
    #[arg(long)]
    pub gap_reference: Option<GapReferenceArg>,
    /// Horizontal field of view, degrees
    #[arg(long)]
    pub fov: Option<f64>,
    #[arg(long)]
    pub frame_width: Option<f64>,
    /// Pixels
    #[arg(long)]
    pub center_tolerance: Option<f64>,
    #[arg(long)]
    pub heading_tol: Option<f64>,
    #[arg(long)]
    pub latency: Option<f64>,
}

impl Overrides {
    /// Config file merged with the flags, then validated.
    pub fn resolve(&self) -> Result<CliConfig, CliError> {
        let mut c = CliConfig::load(self.config.as_deref())?;
        let sim = &mut c.sim;
        if let Some(m) = self.mode {
            sim.mode = match m {
                ModeArg::Event => SimMode::Event,
                ModeArg::Acoustic => SimMode::Acoustic,
            };
        }
        set(&mut sim.dt, self.dt);
        set(&mut sim.max_turn_rate, self.max_turn_rate);
        set(&mut sim.doa_interval, self.doa_interval);
        set(&mut sim.lip_error_prob, self.lip_error_prob);
        set(&mut sim.rules.gap_threshold, self.gap_threshold);
        set(&mut sim.rules.angle_threshold, self.angle_threshold);
        set(&mut sim.rules.speech_activity_min, self.speech_activity_min);
        set(
            &mut sim.rules.cluster_join_threshold,
            self.cluster_join_threshold,
        );
        if let Some(g) = self.gap_reference {
            sim.rules.gap_reference = match g {
                GapReferenceArg::Raw => GapReference::RawDoa,
                GapReferenceArg::Qualified => GapReference::QualifiedDoa,
            };
        }
        set(&mut sim.camera.horizontal_fov, self.fov);
        set(&mut sim.camera.frame_width, self.frame_width);
        set(&mut sim.camera.center_tolerance, self.center_tolerance);
        set(&mut c.metrics.heading_tol, self.heading_tol);
        set(&mut c.metrics.latency, self.latency);
        set(&mut c.metrics.angle_threshold, self.angle_threshold);
        c.validate()?;
        Ok(c)
    }
}

fn set(slot: &mut f64, v: Option<f64>) {
    if let Some(v) = v {
        *slot = v;
    }
}

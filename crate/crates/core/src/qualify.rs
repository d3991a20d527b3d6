//! Turns the raw DOA stream into qualified DOAs, the ones that justify a
//! robot turn, and keeps the online clustering of attendee directions.
//!
//! Rules are checked in this order for every incoming estimate:
//!
//! 1. sustained speech activity from a cluster: turn to the cluster average;
//! 2. two conflicting estimates within the gap threshold: turn to the
//!    neutral point between them;
//! 3. an isolated estimate (gap at or above the threshold) far enough from
//!    the current attention target: turn to it directly;
//! 4. otherwise suppress.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ssl::VadDecision;
use crate::{angular_distance, circular_mean, circular_midpoint, Angle, DoaEstimate, Timestamp};

pub type ClusterId = u32;

/// Degrees within which angular distances count as equal: cluster ties,
/// and distances sitting on a threshold. Absorbs rounding in cluster
/// centers so boundary decisions do not hinge on the last bit.
pub const ANGLE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid rule config: {0}")]
pub struct RuleConfigError(pub String);

/// Which earlier event the gap threshold is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapReference {
    /// Time since the previous raw DOA estimate.
    #[default]
    RawDoa,
    /// Time since the previous qualified DOA.
    QualifiedDoa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleConfig {
    /// Seconds separating an isolated estimate from a burst.
    pub gap_threshold: f64,
    /// Minimum angular change, degrees, for a direct turn.
    pub angle_threshold: f64,
    /// Continuous VAD, seconds, beyond which speech counts as group activity.
    pub speech_activity_min: f64,
    /// Maximum distance, degrees, from a cluster center to join it.
    pub cluster_join_threshold: f64,
    pub gap_reference: GapReference,
}

impl Default for RuleConfig {
    fn default() -> Self {
        Self {
            gap_threshold: 2.0,
            angle_threshold: 5.0,
            speech_activity_min: 4.0,
            cluster_join_threshold: 20.0,
            gap_reference: GapReference::RawDoa,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<(), RuleConfigError> {
        let positive = [
            ("gap_threshold", self.gap_threshold),
            ("angle_threshold", self.angle_threshold),
            ("speech_activity_min", self.speech_activity_min),
            ("cluster_join_threshold", self.cluster_join_threshold),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(RuleConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if self.angle_threshold >= 180.0 || self.cluster_join_threshold >= 180.0 {
            return Err(RuleConfigError(
                "angle thresholds must be below 180 degrees".into(),
            ));
        }
        Ok(())
    }
}

/// Group of nearby DOAs, tracked by the circular mean of its members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: ClusterId,
    pub center: Angle,
    pub members: Vec<Angle>,
    pub last_active: Timestamp,
}

impl Cluster {
    fn singleton(id: ClusterId, angle: Angle, t: Timestamp) -> Self {
        Self {
            id,
            center: angle,
            members: vec![angle],
            last_active: t,
        }
    }

    fn push(&mut self, angle: Angle, t: Timestamp) {
        self.members.push(angle);
        self.center = circular_mean(&self.members).unwrap_or(self.members[0]);
        self.last_active = t;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurnKind {
    Direct,
    Neutral,
    ClusterAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualifiedDoa {
    pub angle: Angle,
    pub timestamp: Timestamp,
    pub kind: TurnKind,
    /// Set for [`TurnKind::ClusterAverage`]: the cluster whose center this is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_cluster: Option<ClusterId>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QualifierState {
    pub last_doa: Option<(Angle, Timestamp)>,
    pub last_qualified: Option<QualifiedDoa>,
    pub clusters: Vec<Cluster>,
    pub vad_run_length: f64,
    /// Cluster the most recent DOA was assigned to.
    #[serde(default)]
    pub last_cluster: Option<ClusterId>,
}

impl QualifierState {
    pub fn cluster(&self, id: ClusterId) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.id == id)
    }
}

/// Adds `doa` to the nearest cluster if its center is within the join
/// threshold (lowest id wins ties, both up to [`ANGLE_EPSILON`]),
/// otherwise opens a new cluster.
pub fn assign_cluster(
    mut state: QualifierState,
    doa: &DoaEstimate,
    cfg: &RuleConfig,
) -> (ClusterId, QualifierState) {
    // Centers are irrational in general; distances closer than this count
    // as equal so boundary decisions don't hinge on the last bit.
    let mut nearest: Option<(usize, f64)> = None;
    for (i, c) in state.clusters.iter().enumerate() {
        let d = angular_distance(c.center, doa.angle);
        if nearest.is_none_or(|(_, bd)| d < bd - ANGLE_EPSILON) {
            nearest = Some((i, d));
        }
    }
    match nearest {
        Some((i, d)) if d <= cfg.cluster_join_threshold + ANGLE_EPSILON => {
            let c = &mut state.clusters[i];
            c.push(doa.angle, doa.timestamp);
            (c.id, state)
        }
        _ => {
            let id = state.clusters.len() as ClusterId;
            state
                .clusters
                .push(Cluster::singleton(id, doa.angle, doa.timestamp));
            (id, state)
        }
    }
}

/// Continuous VAD strictly longer than the configured minimum.
pub fn detect_speech_activity(vad: &VadDecision<f64>, cfg: &RuleConfig) -> bool {
    vad.is_active() && vad.duration_so_far() > cfg.speech_activity_min
}

/// One step of the rule filter. Always records `doa` as the latest
/// estimate and adds it to the clustering, whether or not it qualifies.
pub fn qualify(
    state: QualifierState,
    doa: &DoaEstimate,
    vad: &VadDecision<f64>,
    cfg: &RuleConfig,
) -> (Option<QualifiedDoa>, QualifierState) {
    debug_assert!(
        state.last_doa.is_none_or(|(_, t)| doa.timestamp >= t),
        "DOA timestamps must be non-decreasing"
    );
    let previous = state.last_doa;
    let previous_qualified = state.last_qualified;
    let (cluster_id, mut state) = assign_cluster(state, doa, cfg);
    state.last_doa = Some((doa.angle, doa.timestamp));
    state.last_cluster = Some(cluster_id);
    state.vad_run_length = vad.duration_so_far();

    let gap_from = match cfg.gap_reference {
        GapReference::RawDoa => previous.map(|(_, t)| t),
        GapReference::QualifiedDoa => previous_qualified.map(|q| q.timestamp),
    };
    let short_gap = gap_from.is_some_and(|t| doa.timestamp.since(t) < cfg.gap_threshold);

    let emitted = if detect_speech_activity(vad, cfg) {
        let center = state.cluster(cluster_id).expect("just assigned").center;
        Some(QualifiedDoa {
            angle: center,
            timestamp: doa.timestamp,
            kind: TurnKind::ClusterAverage,
            source_cluster: Some(cluster_id),
        })
    } else if let Some((prev_angle, _)) = previous.filter(|&(a, _)| {
        short_gap && angular_distance(a, doa.angle) > cfg.angle_threshold + ANGLE_EPSILON
    }) {
        // Antipodal pair: no shorter arc, fall back to the earlier DOA.
        let neutral = circular_midpoint(prev_angle, doa.angle).unwrap_or(prev_angle);
        Some(QualifiedDoa {
            angle: neutral,
            timestamp: doa.timestamp,
            kind: TurnKind::Neutral,
            source_cluster: None,
        })
    } else if !short_gap
        && previous_qualified.is_none_or(|q| {
            angular_distance(q.angle, doa.angle) > cfg.angle_threshold + ANGLE_EPSILON
        })
    {
        Some(QualifiedDoa {
            angle: doa.angle,
            timestamp: doa.timestamp,
            kind: TurnKind::Direct,
            source_cluster: None,
        })
    } else {
        None
    };

    if emitted.is_some() {
        state.last_qualified = emitted;
    }
    (emitted, state)
}

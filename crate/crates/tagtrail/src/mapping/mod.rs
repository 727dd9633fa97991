//! Mapped trajectories: time-indexed building-frame positions with
//! per-segment provenance, produced by the [`global`] or [`local`] mapper.

pub mod global;
pub mod local;

pub use global::{map_global, median_landmark_positions};
pub use local::{
    detect_failures, detect_split_points, map_local, FailureReport, JumpEvent, LocalMapperConfig,
    SplitPoint, TrackingLossInterval,
};

use crate::fsutil::write_atomic;
use crate::geometry::{GeometryError, SimilarityTransform2D, Vec2};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("fewer than 2 landmarks shared between session and registry (found {found})")]
    TooFewLandmarks { found: usize },
    #[error("fewer than 2 usable split points (found {found})")]
    TooFewSplitPoints { found: usize },
    #[error("session has no camera poses")]
    EmptyTrajectory,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad trajectory file: {0}")]
    BadTrajectoryFile(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingStrategy {
    /// One least-squares transform over median landmark positions.
    Global,
    /// Per-segment two-point transforms, failure segments kept.
    Local,
    /// Per-segment two-point transforms, failure segments discarded.
    LocalCorrected,
}

impl MappingStrategy {
    pub fn label(&self) -> &'static str {
        match self {
            MappingStrategy::Global => "global",
            MappingStrategy::Local => "local",
            MappingStrategy::LocalCorrected => "local_corrected",
        }
    }
}

impl fmt::Display for MappingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MappingStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(MappingStrategy::Global),
            "local" => Ok(MappingStrategy::Local),
            "local_corrected" => Ok(MappingStrategy::LocalCorrected),
            other => Err(format!(
                "unknown strategy `{other}` (expected global, local or local_corrected)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentStatus {
    Mapped,
    /// Head/tail content mapped with a neighbor's transform.
    Extrapolated,
    DiscardedJump,
    DiscardedTrackingLoss,
    DiscardedDegenerate,
    /// Discarded for a reason not recorded (trajectories re-read from CSV).
    Discarded,
}

impl SegmentStatus {
    pub fn is_discarded(&self) -> bool {
        matches!(
            self,
            SegmentStatus::DiscardedJump
                | SegmentStatus::DiscardedTrackingLoss
                | SegmentStatus::DiscardedDegenerate
                | SegmentStatus::Discarded
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            SegmentStatus::Mapped => "mapped",
            SegmentStatus::Extrapolated => "extrapolated",
            SegmentStatus::DiscardedJump => "discarded_jump",
            SegmentStatus::DiscardedTrackingLoss => "discarded_tracking_loss",
            SegmentStatus::DiscardedDegenerate => "discarded_degenerate",
            SegmentStatus::Discarded => "discarded",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "mapped" => Some(SegmentStatus::Mapped),
            "extrapolated" => Some(SegmentStatus::Extrapolated),
            "discarded_jump" => Some(SegmentStatus::DiscardedJump),
            "discarded_tracking_loss" => Some(SegmentStatus::DiscardedTrackingLoss),
            "discarded_degenerate" => Some(SegmentStatus::DiscardedDegenerate),
            "discarded" => Some(SegmentStatus::Discarded),
            _ => None,
        }
    }
}

impl fmt::Display for SegmentStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One sub-trajectory and how it was handled. Segment ranges are half-open
/// `[start, end)` except the final segment, which owns its end instant.
#[derive(Debug, Clone)]
pub struct SegmentRecord {
    pub start_t_ns: i64,
    pub end_t_ns: i64,
    /// Split point opening the segment; `None` marks the trajectory head.
    pub start: Option<SplitPoint>,
    /// Split point closing the segment; `None` marks the trajectory tail.
    pub end: Option<SplitPoint>,
    pub status: SegmentStatus,
    /// Present iff status is `Mapped` or `Extrapolated`.
    pub transform: Option<SimilarityTransform2D>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t_ns: i64,
    /// Building-frame position.
    pub position: Vec2,
    /// Index into [`MappedTrajectory::segments`].
    pub segment: usize,
}

/// Time-indexed building-frame positions; discarded segments contribute no
/// samples, so their spans appear as gaps.
#[derive(Debug, Clone)]
pub struct MappedTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub segments: Vec<SegmentRecord>,
    pub floor_id: String,
    pub strategy: MappingStrategy,
    /// RMS residual of the least-squares fit (global strategy only).
    pub fit_rms_m: Option<f64>,
}

/// Queries at most this far beyond the first/last sample clamp to the edge.
pub const DEFAULT_EDGE_CLAMP_NS: i64 = 500_000_000;

impl MappedTrajectory {
    /// Covered time range over all segments (including discarded ones).
    pub fn time_range(&self) -> Option<(i64, i64)> {
        match (self.segments.first(), self.segments.last()) {
            (Some(a), Some(b)) => Some((a.start_t_ns, b.end_t_ns)),
            _ => None,
        }
    }

    /// Building-frame position at `t_ns`, linearly interpolated.
    ///
    /// `None` when `t_ns` falls into a discarded span or lies further than
    /// 500 ms outside the sampled range; queries within the clamp window of
    /// the first/last sample snap to it.
    pub fn pose_at(&self, t_ns: i64) -> Option<Vec2> {
        self.pose_at_detailed(t_ns, DEFAULT_EDGE_CLAMP_NS)
            .map(|(p, _)| p)
    }

    /// Like [`pose_at`](Self::pose_at) but also reports the segment status
    /// backing the returned position.
    pub fn pose_at_detailed(&self, t_ns: i64, clamp_ns: i64) -> Option<(Vec2, SegmentStatus)> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        let status_of = |sample: &TrajectorySample| self.segments[sample.segment].status;

        if t_ns <= first.t_ns {
            return (first.t_ns - t_ns <= clamp_ns).then(|| (first.position, status_of(first)));
        }
        if t_ns >= last.t_ns {
            return (t_ns - last.t_ns <= clamp_ns).then(|| (last.position, status_of(last)));
        }

        let idx = self.samples.partition_point(|s| s.t_ns < t_ns);
        let after = &self.samples[idx];
        if after.t_ns == t_ns {
            return Some((after.position, status_of(after)));
        }
        let before = &self.samples[idx - 1];
        // An index gap means discarded content sits between the brackets.
        if after.segment - before.segment >= 2 {
            return None;
        }
        let alpha = (t_ns - before.t_ns) as f64 / (after.t_ns - before.t_ns) as f64;
        let position = before.position + alpha * (after.position - before.position);
        let status = match (status_of(before), status_of(after)) {
            (SegmentStatus::Mapped, SegmentStatus::Mapped) => SegmentStatus::Mapped,
            _ => SegmentStatus::Extrapolated,
        };
        Some((position, status))
    }

    /// Counts per status, e.g. `4 mapped, 1 discarded_jump, 2 extrapolated`.
    pub fn segment_summary(&self) -> String {
        let mut counts: Vec<(SegmentStatus, usize)> = Vec::new();
        for seg in &self.segments {
            match counts.iter_mut().find(|(s, _)| *s == seg.status) {
                Some((_, n)) => *n += 1,
                None => counts.push((seg.status, 1)),
            }
        }
        counts
            .iter()
            .map(|(s, n)| format!("{n} {s}"))
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Serializes as `t_ns,x,y,segment_id,status` rows.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("t_ns,x,y,segment_id,status\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.t_ns, s.position.x, s.position.y, s.segment, self.segments[s.segment].status
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MappingError> {
        write_atomic(path, self.to_csv_string().as_bytes()).map_err(|source| MappingError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Rebuilds a trajectory from its CSV form. Discarded segments left no
    /// rows, so they come back as placeholder records with a generic
    /// [`SegmentStatus::Discarded`] status spanning the gap.
    pub fn read_csv(
        path: &Path,
        floor_id: &str,
        strategy: MappingStrategy,
    ) -> Result<Self, MappingError> {
        let text = std::fs::read_to_string(path).map_err(|source| MappingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = text.lines();
        match lines.next() {
            Some("t_ns,x,y,segment_id,status") => {}
            _ => {
                return Err(MappingError::BadTrajectoryFile(
                    "expected header t_ns,x,y,segment_id,status".into(),
                ))
            }
        }
        let mut samples = Vec::new();
        let mut seg_info: Vec<Option<(i64, i64, SegmentStatus)>> = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let parsed = (|| {
                let t_ns: i64 = fields.first()?.parse().ok()?;
                let x: f64 = fields.get(1)?.parse().ok()?;
                let y: f64 = fields.get(2)?.parse().ok()?;
                let segment: usize = fields.get(3)?.parse().ok()?;
                let status = SegmentStatus::from_label(fields.get(4)?)?;
                Some((t_ns, x, y, segment, status))
            })();
            let (t_ns, x, y, segment, status) = parsed.ok_or_else(|| {
                MappingError::BadTrajectoryFile(format!("line {}: bad row", n + 2))
            })?;
            if seg_info.len() <= segment {
                seg_info.resize(segment + 1, None);
            }
            let entry = seg_info[segment].get_or_insert((t_ns, t_ns, status));
            entry.0 = entry.0.min(t_ns);
            entry.1 = entry.1.max(t_ns);
            samples.push(TrajectorySample {
                t_ns,
                position: Vec2::new(x, y),
                segment,
            });
        }
        samples.sort_by_key(|s| s.t_ns);
        let mut segments = Vec::with_capacity(seg_info.len());
        for (idx, info) in seg_info.iter().enumerate() {
            let record = match info {
                Some((start, end, status)) => SegmentRecord {
                    start_t_ns: *start,
                    end_t_ns: *end,
                    start: None,
                    end: None,
                    status: *status,
                    transform: None,
                },
                None => {
                    let prev_end = seg_info[..idx]
                        .iter()
                        .rev()
                        .find_map(|i| i.map(|(_, e, _)| e))
                        .unwrap_or(0);
                    let next_start = seg_info[idx..]
                        .iter()
                        .find_map(|i| i.map(|(s, _, _)| s))
                        .unwrap_or(prev_end);
                    SegmentRecord {
                        start_t_ns: prev_end,
                        end_t_ns: next_start,
                        start: None,
                        end: None,
                        status: SegmentStatus::Discarded,
                        transform: None,
                    }
                }
            };
            segments.push(record);
        }
        Ok(Self {
            samples,
            segments,
            floor_id: floor_id.to_string(),
            strategy,
            fit_rms_m: None,
        })
    }
}

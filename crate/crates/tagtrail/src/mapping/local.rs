//! Locally optimal mapping: the trajectory is partitioned at the frames of
//! closest landmark approach (split points) and each sub-trajectory gets its
//! own two-point similarity transform built from the landmark positions as
//! logged at the segment boundaries - the most recent state of the drifting
//! local frame. Sub-trajectories showing tracker failures (pose jumps,
//! landmark tracking loss) can be detected and discarded.

use super::{
    MappedTrajectory, MappingError, MappingStrategy, SegmentRecord, SegmentStatus, TrajectorySample,
};
use crate::geometry::{estimate_similarity_two_point, Vec2};
use crate::session::{LandmarkRegistry, Session};
use log::warn;
use std::borrow::Cow;
use std::collections::BTreeMap;

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct LocalMapperConfig {
    /// Camera-to-landmark distance below which a frame is a split candidate.
    pub proximity_threshold_m: f64,
    /// Planar displacement between consecutive poses flagged as a jump.
    pub jump_threshold_m: f64,
    /// Camera/landmark positions closer than this count as identical.
    pub identity_eps_m: f64,
    /// Identical-position frames needed before tracking loss is declared.
    pub min_run_frames: usize,
    /// Split points closer than this are merged, keeping the closer one.
    pub merge_window_s: f64,
    /// Discard failure segments (`local_corrected`) instead of mapping them.
    pub correction_enabled: bool,
}

impl Default for LocalMapperConfig {
    fn default() -> Self {
        Self {
            proximity_threshold_m: 1.0,
            jump_threshold_m: 0.5,
            identity_eps_m: 1e-3,
            min_run_frames: 5,
            merge_window_s: 1.0,
            correction_enabled: true,
        }
    }
}

/// Frame of minimum camera-to-landmark distance within one proximity
/// interval; the trajectory is split here.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPoint {
    pub t_ns: i64,
    pub landmark_id: String,
    /// Camera position at `t_ns`, local frame.
    pub camera_local: Vec2,
    /// Landmark position as logged at `t_ns`, local frame.
    pub landmark_local: Vec2,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackingLossInterval {
    pub start_t_ns: i64,
    pub end_t_ns: i64,
    pub landmark_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    /// Timestamp of the first pose at the displaced position.
    pub t_ns: i64,
    pub displacement_m: f64,
}

/// Tracker failures found in a session.
#[derive(Debug, Clone, Default)]
pub struct FailureReport {
    pub tracking_loss: Vec<TrackingLossInterval>,
    pub jumps: Vec<JumpEvent>,
}

impl FailureReport {
    pub fn is_clean(&self) -> bool {
        self.tracking_loss.is_empty() && self.jumps.is_empty()
    }

    /// Copy of the session with every observation inside a tracking-loss
    /// interval flagged unknown (position reset to NaN).
    pub fn apply(&self, session: &Session) -> Session {
        let mut flagged = session.clone();
        for obs in &mut flagged.landmark_obs {
            let lost = self.tracking_loss.iter().any(|iv| {
                iv.landmark_id == obs.landmark_id
                    && iv.start_t_ns <= obs.t_ns
                    && obs.t_ns <= iv.end_t_ns
            });
            if lost {
                *obs =
                    crate::session::LandmarkObservation::unknown(obs.t_ns, obs.landmark_id.clone());
            }
        }
        flagged
    }
}

/// Finds the split points of a session.
///
/// Per landmark, maximal runs of consecutive observations closer than
/// `proximity_threshold_m` to the camera become candidate intervals; the
/// frame of minimum distance in each (earliest on ties) is a split point.
/// Split points closer than `merge_window_s` are merged keeping the one
/// with the smaller distance.
pub fn detect_split_points(
    session: &Session,
    proximity_threshold_m: f64,
    merge_window_s: f64,
) -> Vec<SplitPoint> {
    let mut points = Vec::new();
    for (id, obs_list) in session.obs_by_landmark() {
        let mut best: Option<SplitPoint> = None;
        for obs in obs_list {
            let near = if obs.unknown {
                None
            } else {
                session.pose_at(obs.t_ns).and_then(|pose| {
                    let d = (pose.planar() - obs.planar()).norm();
                    (d.is_finite() && d < proximity_threshold_m).then(|| (pose.planar(), d))
                })
            };
            match near {
                Some((camera, d)) => {
                    let better = best.as_ref().is_none_or(|b| d < b.distance_m);
                    if better {
                        best = Some(SplitPoint {
                            t_ns: obs.t_ns,
                            landmark_id: id.to_string(),
                            camera_local: camera,
                            landmark_local: obs.planar(),
                            distance_m: d,
                        });
                    }
                }
                None => {
                    if let Some(p) = best.take() {
                        points.push(p);
                    }
                }
            }
        }
        if let Some(p) = best.take() {
            points.push(p);
        }
    }
    points.sort_by(|a, b| {
        a.t_ns
            .cmp(&b.t_ns)
            .then_with(|| a.landmark_id.cmp(&b.landmark_id))
    });

    let window_ns = (merge_window_s * 1e9).round() as i64;
    let mut merged: Vec<SplitPoint> = Vec::with_capacity(points.len());
    for point in points {
        match merged.last_mut() {
            Some(prev) if point.t_ns - prev.t_ns < window_ns => {
                if point.distance_m < prev.distance_m {
                    *prev = point;
                }
            }
            _ => merged.push(point),
        }
    }
    merged
}

/// Scans a session for the two tracker failure modes: landmark logs
/// collapsing onto the camera pose (tracking loss) and physically impossible
/// displacement between consecutive poses (jumps).
pub fn detect_failures(
    session: &Session,
    jump_threshold_m: f64,
    identity_eps_m: f64,
    min_run_frames: usize,
) -> FailureReport {
    let mut report = FailureReport::default();

    for (id, obs_list) in session.obs_by_landmark() {
        let mut run: Vec<i64> = Vec::new();
        let flush = |run: &mut Vec<i64>, report: &mut FailureReport| {
            if run.len() >= min_run_frames {
                report.tracking_loss.push(TrackingLossInterval {
                    start_t_ns: run[0],
                    end_t_ns: *run.last().unwrap(),
                    landmark_id: id.to_string(),
                });
            }
            run.clear();
        };
        for obs in obs_list {
            let identical = !obs.unknown
                && session
                    .pose_at(obs.t_ns)
                    .map(|pose| (pose.planar() - obs.planar()).norm() <= identity_eps_m)
                    .unwrap_or(false);
            if identical {
                run.push(obs.t_ns);
            } else {
                flush(&mut run, &mut report);
            }
        }
        flush(&mut run, &mut report);
    }
    report
        .tracking_loss
        .sort_by_key(|iv| (iv.start_t_ns, iv.landmark_id.clone()));

    for pair in session.camera_poses.windows(2) {
        let d = (pair[1].planar() - pair[0].planar()).norm();
        if d > jump_threshold_m {
            report.jumps.push(JumpEvent {
                t_ns: pair[1].t_ns,
                displacement_m: d,
            });
        }
    }
    report
}

/// Maps a session segment by segment.
///
/// With correction enabled (strategy `local_corrected`), observations inside
/// tracking-loss intervals are flagged unknown before split detection, and
/// segments containing a jump or a frame where every logged landmark is
/// unknown are discarded and emit no samples. With correction disabled
/// (strategy `local`) failure segments are still mapped. Head and tail
/// content outside the outermost split points reuses the adjacent segment's
/// transform and is flagged `extrapolated`.
pub fn map_local(
    session: &Session,
    registry: &LandmarkRegistry,
    cfg: &LocalMapperConfig,
) -> Result<MappedTrajectory, MappingError> {
    let (t_first, t_last) = session.time_range().ok_or(MappingError::EmptyTrajectory)?;

    let failures = detect_failures(
        session,
        cfg.jump_threshold_m,
        cfg.identity_eps_m,
        cfg.min_run_frames,
    );
    let working: Cow<'_, Session> = if cfg.correction_enabled && !failures.tracking_loss.is_empty()
    {
        Cow::Owned(failures.apply(session))
    } else {
        Cow::Borrowed(session)
    };

    let splits: Vec<SplitPoint> =
        detect_split_points(&working, cfg.proximity_threshold_m, cfg.merge_window_s)
            .into_iter()
            .filter(|sp| {
                let known = registry.contains(&sp.landmark_id);
                if !known {
                    warn!(
                "split point at t={} ns references landmark {} absent from registry; ignored",
                sp.t_ns, sp.landmark_id
            );
                }
                known
            })
            .collect();
    if splits.len() < 2 {
        return Err(MappingError::TooFewSplitPoints {
            found: splits.len(),
        });
    }

    let mut segments: Vec<SegmentRecord> = Vec::with_capacity(splits.len() + 1);
    for pair in splits.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let transform = estimate_similarity_two_point(
            a.landmark_local,
            b.landmark_local,
            registry.get(&a.landmark_id).expect("filtered above"),
            registry.get(&b.landmark_id).expect("filtered above"),
        );
        let (status, transform) = match transform {
            Ok(t) => (SegmentStatus::Mapped, Some(t)),
            Err(_) => (SegmentStatus::DiscardedDegenerate, None),
        };
        segments.push(SegmentRecord {
            start_t_ns: a.t_ns,
            end_t_ns: b.t_ns,
            start: Some(a.clone()),
            end: Some(b.clone()),
            status,
            transform,
        });
    }

    if t_first < splits[0].t_ns {
        let neighbor = &segments[0];
        let (status, transform) = match neighbor.transform {
            Some(t) => (SegmentStatus::Extrapolated, Some(t)),
            None => (SegmentStatus::DiscardedDegenerate, None),
        };
        segments.insert(
            0,
            SegmentRecord {
                start_t_ns: t_first,
                end_t_ns: splits[0].t_ns,
                start: None,
                end: Some(splits[0].clone()),
                status,
                transform,
            },
        );
    }
    if splits[splits.len() - 1].t_ns < t_last {
        let neighbor = segments.last().expect("at least one interior segment");
        let (status, transform) = match neighbor.transform {
            Some(t) => (SegmentStatus::Extrapolated, Some(t)),
            None => (SegmentStatus::DiscardedDegenerate, None),
        };
        segments.push(SegmentRecord {
            start_t_ns: splits[splits.len() - 1].t_ns,
            end_t_ns: t_last,
            start: Some(splits[splits.len() - 1].clone()),
            end: None,
            status,
            transform,
        });
    }

    if cfg.correction_enabled {
        // Frames at which observations exist but every one is unknown: the
        // tracker had lost all landmarks there.
        let mut frame_obs: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
        for obs in &working.landmark_obs {
            let entry = frame_obs.entry(obs.t_ns).or_insert((0, 0));
            entry.0 += 1;
            if obs.unknown {
                entry.1 += 1;
            }
        }
        let all_lost_frames: Vec<i64> = frame_obs
            .iter()
            .filter(|(_, (total, unknown))| *total > 0 && total == unknown)
            .map(|(t, _)| *t)
            .collect();

        let last_idx = segments.len() - 1;
        for (idx, seg) in segments.iter_mut().enumerate() {
            let owns = |t: i64| {
                seg.start_t_ns <= t && (t < seg.end_t_ns || (idx == last_idx && t <= seg.end_t_ns))
            };
            if failures.jumps.iter().any(|j| owns(j.t_ns)) {
                seg.status = SegmentStatus::DiscardedJump;
                seg.transform = None;
            } else if all_lost_frames
                .iter()
                .any(|t| seg.start_t_ns < *t && *t < seg.end_t_ns)
            {
                seg.status = SegmentStatus::DiscardedTrackingLoss;
                seg.transform = None;
            }
        }
    }

    let last_idx = segments.len() - 1;
    let mut samples = Vec::with_capacity(session.camera_poses.len());
    for pose in &session.camera_poses {
        let idx = segments
            .partition_point(|s| s.start_t_ns <= pose.t_ns)
            .saturating_sub(1)
            .min(last_idx);
        let seg = &segments[idx];
        if seg.status.is_discarded() {
            continue;
        }
        let Some(transform) = seg.transform else {
            continue;
        };
        samples.push(TrajectorySample {
            t_ns: pose.t_ns,
            position: transform.apply(pose.planar()),
            segment: idx,
        });
    }

    Ok(MappedTrajectory {
        samples,
        segments,
        floor_id: session.floor_id.clone(),
        strategy: if cfg.correction_enabled {
            MappingStrategy::LocalCorrected
        } else {
            MappingStrategy::Local
        },
        fit_rms_m: None,
    })
}

//! Global mapping: one least-squares similarity transform fitted over the
//! median local-frame position of every landmark, applied to the whole
//! trajectory. Precise while the local frame stays static, and the baseline
//! the local strategy is compared against when it does not.

use super::{
    MappedTrajectory, MappingError, MappingStrategy, SegmentRecord, SegmentStatus, TrajectorySample,
};
use crate::geometry::{estimate_similarity_ls, PointCorrespondences, Vec2};
use crate::session::{LandmarkRegistry, Session};
use log::warn;
use std::collections::BTreeMap;

/// Componentwise median of all valid (non-unknown) observations per
/// landmark, z discarded. Landmarks without a valid observation are omitted.
pub fn median_landmark_positions(session: &Session) -> BTreeMap<String, Vec2> {
    let mut medians = BTreeMap::new();
    for (id, obs) in session.obs_by_landmark() {
        let mut xs = Vec::with_capacity(obs.len());
        let mut ys = Vec::with_capacity(obs.len());
        for o in obs {
            if o.unknown || !o.position.x.is_finite() || !o.position.y.is_finite() {
                continue;
            }
            xs.push(o.position.x);
            ys.push(o.position.y);
        }
        if xs.is_empty() {
            continue;
        }
        medians.insert(id.to_string(), Vec2::new(median(&mut xs), median(&mut ys)));
    }
    medians
}

/// Median with the usual even-count convention (mean of the two middles).
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Fits one building-from-local similarity over (median landmark position,
/// registry position) pairs and applies it to every camera pose.
///
/// Landmarks logged in the session but absent from the registry are ignored
/// with a warning. The fit's RMS residual is attached as a quality metric.
pub fn map_global(
    session: &Session,
    registry: &LandmarkRegistry,
) -> Result<MappedTrajectory, MappingError> {
    let (first, last) = session.time_range().ok_or(MappingError::EmptyTrajectory)?;

    let medians = median_landmark_positions(session);
    let mut src = Vec::with_capacity(medians.len());
    let mut dst = Vec::with_capacity(medians.len());
    for (id, local) in &medians {
        match registry.get(id) {
            Some(building) => {
                src.push(*local);
                dst.push(building);
            }
            None => warn!("landmark {id} observed but not in registry; ignored"),
        }
    }
    if src.len() < 2 {
        return Err(MappingError::TooFewLandmarks { found: src.len() });
    }

    let corr = PointCorrespondences::new(src, dst)?;
    let building_from_local = estimate_similarity_ls(&corr)?;
    let rms = (corr
        .src()
        .iter()
        .zip(corr.dst().iter())
        .map(|(s, d)| (d - building_from_local.apply(*s)).norm_squared())
        .sum::<f64>()
        / corr.len() as f64)
        .sqrt();

    let samples = session
        .camera_poses
        .iter()
        .map(|pose| TrajectorySample {
            t_ns: pose.t_ns,
            position: building_from_local.apply(pose.planar()),
            segment: 0,
        })
        .collect();

    Ok(MappedTrajectory {
        samples,
        segments: vec![SegmentRecord {
            start_t_ns: first,
            end_t_ns: last,
            start: None,
            end: None,
            status: SegmentStatus::Mapped,
            transform: Some(building_from_local),
        }],
        floor_id: session.floor_id.clone(),
        strategy: MappingStrategy::Global,
        fit_rms_m: Some(rms),
    })
}

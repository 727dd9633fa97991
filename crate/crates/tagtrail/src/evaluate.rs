//! Error metrics: control-point errors from timestamped button presses,
//! full-trajectory comparison against ground truth, and a weighted-kNN
//! fingerprinting baseline that demonstrates dataset usability.

use crate::annotate::Fingerprint;
use crate::geometry::Vec2;
use crate::mapping::{MappedTrajectory, SegmentStatus, DEFAULT_EDGE_CLAMP_NS};
use crate::session::{ControlPointSet, Event};
use crate::simulate::GroundTruth;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("control point set is empty")]
    EmptyControlPoints,
    #[error("trajectory and ground truth time ranges are disjoint")]
    DisjointTimeRanges,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k must be at least 1")]
    BadK,
}

/// Summary statistics over per-sample planar errors, in meters.
#[derive(Debug, Clone)]
pub struct ErrorStats {
    pub mean_m: f64,
    pub median_m: f64,
    pub max_m: f64,
    pub count: usize,
    pub per_sample_errors: Vec<f64>,
}

impl ErrorStats {
    pub fn from_errors(errors: Vec<f64>) -> Self {
        if errors.is_empty() {
            return Self {
                mean_m: f64::NAN,
                median_m: f64::NAN,
                max_m: f64::NAN,
                count: 0,
                per_sample_errors: errors,
            };
        }
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let mut sorted = errors.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Self {
            mean_m: mean,
            median_m: median,
            max_m: sorted[n - 1],
            count: n,
            per_sample_errors: errors,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

/// Control-point error statistics plus the number of events that could not
/// be evaluated (discarded or extrapolated spans, out of range).
#[derive(Debug, Clone)]
pub struct ControlPointErrors {
    pub stats: ErrorStats,
    pub skipped: usize,
}

/// For each button press, the distance from the mapped position at the
/// press timestamp to the nearest control point. Extrapolated and
/// discarded spans are skipped and counted.
pub fn control_point_errors(
    traj: &MappedTrajectory,
    events: &[Event],
    points: &ControlPointSet,
) -> Result<ControlPointErrors, EvaluateError> {
    if points.points.is_empty() {
        return Err(EvaluateError::EmptyControlPoints);
    }
    let mut errors = Vec::with_capacity(events.len());
    let mut skipped = 0usize;
    for event in events {
        match traj.pose_at_detailed(event.t_ns, DEFAULT_EDGE_CLAMP_NS) {
            Some((position, SegmentStatus::Mapped)) => {
                let nearest = points
                    .points
                    .iter()
                    .map(|p| (position - p).norm())
                    .fold(f64::INFINITY, f64::min);
                errors.push(nearest);
            }
            _ => skipped += 1,
        }
    }
    Ok(ControlPointErrors {
        stats: ErrorStats::from_errors(errors),
        skipped,
    })
}

/// Planar distance between the mapped trajectory and the true position at
/// every ground-truth timestamp that resolves to a mapped (not extrapolated,
/// not discarded) span.
pub fn trajectory_error(
    traj: &MappedTrajectory,
    truth: &GroundTruth,
) -> Result<ErrorStats, EvaluateError> {
    let (gt0, gt1) = truth
        .time_range()
        .ok_or(EvaluateError::DisjointTimeRanges)?;
    let (tr0, tr1) = traj.time_range().ok_or(EvaluateError::DisjointTimeRanges)?;
    if gt1 < tr0 || tr1 < gt0 {
        return Err(EvaluateError::DisjointTimeRanges);
    }
    let mut errors = Vec::with_capacity(truth.samples.len());
    for (t_ns, true_pos) in &truth.samples {
        if let Some((mapped, SegmentStatus::Mapped)) =
            traj.pose_at_detailed(*t_ns, DEFAULT_EDGE_CLAMP_NS)
        {
            errors.push((mapped - true_pos).norm());
        }
    }
    Ok(ErrorStats::from_errors(errors))
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct KnnConfig {
    pub k: usize,
    /// RSS assigned to access points missing from a scan, dBm.
    pub missing_rss_dbm: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 5,
            missing_rss_dbm: -110.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KnnPrediction {
    pub scan_id: u64,
    pub predicted: Vec2,
    pub predicted_floor: String,
    pub actual: Vec2,
    pub actual_floor: String,
}

#[derive(Debug, Clone)]
pub struct KnnResult {
    pub predictions: Vec<KnnPrediction>,
    /// Planar errors over correct-floor predictions only.
    pub stats: ErrorStats,
    pub floor_accuracy: f64,
}

/// Weighted k-nearest-neighbor positioning over RSS space.
///
/// Fingerprints are vectorized over the union BSSID set (missing APs filled
/// with `missing_rss_dbm`); the predicted position is the inverse-distance
/// weighted mean of the k nearest training labels and the predicted floor
/// the majority floor among them.
pub fn knn_localize(
    train: &[Fingerprint],
    test: &[Fingerprint],
    cfg: &KnnConfig,
) -> Result<KnnResult, EvaluateError> {
    if cfg.k == 0 {
        return Err(EvaluateError::BadK);
    }
    if train.is_empty() {
        return Err(EvaluateError::EmptyTrainingSet);
    }

    let bssids: Vec<&str> = train
        .iter()
        .chain(test.iter())
        .flat_map(|fp| fp.entries.iter().map(|e| e.bssid.as_str()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let vectorize = |fp: &Fingerprint| -> Vec<f64> {
        bssids
            .iter()
            .map(|b| {
                fp.entries
                    .iter()
                    .find(|e| e.bssid == **b)
                    .map(|e| e.rss_dbm as f64)
                    .unwrap_or(cfg.missing_rss_dbm)
            })
            .collect()
    };
    let train_vecs: Vec<Vec<f64>> = train.iter().map(vectorize).collect();

    let mut predictions = Vec::with_capacity(test.len());
    let mut correct_floor = 0usize;
    let mut errors = Vec::new();
    for fp in test {
        let v = vectorize(fp);
        let mut dists: Vec<(f64, usize)> = train_vecs
            .iter()
            .enumerate()
            .map(|(i, tv)| {
                let d2: f64 = tv
                    .iter()
                    .zip(v.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2.sqrt(), i)
            })
            .collect();
        dists.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let neighbors = &dists[..cfg.k.min(dists.len())];

        let exact: Vec<&(f64, usize)> = neighbors.iter().filter(|(d, _)| *d < 1e-12).collect();
        let predicted = if exact.is_empty() {
            let mut weight_sum = 0.0;
            let mut acc = Vec2::zeros();
            for (d, i) in neighbors {
                let w = 1.0 / d;
                weight_sum += w;
                acc += w * train[*i].label;
            }
            acc / weight_sum
        } else {
            exact.iter().map(|(_, i)| train[*i].label).sum::<Vec2>() / exact.len() as f64
        };

        let mut floor_votes: Vec<(&str, usize)> = Vec::new();
        for (_, i) in neighbors {
            let floor = train[*i].floor_id.as_str();
            match floor_votes.iter_mut().find(|(f, _)| *f == floor) {
                Some((_, n)) => *n += 1,
                None => floor_votes.push((floor, 1)),
            }
        }
        let max_votes = floor_votes.iter().map(|(_, n)| *n).max().unwrap_or(0);
        let predicted_floor = if floor_votes.iter().filter(|(_, n)| *n == max_votes).count() > 1 {
            // Tie: the nearest neighbor decides.
            train[neighbors[0].1].floor_id.clone()
        } else {
            floor_votes
                .iter()
                .find(|(_, n)| *n == max_votes)
                .expect("non-empty neighbors")
                .0
                .to_string()
        };

        if predicted_floor == fp.floor_id {
            correct_floor += 1;
            errors.push((predicted - fp.label).norm());
        }
        predictions.push(KnnPrediction {
            scan_id: fp.scan_id,
            predicted,
            predicted_floor,
            actual: fp.label,
            actual_floor: fp.floor_id.clone(),
        });
    }

    let floor_accuracy = if test.is_empty() {
        1.0
    } else {
        correct_floor as f64 / test.len() as f64
    };
    Ok(KnnResult {
        predictions,
        stats: ErrorStats::from_errors(errors),
        floor_accuracy,
    })
}

/// Deterministic train/test split by seeded shuffle; `test_fraction` of the
/// fingerprints (rounded down, at least 1 when possible) become the test set.
pub fn split_fingerprints(
    fingerprints: &[Fingerprint],
    test_fraction: f64,
    seed: u64,
) -> (Vec<Fingerprint>, Vec<Fingerprint>) {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut indices: Vec<usize> = (0..fingerprints.len()).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_test = ((fingerprints.len() as f64 * test_fraction) as usize)
        .min(fingerprints.len().saturating_sub(1));
    let test_idx: BTreeSet<usize> = indices.into_iter().take(n_test).collect();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, fp) in fingerprints.iter().enumerate() {
        if test_idx.contains(&i) {
            test.push(fp.clone());
        } else {
            train.push(fp.clone());
        }
    }
    (train, test)
}

/// Wide metrics table (one column per labeled result), CSV form.
pub fn metrics_csv(rows: &[(String, ErrorStats, usize)]) -> String {
    let mut out = String::from("metric");
    for (label, _, _) in rows {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    let metric = |name: &str, f: &dyn Fn(&ErrorStats, usize) -> String, out: &mut String| {
        out.push_str(name);
        for (_, stats, skipped) in rows {
            out.push(',');
            out.push_str(&f(stats, *skipped));
        }
        out.push('\n');
    };
    metric("mean_m", &|s, _| format!("{:.4}", s.mean_m), &mut out);
    metric("median_m", &|s, _| format!("{:.4}", s.median_m), &mut out);
    metric("max_m", &|s, _| format!("{:.4}", s.max_m), &mut out);
    metric("count", &|s, _| s.count.to_string(), &mut out);
    metric("skipped", &|_, k| k.to_string(), &mut out);
    out
}

/// Human-readable form of [`metrics_csv`].
pub fn metrics_table(rows: &[(String, ErrorStats, usize)]) -> String {
    let mut out = format!("{:<10}", "metric");
    for (label, _, _) in rows {
        out.push_str(&format!(" {label:>16}"));
    }
    out.push('\n');
    let mut line = |name: &str, f: &dyn Fn(&ErrorStats, usize) -> String| {
        out.push_str(&format!("{name:<10}"));
        for (_, stats, skipped) in rows {
            out.push_str(&format!(" {:>16}", f(stats, *skipped)));
        }
        out.push('\n');
    };
    line("mean_m", &|s, _| format!("{:.4}", s.mean_m));
    line("median_m", &|s, _| format!("{:.4}", s.median_m));
    line("max_m", &|s, _| format!("{:.4}", s.max_m));
    line("count", &|s, _| s.count.to_string());
    line("skipped", &|_, k| k.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::FingerprintEntry;
    use crate::geometry::SimilarityTransform2D;
    use crate::mapping::{MappingStrategy, SegmentRecord, TrajectorySample};
    use crate::session::EventType;

    fn straight_trajectory() -> (MappedTrajectory, GroundTruth) {
        let samples: Vec<TrajectorySample> = (0..=100)
            .map(|k| TrajectorySample {
                t_ns: k * 100_000_000,
                position: Vec2::new(k as f64 * 0.1, 0.0),
                segment: 0,
            })
            .collect();
        let truth = GroundTruth {
            samples: samples.iter().map(|s| (s.t_ns, s.position)).collect(),
            scan_labels: Default::default(),
        };
        let traj = MappedTrajectory {
            segments: vec![SegmentRecord {
                start_t_ns: 0,
                end_t_ns: samples.last().unwrap().t_ns,
                start: None,
                end: None,
                status: SegmentStatus::Mapped,
                transform: Some(SimilarityTransform2D::identity()),
            }],
            samples,
            floor_id: "F1".into(),
            strategy: MappingStrategy::Global,
            fit_rms_m: None,
        };
        (traj, truth)
    }

    fn fingerprint(scan_id: u64, label: Vec2, rss: &[i32], floor: &str) -> Fingerprint {
        Fingerprint {
            scan_id,
            entries: rss
                .iter()
                .enumerate()
                .map(|(i, r)| FingerprintEntry {
                    bssid: format!("02:00:00:00:00:{:02x}", i + 1),
                    rss_dbm: *r,
                    t_ns: 0,
                    position: label,
                })
                .collect(),
            label,
            floor_id: floor.into(),
            device_id: "dev".into(),
        }
    }

    #[test]
    fn stats_are_consistent_with_per_sample_errors() {
        let stats = ErrorStats::from_errors(vec![3.0, 1.0, 2.0, 4.0]);
        assert!((stats.mean_m - 2.5).abs() < 1e-12);
        assert!((stats.median_m - 2.5).abs() < 1e-12);
        assert!((stats.max_m - 4.0).abs() < 1e-12);
        assert_eq!(stats.count, 4);
    }

    #[test]
    fn stats_fields_match_recomputation_from_stored_samples() {
        let stats = ErrorStats::from_errors(vec![0.3, 1.7, 0.2, 0.9, 2.4, 0.9]);
        let mut sorted = stats.per_sample_errors.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        assert_eq!(stats.median_m, 0.5 * (sorted[2] + sorted[3]));
        assert_eq!(stats.max_m, *sorted.last().unwrap());
        assert_eq!(stats.count, stats.per_sample_errors.len());
        assert!(
            (stats.mean_m - stats.per_sample_errors.iter().sum::<f64>() / stats.count as f64).abs()
                < 1e-15
        );
    }

    #[test]
    fn self_comparison_is_zero_error() {
        let (traj, truth) = straight_trajectory();
        let stats = trajectory_error(&traj, &truth).unwrap();
        assert!(stats.max_m < 1e-12);
        assert_eq!(stats.count, truth.samples.len());
    }

    #[test]
    fn disjoint_ranges_error() {
        let (traj, mut truth) = straight_trajectory();
        for (t, _) in &mut truth.samples {
            *t += 1_000_000_000_000;
        }
        assert!(matches!(
            trajectory_error(&traj, &truth),
            Err(EvaluateError::DisjointTimeRanges)
        ));
    }

    #[test]
    fn event_on_control_point_has_zero_error() {
        let (traj, _) = straight_trajectory();
        let points = ControlPointSet::new("F1", vec![Vec2::new(5.0, 0.0), Vec2::new(50.0, 50.0)]);
        let events = vec![Event {
            t_ns: 5_000_000_000,
            event_type: EventType::ControlPoint,
        }];
        let out = control_point_errors(&traj, &events, &points).unwrap();
        assert_eq!(out.skipped, 0);
        assert!(out.stats.max_m < 1e-12);
    }

    #[test]
    fn empty_control_points_error() {
        let (traj, _) = straight_trajectory();
        assert!(matches!(
            control_point_errors(&traj, &[], &ControlPointSet::new("F1", vec![])),
            Err(EvaluateError::EmptyControlPoints)
        ));
    }

    #[test]
    fn knn_exact_match_with_k1_is_zero_error() {
        let train = vec![
            fingerprint(1, Vec2::new(0.0, 0.0), &[-40, -70, -80], "F1"),
            fingerprint(2, Vec2::new(5.0, 0.0), &[-70, -40, -80], "F1"),
            fingerprint(3, Vec2::new(10.0, 0.0), &[-80, -70, -40], "F1"),
        ];
        let cfg = KnnConfig {
            k: 1,
            ..Default::default()
        };
        let result = knn_localize(&train, &train, &cfg).unwrap();
        assert_eq!(result.floor_accuracy, 1.0);
        assert!(result.stats.max_m < 1e-9);
    }

    #[test]
    fn knn_single_floor_training_pins_floor_accuracy() {
        let train = vec![
            fingerprint(1, Vec2::new(0.0, 0.0), &[-40, -70], "1"),
            fingerprint(2, Vec2::new(5.0, 0.0), &[-70, -40], "1"),
        ];
        let test = vec![fingerprint(9, Vec2::new(2.0, 0.0), &[-50, -55], "1")];
        let result = knn_localize(&train, &test, &KnnConfig::default()).unwrap();
        assert_eq!(result.floor_accuracy, 1.0);
    }

    #[test]
    fn knn_rejects_empty_training() {
        assert!(matches!(
            knn_localize(&[], &[], &KnnConfig::default()),
            Err(EvaluateError::EmptyTrainingSet)
        ));
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let fps: Vec<Fingerprint> = (0..10)
            .map(|i| fingerprint(i, Vec2::new(i as f64, 0.0), &[-40 - i as i32], "F1"))
            .collect();
        let (train_a, test_a) = split_fingerprints(&fps, 0.3, 7);
        let (train_b, test_b) = split_fingerprints(&fps, 0.3, 7);
        assert_eq!(test_a.len(), 3);
        assert_eq!(train_a.len(), 7);
        assert_eq!(
            test_a.iter().map(|f| f.scan_id).collect::<Vec<_>>(),
            test_b.iter().map(|f| f.scan_id).collect::<Vec<_>>()
        );
        assert_eq!(train_a.len(), train_b.len());
    }
}

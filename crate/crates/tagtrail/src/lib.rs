//! Offline toolkit that turns the drifting pose logs of an on-device
//! visual-inertial tracker into position-labeled sensor and WiFi fingerprint
//! datasets in a fixed building frame.
//!
//! A collection walk logs camera poses and landmark observations in the
//! tracker's *local* frame, which drifts and occasionally re-anchors itself.
//! Given the surveyed building-frame positions of the landmarks, this crate
//! maps the trajectory into the building frame (either with one global
//! least-squares similarity transform or robustly, sub-trajectory by
//! sub-trajectory, discarding segments where the tracker demonstrably
//! failed) and then labels every sensor record and WiFi scan with the
//! position at its timestamp. A deterministic simulator provides ground
//! truth for verifying the whole pipeline, and the evaluator reports
//! labeling-error statistics plus a kNN positioning baseline over the
//! generated fingerprints.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example simulate_session        # synthesize a session bundle
//! cargo run --example map_strategies          # global vs local vs corrected
//! cargo run --example failure_detection       # jumps and tracking loss
//! cargo run --example annotate_fingerprints   # position-labeled WiFi scans
//! cargo run --example knn_baseline            # fingerprint positioning
//! cargo run --example full_pipeline           # CLI pipeline end to end
//! ```
//!
//! The same workflow is scriptable through the `tagtrail` binary:
//! `simulate`, `map`, `annotate`, `evaluate`, `validate`.

pub mod annotate;
pub mod cli;
pub mod evaluate;
mod fsutil;
pub mod geometry;
pub mod mapping;
pub mod session;
pub mod simulate;

pub use annotate::{
    annotate_sensors, build_fingerprints, AnnotatorConfig, Fingerprint, FingerprintSet,
    LabeledSensorRecord,
};
pub use evaluate::{
    control_point_errors, knn_localize, trajectory_error, ErrorStats, KnnConfig, KnnResult,
};
pub use geometry::{
    estimate_similarity_ls, estimate_similarity_two_point, PointCorrespondences,
    SimilarityTransform2D, Vec2,
};
pub use mapping::{
    detect_failures, detect_split_points, map_global, map_local, median_landmark_positions,
    FailureReport, LocalMapperConfig, MappedTrajectory, MappingStrategy, SegmentStatus,
};
pub use session::{
    parse_session, validate_session, write_session, ControlPointSet, LandmarkRegistry, Session,
};
pub use simulate::{preset, preset_names, simulate_session, GroundTruth, ScenarioConfig};

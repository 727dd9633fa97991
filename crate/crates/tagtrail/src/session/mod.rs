//! Session data model: the multi-stream log bundle a collection walk
//! produces, plus site metadata (landmark registry, control points).
//!
//! Positions in a [`Session`] live in the *local* frame - the drifting
//! coordinate system of the on-device visual-inertial tracker. Registry and
//! control-point coordinates live in the *building* frame. Timestamps are
//! integer nanoseconds relative to the first camera pose of the session.

mod csv_io;

pub use csv_io::{
    parse_session, parse_session_with, read_control_points, read_landmark_registry,
    write_control_points, write_landmark_registry, write_session, BadRow, ParseOptions,
    ParseReport, CAMERA_POSE_FILE, CONTROL_POINTS_FILE, EVENTS_FILE, LANDMARKS_FILE,
    LANDMARK_POSE_FILE, SENSORS_FILE, SESSION_FILES, WIFI_FILE,
};

use crate::geometry::Vec2;
use nalgebra::Vector3;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("missing required file {0}")]
    MissingFile(std::path::PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: non-monotonic timestamps")]
    NonMonotonicTimestamps { file: String, line: u64 },
    #[error("{file}: bad header, expected `{expected}`")]
    BadHeader { file: String, expected: String },
    #[error("too many malformed rows ({bad} of {total})")]
    TooManyMalformedRows { bad: usize, total: usize },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: ::csv::Error,
    },
    #[error("invalid site metadata: {0}")]
    InvalidSite(String),
}

/// One camera pose logged per frame, in the local frame.
#[derive(Debug, Clone)]
pub struct Pose {
    pub t_ns: i64,
    pub position: Vec3,
    /// Unit quaternion (x, y, z, w) when the tracker reported one.
    pub orientation: Option<[f64; 4]>,
}

impl Pose {
    pub fn planar(&self) -> Vec2 {
        Vec2::new(self.position.x, self.position.y)
    }
}

/// A landmark position as logged at one frame, in the local frame.
///
/// `unknown` marks observations invalidated by failure correction; their
/// position is NaN and they serialize as literal `nan` coordinates.
#[derive(Debug, Clone)]
pub struct LandmarkObservation {
    pub t_ns: i64,
    pub landmark_id: String,
    pub position: Vec3,
    pub unknown: bool,
}

impl LandmarkObservation {
    pub fn new(t_ns: i64, landmark_id: impl Into<String>, position: Vec3) -> Self {
        Self {
            t_ns,
            landmark_id: landmark_id.into(),
            position,
            unknown: false,
        }
    }

    pub fn unknown(t_ns: i64, landmark_id: impl Into<String>) -> Self {
        Self {
            t_ns,
            landmark_id: landmark_id.into(),
            position: Vec3::new(f64::NAN, f64::NAN, f64::NAN),
            unknown: true,
        }
    }

    pub fn planar(&self) -> Vec2 {
        Vec2::new(self.position.x, self.position.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SensorType {
    Accelerometer,
    Gyroscope,
    MagneticField,
    RotationVector,
}

impl SensorType {
    pub fn code(&self) -> &'static str {
        match self {
            SensorType::Accelerometer => "ACC",
            SensorType::Gyroscope => "GYR",
            SensorType::MagneticField => "MAG",
            SensorType::RotationVector => "ROT",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "ACC" => Some(SensorType::Accelerometer),
            "GYR" => Some(SensorType::Gyroscope),
            "MAG" => Some(SensorType::MagneticField),
            "ROT" => Some(SensorType::RotationVector),
            _ => None,
        }
    }

    /// Rotation vectors carry 4 values, everything else 3.
    pub fn value_count(&self) -> usize {
        match self {
            SensorType::RotationVector => 4,
            _ => 3,
        }
    }
}

impl fmt::Display for SensorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone)]
pub struct SensorRecord {
    pub t_ns: i64,
    pub sensor_type: SensorType,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WifiEntry {
    pub scan_id: u64,
    pub t_ns: i64,
    pub bssid: String,
    pub rss_dbm: i32,
    pub freq_mhz: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventType {
    ControlPoint,
}

impl EventType {
    pub fn code(&self) -> &'static str {
        match self {
            EventType::ControlPoint => "CONTROL_POINT",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "CONTROL_POINT" => Some(EventType::ControlPoint),
            _ => None,
        }
    }
}

/// Timestamped button press.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub t_ns: i64,
    pub event_type: EventType,
}

/// One parsed collection walk: the four log streams plus events and
/// session metadata. Covers exactly one floor. Immutable after
/// construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct Session {
    /// Strictly increasing in `t_ns`.
    pub camera_poses: Vec<Pose>,
    /// Time-ordered; every timestamp matches some camera pose timestamp.
    pub landmark_obs: Vec<LandmarkObservation>,
    pub sensors: Vec<SensorRecord>,
    pub wifi: Vec<WifiEntry>,
    pub events: Vec<Event>,
    pub floor_id: String,
    pub device_id: String,
}

impl Session {
    /// First/last camera pose timestamps, if any.
    pub fn time_range(&self) -> Option<(i64, i64)> {
        match (self.camera_poses.first(), self.camera_poses.last()) {
            (Some(a), Some(b)) => Some((a.t_ns, b.t_ns)),
            _ => None,
        }
    }

    /// Camera pose at an exact timestamp (poses are sorted).
    pub fn pose_at(&self, t_ns: i64) -> Option<&Pose> {
        self.camera_poses
            .binary_search_by_key(&t_ns, |p| p.t_ns)
            .ok()
            .map(|i| &self.camera_poses[i])
    }

    /// Landmark observations grouped by landmark id, preserving time order.
    pub fn obs_by_landmark(&self) -> BTreeMap<&str, Vec<&LandmarkObservation>> {
        let mut map: BTreeMap<&str, Vec<&LandmarkObservation>> = BTreeMap::new();
        for obs in &self.landmark_obs {
            map.entry(obs.landmark_id.as_str()).or_default().push(obs);
        }
        map
    }
}

fn bits_eq(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

fn vec3_bits_eq(a: &Vec3, b: &Vec3) -> bool {
    bits_eq(a.x, b.x) && bits_eq(a.y, b.y) && bits_eq(a.z, b.z)
}

// Float fields compare bit-for-bit: the serialization round-trip contract is
// exact, and NaN positions of unknown observations must compare equal.
impl PartialEq for Pose {
    fn eq(&self, other: &Self) -> bool {
        self.t_ns == other.t_ns
            && vec3_bits_eq(&self.position, &other.position)
            && match (&self.orientation, &other.orientation) {
                (None, None) => true,
                (Some(a), Some(b)) => a.iter().zip(b.iter()).all(|(x, y)| bits_eq(*x, *y)),
                _ => false,
            }
    }
}

impl PartialEq for LandmarkObservation {
    fn eq(&self, other: &Self) -> bool {
        self.t_ns == other.t_ns
            && self.landmark_id == other.landmark_id
            && self.unknown == other.unknown
            && vec3_bits_eq(&self.position, &other.position)
    }
}

impl PartialEq for SensorRecord {
    fn eq(&self, other: &Self) -> bool {
        self.t_ns == other.t_ns
            && self.sensor_type == other.sensor_type
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| bits_eq(*a, *b))
    }
}

impl PartialEq for Session {
    fn eq(&self, other: &Self) -> bool {
        self.camera_poses == other.camera_poses
            && self.landmark_obs == other.landmark_obs
            && self.sensors == other.sensors
            && self.wifi == other.wifi
            && self.events == other.events
            && self.floor_id == other.floor_id
            && self.device_id == other.device_id
    }
}

/// Surveyed landmark positions for one floor, in the building frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkRegistry {
    pub floor_id: String,
    positions: BTreeMap<String, Vec2>,
}

impl LandmarkRegistry {
    /// At least 2 landmarks, all positions distinct.
    pub fn new(
        floor_id: impl Into<String>,
        entries: impl IntoIterator<Item = (String, Vec2)>,
    ) -> Result<Self, SessionError> {
        let positions: BTreeMap<String, Vec2> = entries.into_iter().collect();
        if positions.len() < 2 {
            return Err(SessionError::InvalidSite(format!(
                "registry needs at least 2 landmarks, got {}",
                positions.len()
            )));
        }
        let pts: Vec<&Vec2> = positions.values().collect();
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if (pts[i] - pts[j]).norm() == 0.0 {
                    return Err(SessionError::InvalidSite(
                        "registry landmark positions must be distinct".into(),
                    ));
                }
            }
        }
        Ok(Self {
            floor_id: floor_id.into(),
            positions,
        })
    }

    pub fn get(&self, landmark_id: &str) -> Option<Vec2> {
        self.positions.get(landmark_id).copied()
    }

    pub fn contains(&self, landmark_id: &str) -> bool {
        self.positions.contains_key(landmark_id)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Vec2)> {
        self.positions.iter().map(|(id, p)| (id.as_str(), *p))
    }
}

/// Surveyed evaluation markers on the floor, in the building frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointSet {
    pub floor_id: String,
    pub points: Vec<Vec2>,
}

impl ControlPointSet {
    pub fn new(floor_id: impl Into<String>, points: Vec<Vec2>) -> Self {
        Self {
            floor_id: floor_id.into(),
            points,
        }
    }
}

/// Per-stream time coverage reported by [`validate_session`].
#[derive(Debug, Clone, PartialEq)]
pub struct StreamCoverage {
    pub stream: &'static str,
    pub count: usize,
    pub t_min_ns: Option<i64>,
    pub t_max_ns: Option<i64>,
}

/// Diagnostic report: invariant violations, warnings, stream coverage and
/// per-landmark observation counts. Never an error by itself.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
    pub streams: Vec<StreamCoverage>,
    pub landmark_counts: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "validation: {} violation(s), {} warning(s)",
            self.violations.len(),
            self.warnings.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        for w in &self.warnings {
            writeln!(f, "  warning: {w}")?;
        }
        for s in &self.streams {
            match (s.t_min_ns, s.t_max_ns) {
                (Some(a), Some(b)) => writeln!(
                    f,
                    "  {}: {} rows, t = [{:.3} s, {:.3} s]",
                    s.stream,
                    s.count,
                    a as f64 / 1e9,
                    b as f64 / 1e9
                )?,
                _ => writeln!(f, "  {}: empty", s.stream)?,
            }
        }
        for (id, n) in &self.landmark_counts {
            writeln!(f, "  landmark {id}: {n} observation(s)")?;
        }
        Ok(())
    }
}

const EDGE_SLACK_NS: i64 = 500_000_000;

/// Checks every session invariant and summarizes stream coverage.
pub fn validate_session(session: &Session) -> ValidationReport {
    let mut report = ValidationReport::default();

    for pair in session.camera_poses.windows(2) {
        if pair[1].t_ns <= pair[0].t_ns {
            report.violations.push(format!(
                "non-monotonic camera timestamps at t={} ns",
                pair[1].t_ns
            ));
        }
    }
    for pose in &session.camera_poses {
        if !pose.position.iter().all(|v| v.is_finite()) {
            report
                .violations
                .push(format!("non-finite camera position at t={} ns", pose.t_ns));
        }
        if let Some(q) = &pose.orientation {
            let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                report.violations.push(format!(
                    "quaternion norm {norm} off unit at t={} ns",
                    pose.t_ns
                ));
            }
        }
    }

    let pose_times: BTreeSet<i64> = session.camera_poses.iter().map(|p| p.t_ns).collect();
    for obs in &session.landmark_obs {
        if obs.landmark_id.is_empty() {
            report
                .violations
                .push(format!("empty landmark id at t={} ns", obs.t_ns));
        }
        if !pose_times.contains(&obs.t_ns) {
            report.violations.push(format!(
                "landmark {} observation at t={} ns has no matching camera pose",
                obs.landmark_id, obs.t_ns
            ));
        }
        if !obs.unknown && !obs.position.iter().all(|v| v.is_finite()) {
            report.violations.push(format!(
                "non-finite position for landmark {} at t={} ns",
                obs.landmark_id, obs.t_ns
            ));
        }
    }

    for rec in &session.sensors {
        if rec.values.len() != rec.sensor_type.value_count() {
            report.violations.push(format!(
                "{} record at t={} ns has {} values, expected {}",
                rec.sensor_type,
                rec.t_ns,
                rec.values.len(),
                rec.sensor_type.value_count()
            ));
        }
    }

    for entry in &session.wifi {
        if entry.rss_dbm > 0 || entry.rss_dbm < -120 {
            report.violations.push(format!(
                "rss {} dBm out of [-120, 0] for scan {}",
                entry.rss_dbm, entry.scan_id
            ));
        }
    }

    for (id, obs) in session.obs_by_landmark() {
        report.landmark_counts.insert(id.to_string(), obs.len());
        if obs.len() == 1 {
            report
                .warnings
                .push(format!("landmark {id} observed 1 time"));
        }
    }

    if let Some((t0, t1)) = session.time_range() {
        let outside = session
            .wifi
            .iter()
            .filter(|e| e.t_ns < t0 - EDGE_SLACK_NS || e.t_ns > t1 + EDGE_SLACK_NS)
            .count();
        if outside > 0 {
            report.warnings.push(format!(
                "{outside} wifi entries outside the camera pose time range (unannotatable)"
            ));
        }
        let sensors_outside = session
            .sensors
            .iter()
            .filter(|r| r.t_ns < t0 - EDGE_SLACK_NS || r.t_ns > t1 + EDGE_SLACK_NS)
            .count();
        if sensors_outside > 0 {
            report.warnings.push(format!(
                "{sensors_outside} sensor records outside the camera pose time range"
            ));
        }
    } else {
        report.violations.push("session has no camera poses".into());
    }

    report.streams = vec![
        coverage("camera_poses", session.camera_poses.iter().map(|p| p.t_ns)),
        coverage("landmark_obs", session.landmark_obs.iter().map(|o| o.t_ns)),
        coverage("sensors", session.sensors.iter().map(|r| r.t_ns)),
        coverage("wifi", session.wifi.iter().map(|e| e.t_ns)),
        coverage("events", session.events.iter().map(|e| e.t_ns)),
    ];

    report
}

fn coverage(stream: &'static str, times: impl Iterator<Item = i64>) -> StreamCoverage {
    let mut count = 0usize;
    let mut t_min = None;
    let mut t_max = None;
    for t in times {
        count += 1;
        t_min = Some(t_min.map_or(t, |m: i64| m.min(t)));
        t_max = Some(t_max.map_or(t, |m: i64| m.max(t)));
    }
    StreamCoverage {
        stream,
        count,
        t_min_ns: t_min,
        t_max_ns: t_max,
    }
}

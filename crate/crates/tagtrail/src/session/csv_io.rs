//! CSV serialization of sessions and site metadata.
//!
//! File schemas (headers are exact):
//!
//! * `CameraPose.csv`    - `t_ns,x,y,z,qx,qy,qz,qw`
//! * `LandmarkPose.csv`  - `t_ns,landmark_id,x,y,z`
//! * `Sensors.csv`       - `t_ns,sensor_type,v0,v1,v2,v3` (v3 empty for 3-value sensors)
//! * `WiFi.csv`          - `scan_id,t_ns,bssid,rss_dbm,freq_mhz`
//! * `Events.csv`        - `t_ns,event_type`
//! * `landmarks.csv`     - `landmark_id,x_bcs,y_bcs,floor_id`
//! * `control_points.csv`- `x_bcs,y_bcs,floor_id`
//!
//! Floats are written in shortest round-trip decimal notation, so
//! `parse_session(write_session(s)) == s` bit-for-bit. Timestamps are
//! normalized on parse so the first camera pose sits at `t_ns = 0`.

use super::{
    Event, EventType, LandmarkObservation, Pose, SensorRecord, SensorType, Session, SessionError,
    Vec3, WifiEntry,
};
use crate::fsutil::write_atomic;
use crate::geometry::Vec2;
use crate::session::{ControlPointSet, LandmarkRegistry};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub const CAMERA_POSE_FILE: &str = "CameraPose.csv";
pub const LANDMARK_POSE_FILE: &str = "LandmarkPose.csv";
pub const SENSORS_FILE: &str = "Sensors.csv";
pub const WIFI_FILE: &str = "WiFi.csv";
pub const EVENTS_FILE: &str = "Events.csv";
pub const LANDMARKS_FILE: &str = "landmarks.csv";
pub const CONTROL_POINTS_FILE: &str = "control_points.csv";

/// The five per-session log files, in write order.
pub const SESSION_FILES: [&str; 5] = [
    CAMERA_POSE_FILE,
    LANDMARK_POSE_FILE,
    SENSORS_FILE,
    WIFI_FILE,
    EVENTS_FILE,
];

const CAMERA_HEADER: &str = "t_ns,x,y,z,qx,qy,qz,qw";
const LANDMARK_HEADER: &str = "t_ns,landmark_id,x,y,z";
const SENSORS_HEADER: &str = "t_ns,sensor_type,v0,v1,v2,v3";
const WIFI_HEADER: &str = "scan_id,t_ns,bssid,rss_dbm,freq_mhz";
const EVENTS_HEADER: &str = "t_ns,event_type";
const LANDMARKS_HEADER: &str = "landmark_id,x_bcs,y_bcs,floor_id";
const CONTROL_POINTS_HEADER: &str = "x_bcs,y_bcs,floor_id";

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Fail parsing when more than this fraction of data rows is malformed.
    pub max_bad_row_fraction: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        // Real phone logs contain stray lines; tolerate a few.
        Self {
            max_bad_row_fraction: 0.10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BadRow {
    pub file: String,
    pub line: u64,
    pub reason: String,
}

/// Row-level diagnostics from [`parse_session`].
#[derive(Debug, Clone, Default)]
pub struct ParseReport {
    pub bad_rows: Vec<BadRow>,
    pub valid_rows: usize,
}

impl ParseReport {
    pub fn bad_fraction(&self) -> f64 {
        let total = self.valid_rows + self.bad_rows.len();
        if total == 0 {
            0.0
        } else {
            self.bad_rows.len() as f64 / total as f64
        }
    }

    fn reject(&mut self, file: &str, line: u64, reason: impl Into<String>) {
        self.bad_rows.push(BadRow {
            file: file.to_string(),
            line,
            reason: reason.into(),
        });
    }
}

/// Parses the session bundle in `dir` with default options.
pub fn parse_session(
    dir: &Path,
    floor_id: &str,
    device_id: &str,
) -> Result<(Session, ParseReport), SessionError> {
    parse_session_with(dir, floor_id, device_id, &ParseOptions::default())
}

/// Parses the session bundle in `dir`.
///
/// `CameraPose.csv` and `LandmarkPose.csv` are required; the other streams
/// are optional. Malformed rows are collected into the report with their
/// line numbers; non-monotonic camera timestamps are a hard error.
pub fn parse_session_with(
    dir: &Path,
    floor_id: &str,
    device_id: &str,
    options: &ParseOptions,
) -> Result<(Session, ParseReport), SessionError> {
    let mut report = ParseReport::default();

    let camera_rows = read_rows(&dir.join(CAMERA_POSE_FILE), CAMERA_HEADER, true)?
        .expect("required file present");
    let landmark_rows = read_rows(&dir.join(LANDMARK_POSE_FILE), LANDMARK_HEADER, true)?
        .expect("required file present");
    let sensor_rows = read_rows(&dir.join(SENSORS_FILE), SENSORS_HEADER, false)?;
    let wifi_rows = read_rows(&dir.join(WIFI_FILE), WIFI_HEADER, false)?;
    let event_rows = read_rows(&dir.join(EVENTS_FILE), EVENTS_HEADER, false)?;

    let mut camera_poses = parse_camera_rows(camera_rows, &mut report)?;
    let t0 = camera_poses.first().map(|p| p.t_ns).unwrap_or(0);
    for pose in &mut camera_poses {
        pose.t_ns -= t0;
    }
    let pose_times: BTreeSet<i64> = camera_poses.iter().map(|p| p.t_ns).collect();

    let mut landmark_obs = parse_landmark_rows(landmark_rows, &mut report);
    for obs in &mut landmark_obs {
        obs.t_ns -= t0;
    }
    landmark_obs.retain(|obs| {
        let ok = pose_times.contains(&obs.t_ns);
        if !ok {
            report.reject(
                LANDMARK_POSE_FILE,
                0,
                format!(
                    "landmark {} at t={} ns has no matching camera pose",
                    obs.landmark_id, obs.t_ns
                ),
            );
        }
        ok
    });

    let mut sensors = sensor_rows
        .map(|rows| parse_sensor_rows(rows, &mut report))
        .unwrap_or_default();
    for rec in &mut sensors {
        rec.t_ns -= t0;
    }
    let mut wifi = wifi_rows
        .map(|rows| parse_wifi_rows(rows, &mut report))
        .unwrap_or_default();
    for entry in &mut wifi {
        entry.t_ns -= t0;
    }
    let mut events = event_rows
        .map(|rows| parse_event_rows(rows, &mut report))
        .unwrap_or_default();
    for event in &mut events {
        event.t_ns -= t0;
    }

    if report.bad_fraction() > options.max_bad_row_fraction {
        return Err(SessionError::TooManyMalformedRows {
            bad: report.bad_rows.len(),
            total: report.valid_rows + report.bad_rows.len(),
        });
    }

    Ok((
        Session {
            camera_poses,
            landmark_obs,
            sensors,
            wifi,
            events,
            floor_id: floor_id.to_string(),
            device_id: device_id.to_string(),
        },
        report,
    ))
}

type NumberedRecord = (u64, csv::StringRecord);

fn read_rows(
    path: &Path,
    expected_header: &str,
    required: bool,
) -> Result<Option<Vec<NumberedRecord>>, SessionError> {
    if !path.exists() {
        if required {
            return Err(SessionError::MissingFile(path.to_path_buf()));
        }
        return Ok(None);
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|source| SessionError::Csv {
            file: file_name.clone(),
            source,
        })?;
    let header = reader
        .headers()
        .map_err(|source| SessionError::Csv {
            file: file_name.clone(),
            source,
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != expected_header {
        return Err(SessionError::BadHeader {
            file: file_name,
            expected: expected_header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        match record {
            Ok(rec) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                rows.push((line, rec));
            }
            Err(source) => {
                return Err(SessionError::Csv {
                    file: file_name,
                    source,
                })
            }
        }
    }
    Ok(Some(rows))
}

fn field_f64(rec: &csv::StringRecord, idx: usize) -> Option<f64> {
    rec.get(idx).and_then(|s| s.trim().parse::<f64>().ok())
}

fn parse_camera_rows(
    rows: Vec<NumberedRecord>,
    report: &mut ParseReport,
) -> Result<Vec<Pose>, SessionError> {
    let mut poses: Vec<Pose> = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        if rec.len() != 8 {
            report.reject(CAMERA_POSE_FILE, line, "expected 8 fields");
            continue;
        }
        let t_ns = match rec.get(0).and_then(|s| s.trim().parse::<i64>().ok()) {
            Some(t) => t,
            None => {
                report.reject(CAMERA_POSE_FILE, line, "bad timestamp");
                continue;
            }
        };
        let coords: Option<Vec<f64>> = (1..4).map(|i| field_f64(&rec, i)).collect();
        let position = match coords {
            Some(c) if c.iter().all(|v| v.is_finite()) => Vec3::new(c[0], c[1], c[2]),
            _ => {
                report.reject(CAMERA_POSE_FILE, line, "non-finite or missing position");
                continue;
            }
        };
        let q_fields: Vec<&str> = (4..8).map(|i| rec.get(i).unwrap_or("").trim()).collect();
        let orientation = if q_fields.iter().all(|s| s.is_empty()) {
            None
        } else {
            let parsed: Option<Vec<f64>> = q_fields.iter().map(|s| s.parse::<f64>().ok()).collect();
            match parsed {
                Some(q) => {
                    let norm = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
                    if (norm - 1.0).abs() > 1e-6 {
                        report.reject(CAMERA_POSE_FILE, line, "quaternion not unit-norm");
                        continue;
                    }
                    Some([q[0], q[1], q[2], q[3]])
                }
                None => {
                    report.reject(CAMERA_POSE_FILE, line, "bad quaternion fields");
                    continue;
                }
            }
        };
        if let Some(prev) = poses.last() {
            if t_ns <= prev.t_ns {
                return Err(SessionError::NonMonotonicTimestamps {
                    file: CAMERA_POSE_FILE.to_string(),
                    line,
                });
            }
        }
        report.valid_rows += 1;
        poses.push(Pose {
            t_ns,
            position,
            orientation,
        });
    }
    Ok(poses)
}

fn parse_landmark_rows(
    rows: Vec<NumberedRecord>,
    report: &mut ParseReport,
) -> Vec<LandmarkObservation> {
    let mut obs = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        if rec.len() != 5 {
            report.reject(LANDMARK_POSE_FILE, line, "expected 5 fields");
            continue;
        }
        let t_ns = match rec.get(0).and_then(|s| s.trim().parse::<i64>().ok()) {
            Some(t) => t,
            None => {
                report.reject(LANDMARK_POSE_FILE, line, "bad timestamp");
                continue;
            }
        };
        let landmark_id = rec.get(1).unwrap_or("").trim().to_string();
        if landmark_id.is_empty() {
            report.reject(LANDMARK_POSE_FILE, line, "empty landmark id");
            continue;
        }
        let coords: Option<Vec<f64>> = (2..5).map(|i| field_f64(&rec, i)).collect();
        let coords = match coords {
            Some(c) => c,
            None => {
                report.reject(LANDMARK_POSE_FILE, line, "bad position fields");
                continue;
            }
        };
        let all_nan = coords.iter().all(|v| v.is_nan());
        if all_nan {
            report.valid_rows += 1;
            obs.push(LandmarkObservation::unknown(t_ns, landmark_id));
            continue;
        }
        if !coords.iter().all(|v| v.is_finite()) {
            report.reject(LANDMARK_POSE_FILE, line, "non-finite position");
            continue;
        }
        report.valid_rows += 1;
        obs.push(LandmarkObservation::new(
            t_ns,
            landmark_id,
            Vec3::new(coords[0], coords[1], coords[2]),
        ));
    }
    obs
}

fn parse_sensor_rows(rows: Vec<NumberedRecord>, report: &mut ParseReport) -> Vec<SensorRecord> {
    let mut records = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        if rec.len() != 6 {
            report.reject(SENSORS_FILE, line, "expected 6 fields");
            continue;
        }
        let t_ns = match rec.get(0).and_then(|s| s.trim().parse::<i64>().ok()) {
            Some(t) => t,
            None => {
                report.reject(SENSORS_FILE, line, "bad timestamp");
                continue;
            }
        };
        let sensor_type = match rec.get(1).and_then(|s| SensorType::from_code(s.trim())) {
            Some(t) => t,
            None => {
                report.reject(SENSORS_FILE, line, "unknown sensor_type");
                continue;
            }
        };
        let expect = sensor_type.value_count();
        let v3 = rec.get(5).unwrap_or("").trim();
        if expect == 3 && !v3.is_empty() {
            report.reject(SENSORS_FILE, line, "3-value sensor with 4 values");
            continue;
        }
        if expect == 4 && v3.is_empty() {
            report.reject(SENSORS_FILE, line, "rotation vector needs 4 values");
            continue;
        }
        let values: Option<Vec<f64>> = (2..2 + expect).map(|i| field_f64(&rec, i)).collect();
        match values {
            Some(v) if v.iter().all(|x| x.is_finite()) => {
                report.valid_rows += 1;
                records.push(SensorRecord {
                    t_ns,
                    sensor_type,
                    values: v,
                });
            }
            _ => report.reject(SENSORS_FILE, line, "bad value fields"),
        }
    }
    records
}

fn parse_wifi_rows(rows: Vec<NumberedRecord>, report: &mut ParseReport) -> Vec<WifiEntry> {
    let mut entries = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        if rec.len() != 5 {
            report.reject(WIFI_FILE, line, "expected 5 fields");
            continue;
        }
        let scan_id = rec.get(0).and_then(|s| s.trim().parse::<u64>().ok());
        let t_ns = rec.get(1).and_then(|s| s.trim().parse::<i64>().ok());
        let bssid = rec.get(2).unwrap_or("").trim().to_string();
        let rss_dbm = rec.get(3).and_then(|s| s.trim().parse::<i32>().ok());
        let freq_mhz = rec.get(4).and_then(|s| s.trim().parse::<u32>().ok());
        match (scan_id, t_ns, rss_dbm, freq_mhz) {
            (Some(scan_id), Some(t_ns), Some(rss_dbm), Some(freq_mhz)) if !bssid.is_empty() => {
                if !(-120..=0).contains(&rss_dbm) {
                    report.reject(WIFI_FILE, line, "rss out of [-120, 0] dBm");
                    continue;
                }
                report.valid_rows += 1;
                entries.push(WifiEntry {
                    scan_id,
                    t_ns,
                    bssid,
                    rss_dbm,
                    freq_mhz,
                });
            }
            _ => report.reject(WIFI_FILE, line, "bad fields"),
        }
    }
    entries
}

fn parse_event_rows(rows: Vec<NumberedRecord>, report: &mut ParseReport) -> Vec<Event> {
    let mut events = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        if rec.len() != 2 {
            report.reject(EVENTS_FILE, line, "expected 2 fields");
            continue;
        }
        let t_ns = rec.get(0).and_then(|s| s.trim().parse::<i64>().ok());
        let event_type = rec.get(1).and_then(|s| EventType::from_code(s.trim()));
        match (t_ns, event_type) {
            (Some(t_ns), Some(event_type)) => {
                report.valid_rows += 1;
                events.push(Event { t_ns, event_type });
            }
            _ => report.reject(EVENTS_FILE, line, "bad fields"),
        }
    }
    events
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

/// Writes the five session CSVs into `dir` (created if absent), atomically.
/// Returns the written paths in schema order.
pub fn write_session(session: &Session, dir: &Path) -> Result<Vec<PathBuf>, SessionError> {
    std::fs::create_dir_all(dir).map_err(|source| SessionError::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let mut camera = String::from(CAMERA_HEADER);
    camera.push('\n');
    for pose in &session.camera_poses {
        let q = match &pose.orientation {
            Some(q) => format!(
                "{},{},{},{}",
                fmt_f64(q[0]),
                fmt_f64(q[1]),
                fmt_f64(q[2]),
                fmt_f64(q[3])
            ),
            None => ",,,".to_string(),
        };
        camera.push_str(&format!(
            "{},{},{},{},{}\n",
            pose.t_ns,
            fmt_f64(pose.position.x),
            fmt_f64(pose.position.y),
            fmt_f64(pose.position.z),
            q
        ));
    }

    let mut landmarks = String::from(LANDMARK_HEADER);
    landmarks.push('\n');
    for obs in &session.landmark_obs {
        if obs.unknown {
            landmarks.push_str(&format!("{},{},nan,nan,nan\n", obs.t_ns, obs.landmark_id));
        } else {
            landmarks.push_str(&format!(
                "{},{},{},{},{}\n",
                obs.t_ns,
                obs.landmark_id,
                fmt_f64(obs.position.x),
                fmt_f64(obs.position.y),
                fmt_f64(obs.position.z)
            ));
        }
    }

    let mut sensors = String::from(SENSORS_HEADER);
    sensors.push('\n');
    for rec in &session.sensors {
        let v3 = rec.values.get(3).map(|v| fmt_f64(*v)).unwrap_or_default();
        sensors.push_str(&format!(
            "{},{},{},{},{},{}\n",
            rec.t_ns,
            rec.sensor_type.code(),
            fmt_f64(rec.values[0]),
            fmt_f64(rec.values[1]),
            fmt_f64(rec.values[2]),
            v3
        ));
    }

    let mut wifi = String::from(WIFI_HEADER);
    wifi.push('\n');
    for e in &session.wifi {
        wifi.push_str(&format!(
            "{},{},{},{},{}\n",
            e.scan_id, e.t_ns, e.bssid, e.rss_dbm, e.freq_mhz
        ));
    }

    let mut events = String::from(EVENTS_HEADER);
    events.push('\n');
    for e in &session.events {
        events.push_str(&format!("{},{}\n", e.t_ns, e.event_type.code()));
    }

    let files = [
        (CAMERA_POSE_FILE, camera),
        (LANDMARK_POSE_FILE, landmarks),
        (SENSORS_FILE, sensors),
        (WIFI_FILE, wifi),
        (EVENTS_FILE, events),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        write_atomic(&path, contents.as_bytes()).map_err(|source| SessionError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Reads `landmarks.csv`, keeping only rows of the requested floor.
pub fn read_landmark_registry(
    path: &Path,
    floor_id: &str,
) -> Result<LandmarkRegistry, SessionError> {
    let rows = read_rows(path, LANDMARKS_HEADER, true)?.expect("required file present");
    let mut entries = Vec::new();
    for (line, rec) in rows {
        let id = rec.get(0).unwrap_or("").trim().to_string();
        let x = field_f64(&rec, 1);
        let y = field_f64(&rec, 2);
        let floor = rec.get(3).unwrap_or("").trim();
        match (x, y) {
            (Some(x), Some(y)) if !id.is_empty() => {
                if floor == floor_id {
                    entries.push((id, Vec2::new(x, y)));
                }
            }
            _ => {
                return Err(SessionError::InvalidSite(format!(
                    "{LANDMARKS_FILE} line {line}: bad row"
                )))
            }
        }
    }
    LandmarkRegistry::new(floor_id, entries)
}

/// Writes `landmarks.csv` for one floor, atomically.
pub fn write_landmark_registry(
    registry: &LandmarkRegistry,
    path: &Path,
) -> Result<(), SessionError> {
    let mut out = String::from(LANDMARKS_HEADER);
    out.push('\n');
    for (id, p) in registry.iter() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            id,
            fmt_f64(p.x),
            fmt_f64(p.y),
            registry.floor_id
        ));
    }
    write_atomic(path, out.as_bytes()).map_err(|source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads `control_points.csv`, keeping only rows of the requested floor.
pub fn read_control_points(path: &Path, floor_id: &str) -> Result<ControlPointSet, SessionError> {
    let rows = read_rows(path, CONTROL_POINTS_HEADER, true)?.expect("required file present");
    let mut points = Vec::new();
    for (line, rec) in rows {
        let x = field_f64(&rec, 0);
        let y = field_f64(&rec, 1);
        let floor = rec.get(2).unwrap_or("").trim();
        match (x, y) {
            (Some(x), Some(y)) => {
                if floor == floor_id {
                    points.push(Vec2::new(x, y));
                }
            }
            _ => {
                return Err(SessionError::InvalidSite(format!(
                    "{CONTROL_POINTS_FILE} line {line}: bad row"
                )))
            }
        }
    }
    Ok(ControlPointSet::new(floor_id, points))
}

/// Writes `control_points.csv` for one floor, atomically.
pub fn write_control_points(set: &ControlPointSet, path: &Path) -> Result<(), SessionError> {
    let mut out = String::from(CONTROL_POINTS_HEADER);
    out.push('\n');
    for p in &set.points {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(p.x),
            fmt_f64(p.y),
            set.floor_id
        ));
    }
    write_atomic(path, out.as_bytes()).map_err(|source| SessionError::Io {
        path: path.to_path_buf(),
        source,
    })
}

//! Time-based matching of sensor and WiFi streams against a mapped
//! trajectory: every record gets the interpolated building-frame position at
//! its own timestamp, WiFi entries are positioned individually inside each
//! scan, and a scan's label is the mean of its entry positions.

use crate::fsutil::write_atomic;
use crate::geometry::Vec2;
use crate::mapping::{MappedTrajectory, SegmentStatus};
use crate::session::{SensorRecord, SensorType, WifiEntry};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad labeled data file: {0}")]
    BadFile(String),
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AnnotatorConfig {
    /// Records at most this far outside the sampled range clamp to the edge.
    pub edge_clamp_ms: i64,
    /// Scans retaining less than this fraction of entries are dropped whole.
    pub min_scan_retention: f64,
}

impl Default for AnnotatorConfig {
    fn default() -> Self {
        Self {
            edge_clamp_ms: 500,
            min_scan_retention: 0.5,
        }
    }
}

/// A sensor record with its position label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSensorRecord {
    pub record: SensorRecord,
    /// Building-frame position at the record timestamp.
    pub position: Vec2,
    /// Status of the trajectory segment the label came from; never a
    /// discarded status.
    pub segment_status: SegmentStatus,
}

#[derive(Debug, Clone)]
pub struct AnnotatedSensors {
    pub records: Vec<LabeledSensorRecord>,
    /// Records without a resolvable position (discarded spans, out of range).
    pub dropped: usize,
    pub floor_id: String,
    pub device_id: String,
}

/// One positioned WiFi entry of a scan.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintEntry {
    pub bssid: String,
    pub rss_dbm: i32,
    pub t_ns: i64,
    pub position: Vec2,
}

/// One network scan with per-entry positions and an averaged position label.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub scan_id: u64,
    pub entries: Vec<FingerprintEntry>,
    /// Componentwise mean of the entry positions.
    pub label: Vec2,
    pub floor_id: String,
    pub device_id: String,
}

#[derive(Debug, Clone, Default)]
pub struct FingerprintSet {
    pub fingerprints: Vec<Fingerprint>,
    /// Entries without a resolvable position.
    pub dropped_entries: usize,
    /// Scans dropped entirely (nothing resolvable, or retention below the
    /// configured minimum - their label would be biased).
    pub dropped_scans: usize,
}

/// Labels each sensor record via the trajectory; unresolvable records are
/// dropped and counted. Keeps input time order.
pub fn annotate_sensors(
    traj: &MappedTrajectory,
    sensors: &[SensorRecord],
    floor_id: &str,
    device_id: &str,
    cfg: &AnnotatorConfig,
) -> AnnotatedSensors {
    let clamp_ns = cfg.edge_clamp_ms * 1_000_000;
    let mut records = Vec::with_capacity(sensors.len());
    let mut dropped = 0usize;
    for rec in sensors {
        match traj.pose_at_detailed(rec.t_ns, clamp_ns) {
            Some((position, segment_status)) if !segment_status.is_discarded() => {
                records.push(LabeledSensorRecord {
                    record: rec.clone(),
                    position,
                    segment_status,
                });
            }
            _ => dropped += 1,
        }
    }
    AnnotatedSensors {
        records,
        dropped,
        floor_id: floor_id.to_string(),
        device_id: device_id.to_string(),
    }
}

/// Groups WiFi entries by scan, positions each entry at its own timestamp,
/// and labels每 surviving scan with the mean of its entry positions.
pub fn build_fingerprints(
    traj: &MappedTrajectory,
    wifi: &[WifiEntry],
    floor_id: &str,
    device_id: &str,
    cfg: &AnnotatorConfig,
) -> FingerprintSet {
    let clamp_ns = cfg.edge_clamp_ms * 1_000_000;
    let mut scans: BTreeMap<u64, Vec<&WifiEntry>> = BTreeMap::new();
    for entry in wifi {
        scans.entry(entry.scan_id).or_default().push(entry);
    }

    let mut set = FingerprintSet::default();
    for (scan_id, entries) in scans {
        let total = entries.len();
        let mut resolved = Vec::with_capacity(total);
        for entry in entries {
            match traj.pose_at_detailed(entry.t_ns, clamp_ns) {
                Some((position, status)) if !status.is_discarded() => {
                    resolved.push(FingerprintEntry {
                        bssid: entry.bssid.clone(),
                        rss_dbm: entry.rss_dbm,
                        t_ns: entry.t_ns,
                        position,
                    });
                }
                _ => set.dropped_entries += 1,
            }
        }
        if resolved.is_empty() || (resolved.len() as f64) < cfg.min_scan_retention * total as f64 {
            set.dropped_scans += 1;
            continue;
        }
        let label = resolved.iter().map(|e| e.position).sum::<Vec2>() / resolved.len() as f64;
        set.fingerprints.push(Fingerprint {
            scan_id,
            entries: resolved,
            label,
            floor_id: floor_id.to_string(),
            device_id: device_id.to_string(),
        });
    }
    set
}

const FINGERPRINTS_HEADER: &str =
    "scan_id,device_id,floor_id,label_x,label_y,bssid,rss_dbm,entry_x,entry_y,t_ns";
const LABELED_SENSORS_HEADER: &str =
    "t_ns,sensor_type,v0,v1,v2,v3,device_id,floor_id,x,y,segment_status";

/// Writes `fingerprints.csv` (one row per scan entry), atomically.
pub fn write_fingerprints_csv(
    fingerprints: &[Fingerprint],
    path: &Path,
) -> Result<(), AnnotateError> {
    let mut out = String::from(FINGERPRINTS_HEADER);
    out.push('\n');
    for fp in fingerprints {
        for e in &fp.entries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                fp.scan_id,
                fp.device_id,
                fp.floor_id,
                fp.label.x,
                fp.label.y,
                e.bssid,
                e.rss_dbm,
                e.position.x,
                e.position.y,
                e.t_ns
            ));
        }
    }
    write_atomic(path, out.as_bytes()).map_err(|source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads fingerprints back from `fingerprints.csv`.
pub fn read_fingerprints_csv(path: &Path) -> Result<Vec<Fingerprint>, AnnotateError> {
    let text = std::fs::read_to_string(path).map_err(|source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    if lines.next() != Some(FINGERPRINTS_HEADER) {
        return Err(AnnotateError::BadFile(format!(
            "expected header `{FINGERPRINTS_HEADER}`"
        )));
    }
    let mut by_scan: BTreeMap<u64, Fingerprint> = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let parsed = (|| {
            let scan_id: u64 = f.first()?.parse().ok()?;
            let device_id = f.get(1)?.to_string();
            let floor_id = f.get(2)?.to_string();
            let label = Vec2::new(f.get(3)?.parse().ok()?, f.get(4)?.parse().ok()?);
            let entry = FingerprintEntry {
                bssid: f.get(5)?.to_string(),
                rss_dbm: f.get(6)?.parse().ok()?,
                position: Vec2::new(f.get(7)?.parse().ok()?, f.get(8)?.parse().ok()?),
                t_ns: f.get(9)?.parse().ok()?,
            };
            Some((scan_id, device_id, floor_id, label, entry))
        })();
        let (scan_id, device_id, floor_id, label, entry) =
            parsed.ok_or_else(|| AnnotateError::BadFile(format!("line {}: bad row", n + 2)))?;
        by_scan
            .entry(scan_id)
            .or_insert_with(|| Fingerprint {
                scan_id,
                entries: Vec::new(),
                label,
                floor_id,
                device_id,
            })
            .entries
            .push(entry);
    }
    Ok(by_scan.into_values().collect())
}

/// Writes `labeled_sensors.csv`, atomically.
pub fn write_labeled_sensors_csv(
    annotated: &AnnotatedSensors,
    path: &Path,
) -> Result<(), AnnotateError> {
    let mut out = String::from(LABELED_SENSORS_HEADER);
    out.push('\n');
    for rec in &annotated.records {
        let v3 = rec
            .record
            .values
            .get(3)
            .map(|v| format!("{v}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            rec.record.t_ns,
            rec.record.sensor_type.code(),
            rec.record.values[0],
            rec.record.values[1],
            rec.record.values[2],
            v3,
            annotated.device_id,
            annotated.floor_id,
            rec.position.x,
            rec.position.y,
            rec.segment_status
        ));
    }
    write_atomic(path, out.as_bytes()).map_err(|source| AnnotateError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// True when `sensor_type` rows describe the same stream (test helper for
/// schema checks lives with the writers).
pub fn sensor_code_round_trips(t: SensorType) -> bool {
    SensorType::from_code(t.code()) == Some(t)
}

//! Build a position-labeled fingerprint dataset: map a walk into the
//! building frame, position every WiFi entry at its own timestamp, and
//! label each scan with the mean of its entry positions.
//!
//! ```bash
//! cargo run --example annotate_fingerprints
//! ```

use anyhow::Result;
use tagtrail::annotate::{annotate_sensors, build_fingerprints, AnnotatorConfig};
use tagtrail::mapping::{map_local, LocalMapperConfig};
use tagtrail::simulate::{preset, scenario_registry, simulate_session};

fn main() -> Result<()> {
    let mut cfg = preset("clean_short").expect("built-in preset");
    cfg.seed = 21;
    let (session, truth) = simulate_session(&cfg)?;
    let registry = scenario_registry(&cfg);
    let trajectory = map_local(&session, &registry, &LocalMapperConfig::default())?;

    let annotator = AnnotatorConfig::default();
    let sensors = annotate_sensors(
        &trajectory,
        &session.sensors,
        &cfg.floor_id,
        &cfg.device_id,
        &annotator,
    );
    let fingerprints = build_fingerprints(
        &trajectory,
        &session.wifi,
        &cfg.floor_id,
        &cfg.device_id,
        &annotator,
    );

    println!(
        "labeled {} of {} sensor records ({} dropped)",
        sensors.records.len(),
        session.sensors.len(),
        sensors.dropped
    );
    println!(
        "built {} fingerprints ({} entries dropped, {} scans dropped)\n",
        fingerprints.fingerprints.len(),
        fingerprints.dropped_entries,
        fingerprints.dropped_scans
    );

    println!(
        "{:>7} {:>8} {:>22} {:>22} {:>12}",
        "scan", "entries", "label (x, y) [m]", "true mean (x, y) [m]", "error [m]"
    );
    for fp in fingerprints.fingerprints.iter().take(10) {
        let truth_mean = fp
            .entries
            .iter()
            .filter_map(|e| truth.position_at(e.t_ns))
            .sum::<tagtrail::Vec2>()
            / fp.entries.len() as f64;
        println!(
            "{:>7} {:>8} {:>10.2}, {:>9.2} {:>10.2}, {:>9.2} {:>12.3}",
            fp.scan_id,
            fp.entries.len(),
            fp.label.x,
            fp.label.y,
            truth_mean.x,
            truth_mean.y,
            (fp.label - truth_mean).norm()
        );
    }
    println!("...");
    Ok(())
}

//! Synthesize a collection walk and write the session bundle to disk.
//!
//! ```bash
//! cargo run --example simulate_session
//! ```

use anyhow::Result;
use tagtrail::session::write_session;
use tagtrail::simulate::{preset, preset_names, simulate_session};

fn main() -> Result<()> {
    println!("available presets: {}", preset_names().join(", "));

    let mut cfg = preset("clean_short").expect("built-in preset");
    cfg.seed = 42;
    let (session, truth) = simulate_session(&cfg)?;

    let (t0, t1) = session.time_range().expect("non-empty session");
    println!("\nsimulated `clean_short` with seed {}:", cfg.seed);
    println!("  duration        {:.1} s", (t1 - t0) as f64 / 1e9);
    println!("  camera poses    {}", session.camera_poses.len());
    println!("  landmark obs    {}", session.landmark_obs.len());
    println!("  sensor records  {}", session.sensors.len());
    println!("  wifi entries    {}", session.wifi.len());
    println!("  button presses  {}", session.events.len());
    println!("  ground truth    {} samples", truth.samples.len());

    let dir = tempfile::tempdir()?;
    let files = write_session(&session, dir.path())?;
    truth.write_csv(&dir.path().join("ground_truth.csv"))?;
    println!("\nwrote the bundle to {}:", dir.path().display());
    for file in files {
        let size = std::fs::metadata(&file)?.len();
        println!(
            "  {:>9} bytes  {}",
            size,
            file.file_name().unwrap().to_string_lossy()
        );
    }

    // The first logged pose sits at the local-frame image of the start
    // point, not at the start point itself - that is the mapping problem.
    let first = &session.camera_poses[0];
    println!(
        "\nfirst true position ({:.2}, {:.2}) logs as ({:.2}, {:.2}) in the local frame",
        truth.samples[0].1.x, truth.samples[0].1.y, first.position.x, first.position.y
    );
    Ok(())
}

//! Detect the two tracker failure modes in faulty walks: single-frame pose
//! jumps and landmark logs collapsing onto the camera (tracking loss).
//!
//! ```bash
//! cargo run --example failure_detection
//! ```

use anyhow::Result;
use tagtrail::mapping::{detect_failures, LocalMapperConfig};
use tagtrail::simulate::{preset, simulate_session};

fn main() -> Result<()> {
    let thresholds = LocalMapperConfig::default();

    for name in ["clean_short", "jump", "tracking_loss"] {
        let mut cfg = preset(name).expect("built-in preset");
        cfg.seed = 12;
        let (session, _) = simulate_session(&cfg)?;
        let report = detect_failures(
            &session,
            thresholds.jump_threshold_m,
            thresholds.identity_eps_m,
            thresholds.min_run_frames,
        );

        println!("{name}:");
        if report.is_clean() {
            println!("  no failures detected");
        }
        for jump in &report.jumps {
            println!(
                "  jump at t = {:.2} s, displacement {:.2} m",
                jump.t_ns as f64 / 1e9,
                jump.displacement_m
            );
        }
        for loss in &report.tracking_loss {
            println!(
                "  tracking loss of {} over t = [{:.2}, {:.2}] s",
                loss.landmark_id,
                loss.start_t_ns as f64 / 1e9,
                loss.end_t_ns as f64 / 1e9
            );
        }

        // Flagging turns the lost observations into `unknown` rows, which
        // the corrected mapper (and the landmark medians) then ignore.
        let flagged = report.apply(&session);
        let unknown = flagged.landmark_obs.iter().filter(|o| o.unknown).count();
        println!(
            "  {unknown} of {} observations flagged unknown\n",
            flagged.landmark_obs.len()
        );
    }
    Ok(())
}

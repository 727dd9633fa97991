//! Train/test a weighted-kNN positioning baseline on a simulated radio map
//! to show the auto-labeled fingerprints are good enough for localization.
//!
//! ```bash
//! cargo run --example knn_baseline
//! ```

use anyhow::Result;
use tagtrail::annotate::build_fingerprints;
use tagtrail::evaluate::{knn_localize, split_fingerprints, KnnConfig};
use tagtrail::mapping::{map_local, LocalMapperConfig};
use tagtrail::simulate::{preset, scenario_registry, simulate_session};

fn main() -> Result<()> {
    // 15-minute walk, 8 access points, 4 dB log-normal shadowing.
    let mut cfg = preset("long_walk").expect("built-in preset");
    cfg.wifi.shadowing_sigma_db = 4.0;
    cfg.seed = 5;
    let (session, _) = simulate_session(&cfg)?;
    let registry = scenario_registry(&cfg);
    let trajectory = map_local(&session, &registry, &LocalMapperConfig::default())?;
    let set = build_fingerprints(
        &trajectory,
        &session.wifi,
        &cfg.floor_id,
        &cfg.device_id,
        &Default::default(),
    );
    println!(
        "radio map: {} auto-labeled fingerprints over {} access points\n",
        set.fingerprints.len(),
        cfg.wifi.ap_positions.len()
    );

    let (train, test) = split_fingerprints(&set.fingerprints, 0.3, 7);
    println!(
        "70/30 split: {} train / {} test scans",
        train.len(),
        test.len()
    );
    println!(
        "\n{:>3} {:>10} {:>11} {:>11}",
        "k", "floor_acc", "mean [m]", "median [m]"
    );
    for k in [1, 3, 5, 9] {
        let result = knn_localize(
            &train,
            &test,
            &KnnConfig {
                k,
                ..Default::default()
            },
        )?;
        println!(
            "{:>3} {:>10.3} {:>11.2} {:>11.2}",
            k, result.floor_accuracy, result.stats.mean_m, result.stats.median_m
        );
    }

    // Sanity: memorized map, exact queries.
    let exact = knn_localize(
        &set.fingerprints,
        &set.fingerprints,
        &KnnConfig {
            k: 1,
            ..Default::default()
        },
    )?;
    println!(
        "\ntrain == test with k = 1 reproduces labels exactly (max error {:.1e} m)",
        exact.stats.max_m
    );
    Ok(())
}

//! Run the whole workflow through the command-line interface:
//! simulate -> map -> annotate -> evaluate, files handed between stages.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use anyhow::{bail, Result};

fn run(args: &[String]) -> Result<()> {
    println!("$ tagtrail {}", args[1..].join(" "));
    let code = tagtrail::cli::run_from(args.iter().cloned());
    if code != 0 {
        bail!("`tagtrail {}` exited with {code}", args[1..].join(" "));
    }
    Ok(())
}

fn main() -> Result<()> {
    let root = tempfile::tempdir()?;
    let path = |name: &str| root.path().join(name).display().to_string();
    let arg = |parts: &[&str]| -> Vec<String> {
        std::iter::once("tagtrail".to_string())
            .chain(parts.iter().map(|s| s.to_string()))
            .collect()
    };

    run(&arg(&[
        "simulate",
        "--preset",
        "acs_update_2m",
        "--seed",
        "7",
        "--out",
        &path("session"),
        "--site-out",
        &path("session"),
    ]))?;

    run(&arg(&[
        "map",
        &path("session"),
        "--landmarks",
        &path("session/landmarks.csv"),
        "--strategy",
        "all",
        "--out",
        &path("mapped"),
    ]))?;

    run(&arg(&[
        "annotate",
        &path("session"),
        "--trajectory",
        &path("mapped/trajectory_local_corrected.csv"),
        "--out",
        &path("labeled"),
    ]))?;

    run(&arg(&[
        "evaluate",
        "--trajectory",
        &path("mapped/trajectory_global.csv"),
        "--trajectory",
        &path("mapped/trajectory_local.csv"),
        "--trajectory",
        &path("mapped/trajectory_local_corrected.csv"),
        "--ground-truth",
        &path("session/ground_truth.csv"),
        "--control-points",
        &path("session/control_points.csv"),
        "--session-dir",
        &path("session"),
        "--fingerprints",
        &path("labeled/fingerprints.csv"),
        "--seed",
        "7",
        "--out",
        &path("metrics.csv"),
        "--plot-data",
        &path("plot.csv"),
    ]))?;

    run(&arg(&["validate", &path("session")]))?;

    println!("\nmetrics.csv:");
    print!(
        "{}",
        std::fs::read_to_string(root.path().join("metrics.csv"))?
    );
    Ok(())
}

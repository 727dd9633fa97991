//! Command-line pipeline: `simulate`, `map`, `annotate`, `evaluate`,
//! `validate`. Each stage reads and writes plain CSV files, so stages can be
//! re-run, cached and inspected independently; all randomness is seeded and
//! outputs are written atomically, making runs byte-reproducible.

use crate::annotate::{
    annotate_sensors, build_fingerprints, read_fingerprints_csv, write_fingerprints_csv,
    write_labeled_sensors_csv, AnnotateError, AnnotatorConfig,
};
use crate::evaluate::{
    control_point_errors, knn_localize, metrics_csv, metrics_table, split_fingerprints,
    trajectory_error, ErrorStats, EvaluateError, KnnConfig,
};
use crate::fsutil::write_atomic;
use crate::geometry::GeometryError;
use crate::mapping::{
    map_global, map_local, LocalMapperConfig, MappedTrajectory, MappingError, MappingStrategy,
};
use crate::session::{
    parse_session, read_control_points, read_landmark_registry, validate_session,
    write_control_points, write_landmark_registry, SessionError,
};
use crate::simulate::{
    preset, preset_names, scenario_control_points, scenario_registry, simulate_session,
    GroundTruth, ScenarioConfig, SimulateError,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

const DEFAULT_FLOOR: &str = "F1";
const DEFAULT_DEVICE: &str = "sim01";

/// Options shared by pipeline stages, loadable from a TOML file (`--config`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub floor_id: Option<String>,
    pub device_id: Option<String>,
    pub local_mapper: LocalMapperConfig,
    pub annotator: AnnotatorConfig,
    pub knn: KnnConfig,
}

#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        let code = match &e {
            SessionError::MissingFile(_) => "missing-file",
            SessionError::NonMonotonicTimestamps { .. } => "non-monotonic-timestamps",
            SessionError::TooManyMalformedRows { .. } => "malformed-session",
            SessionError::BadHeader { .. } | SessionError::Csv { .. } => "malformed-session",
            SessionError::Io { .. } => "io-error",
            SessionError::InvalidSite(_) => "invalid-site-metadata",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<MappingError> for CliError {
    fn from(e: MappingError) -> Self {
        let code = match &e {
            MappingError::TooFewLandmarks { .. } => "too-few-landmarks",
            MappingError::TooFewSplitPoints { .. } => "too-few-split-points",
            MappingError::EmptyTrajectory => "empty-trajectory",
            MappingError::Geometry(GeometryError::Degenerate(_)) => "degenerate-geometry",
            MappingError::Geometry(_) => "degenerate-geometry",
            MappingError::Io { .. } => "io-error",
            MappingError::BadTrajectoryFile(_) => "bad-trajectory-file",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<SimulateError> for CliError {
    fn from(e: SimulateError) -> Self {
        let code = match &e {
            SimulateError::InvalidConfig(_) => "invalid-scenario",
            SimulateError::Io { .. } => "io-error",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<AnnotateError> for CliError {
    fn from(e: AnnotateError) -> Self {
        let code = match &e {
            AnnotateError::Io { .. } => "io-error",
            AnnotateError::BadFile(_) => "bad-labeled-file",
        };
        CliError::new(code, e.to_string())
    }
}

impl From<EvaluateError> for CliError {
    fn from(e: EvaluateError) -> Self {
        let code = match &e {
            EvaluateError::EmptyControlPoints => "empty-control-points",
            EvaluateError::DisjointTimeRanges => "disjoint-time-ranges",
            EvaluateError::EmptyTrainingSet => "empty-training-set",
            EvaluateError::BadK => "bad-k",
        };
        CliError::new(code, e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "tagtrail",
    version,
    about = "Map drifting tracker logs into a building frame and label collected data"
)]
struct Cli {
    /// TOML file with pipeline options (thresholds, annotator, kNN).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Verbose logging.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic session bundle plus ground truth.
    Simulate(SimulateArgs),
    /// Map a session into the building frame.
    Map(MapArgs),
    /// Label sensor records and WiFi scans along a mapped trajectory.
    Annotate(AnnotateArgs),
    /// Error statistics against ground truth / control points, or a kNN run.
    Evaluate(EvaluateArgs),
    /// Parse a session and report invariant violations and coverage.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario name.
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario TOML file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory for the session bundle and ground_truth.csv.
    #[arg(long)]
    out: PathBuf,
    /// Also write landmarks.csv and control_points.csv into this directory.
    #[arg(long)]
    site_out: Option<PathBuf>,
}

#[derive(Args)]
struct MapArgs {
    /// Directory holding the session CSV bundle.
    session_dir: PathBuf,
    /// landmarks.csv with surveyed building-frame positions.
    #[arg(long)]
    landmarks: PathBuf,
    /// global, local, local_corrected or all.
    #[arg(long, default_value = "all")]
    strategy: String,
    /// Output directory for trajectory_<strategy>.csv files.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    floor: Option<String>,
    #[arg(long)]
    device: Option<String>,
    #[arg(long)]
    proximity_threshold_m: Option<f64>,
    #[arg(long)]
    jump_threshold_m: Option<f64>,
    #[arg(long)]
    identity_eps_m: Option<f64>,
    #[arg(long)]
    min_run_frames: Option<usize>,
    #[arg(long)]
    merge_window_s: Option<f64>,
}

#[derive(Args)]
struct AnnotateArgs {
    /// Directory holding the session CSV bundle.
    session_dir: PathBuf,
    /// Mapped trajectory CSV to take positions from.
    #[arg(long)]
    trajectory: PathBuf,
    /// Output directory for fingerprints.csv and labeled_sensors.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    floor: Option<String>,
    #[arg(long)]
    device: Option<String>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Mapped trajectory CSV (repeatable; column label from file stem).
    #[arg(long)]
    trajectory: Vec<PathBuf>,
    /// ground_truth.csv for full-trajectory comparison.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// control_points.csv for button-press evaluation (needs session dir).
    #[arg(long)]
    control_points: Option<PathBuf>,
    /// Session directory providing the button-press events.
    #[arg(long)]
    session_dir: Option<PathBuf>,
    /// fingerprints.csv for a kNN positioning run.
    #[arg(long)]
    fingerprints: Option<PathBuf>,
    /// Fraction of fingerprints held out for testing.
    #[arg(long, default_value_t = 0.3)]
    test_fraction: f64,
    /// Neighbors for the kNN baseline.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Write the metrics table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Export overlaid trajectories as source,t_ns,x,y rows for plotting.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[arg(long)]
    floor: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Directory holding the session CSV bundle.
    session_dir: PathBuf,
    #[arg(long)]
    floor: Option<String>,
    #[arg(long)]
    device: Option<String>,
}

/// Entry point for the binary; parses `std::env` arguments.
pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Runs the CLI on explicit arguments and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };

    let level = if cli.verbose { "debug" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();

    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code, e.message);
            1
        }
    }
}

fn load_pipeline_config(path: Option<&Path>) -> Result<PipelineConfig, CliError> {
    match path {
        None => Ok(PipelineConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new("missing-file", format!("{}: {e}", path.display())))?;
            toml::from_str(&text)
                .map_err(|e| CliError::new("invalid-config", format!("{}: {e}", path.display())))
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = load_pipeline_config(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args, cli.seed),
        Command::Map(args) => cmd_map(args, &config),
        Command::Annotate(args) => cmd_annotate(args, &config),
        Command::Evaluate(args) => cmd_evaluate(args, &config, cli.seed),
        Command::Validate(args) => cmd_validate(args, &config),
    }
}

fn cmd_simulate(args: SimulateArgs, seed: Option<u64>) -> Result<(), CliError> {
    let mut cfg: ScenarioConfig = match (&args.preset, &args.scenario) {
        (Some(name), None) => preset(name).ok_or_else(|| {
            CliError::new(
                "unknown-preset",
                format!(
                    "unknown preset `{name}`; valid presets: {}",
                    preset_names().join(", ")
                ),
            )
        })?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::new("missing-file", format!("{}: {e}", path.display())))?;
            ScenarioConfig::from_toml(&text)?
        }
        _ => {
            return Err(CliError::new(
                "invalid-args",
                "exactly one of --preset or --scenario is required",
            ))
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }

    let (session, truth) = simulate_session(&cfg)?;
    let mut written = crate::session::write_session(&session, &args.out)?;
    let gt_path = args.out.join("ground_truth.csv");
    truth.write_csv(&gt_path)?;
    written.push(gt_path);

    if let Some(site_dir) = &args.site_out {
        std::fs::create_dir_all(site_dir)
            .map_err(|e| CliError::new("io-error", format!("{}: {e}", site_dir.display())))?;
        write_landmark_registry(&scenario_registry(&cfg), &site_dir.join("landmarks.csv"))?;
        write_control_points(
            &scenario_control_points(&cfg),
            &site_dir.join("control_points.csv"),
        )?;
    }

    let (t0, t1) = session.time_range().unwrap_or((0, 0));
    println!(
        "simulate: wrote {} files to {} ({} frames, {:.1} s, {} landmark obs, {} wifi entries, seed {})",
        written.len(),
        args.out.display(),
        session.camera_poses.len(),
        (t1 - t0) as f64 / 1e9,
        session.landmark_obs.len(),
        session.wifi.len(),
        cfg.seed
    );
    Ok(())
}

fn strategies_from_flag(flag: &str) -> Result<Vec<MappingStrategy>, CliError> {
    if flag == "all" {
        return Ok(vec![
            MappingStrategy::Global,
            MappingStrategy::Local,
            MappingStrategy::LocalCorrected,
        ]);
    }
    flag.parse::<MappingStrategy>()
        .map(|s| vec![s])
        .map_err(|e| CliError::new("invalid-args", e))
}

fn cmd_map(args: MapArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let floor = args
        .floor
        .or_else(|| config.floor_id.clone())
        .unwrap_or_else(|| DEFAULT_FLOOR.into());
    let device = args
        .device
        .or_else(|| config.device_id.clone())
        .unwrap_or_else(|| DEFAULT_DEVICE.into());

    let (session, report) = parse_session(&args.session_dir, &floor, &device)?;
    if !report.bad_rows.is_empty() {
        log::warn!(
            "{} malformed rows ignored while parsing",
            report.bad_rows.len()
        );
    }
    let registry = read_landmark_registry(&args.landmarks, &floor)?;

    let mut local_cfg = config.local_mapper.clone();
    if let Some(v) = args.proximity_threshold_m {
        local_cfg.proximity_threshold_m = v;
    }
    if let Some(v) = args.jump_threshold_m {
        local_cfg.jump_threshold_m = v;
    }
    if let Some(v) = args.identity_eps_m {
        local_cfg.identity_eps_m = v;
    }
    if let Some(v) = args.min_run_frames {
        local_cfg.min_run_frames = v;
    }
    if let Some(v) = args.merge_window_s {
        local_cfg.merge_window_s = v;
    }

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new("io-error", format!("{}: {e}", args.out.display())))?;

    for strategy in strategies_from_flag(&args.strategy)? {
        let traj = match strategy {
            MappingStrategy::Global => map_global(&session, &registry)?,
            MappingStrategy::Local => {
                let cfg = LocalMapperConfig {
                    correction_enabled: false,
                    ..local_cfg.clone()
                };
                map_local(&session, &registry, &cfg)?
            }
            MappingStrategy::LocalCorrected => {
                let cfg = LocalMapperConfig {
                    correction_enabled: true,
                    ..local_cfg.clone()
                };
                map_local(&session, &registry, &cfg)?
            }
        };
        let path = args
            .out
            .join(format!("trajectory_{}.csv", strategy.label()));
        traj.write_csv(&path)?;
        let fit = traj
            .fit_rms_m
            .map(|r| format!(", fit rms {r:.3} m"))
            .unwrap_or_default();
        println!(
            "map[{}]: {} samples over segments: {}{} -> {}",
            strategy,
            traj.samples.len(),
            traj.segment_summary(),
            fit,
            path.display()
        );
    }
    Ok(())
}

fn strategy_from_stem(path: &Path) -> MappingStrategy {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("trajectory_"))
        .and_then(|s| s.parse().ok())
        .unwrap_or(MappingStrategy::Local)
}

fn trajectory_label(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.strip_prefix("trajectory_").unwrap_or(s).to_string())
        .unwrap_or_else(|| "trajectory".into())
}

fn cmd_annotate(args: AnnotateArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let floor = args
        .floor
        .or_else(|| config.floor_id.clone())
        .unwrap_or_else(|| DEFAULT_FLOOR.into());
    let device = args
        .device
        .or_else(|| config.device_id.clone())
        .unwrap_or_else(|| DEFAULT_DEVICE.into());

    let (session, _) = parse_session(&args.session_dir, &floor, &device)?;
    let traj = MappedTrajectory::read_csv(
        &args.trajectory,
        &floor,
        strategy_from_stem(&args.trajectory),
    )?;

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new("io-error", format!("{}: {e}", args.out.display())))?;

    let annotated = annotate_sensors(&traj, &session.sensors, &floor, &device, &config.annotator);
    let fingerprints = build_fingerprints(&traj, &session.wifi, &floor, &device, &config.annotator);

    write_labeled_sensors_csv(&annotated, &args.out.join("labeled_sensors.csv"))?;
    write_fingerprints_csv(
        &fingerprints.fingerprints,
        &args.out.join("fingerprints.csv"),
    )?;

    println!(
        "annotate: {} sensor records labeled ({} dropped); {} fingerprints ({} entries dropped, {} scans dropped) -> {}",
        annotated.records.len(),
        annotated.dropped,
        fingerprints.fingerprints.len(),
        fingerprints.dropped_entries,
        fingerprints.dropped_scans,
        args.out.display()
    );
    Ok(())
}

fn cmd_evaluate(
    args: EvaluateArgs,
    config: &PipelineConfig,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let floor = args
        .floor
        .or_else(|| config.floor_id.clone())
        .unwrap_or_else(|| DEFAULT_FLOOR.into());

    let wants_knn = args.fingerprints.is_some();
    if args.trajectory.is_empty() && !wants_knn {
        return Err(CliError::new(
            "invalid-args",
            "nothing to evaluate: pass --trajectory and/or --fingerprints",
        ));
    }

    let truth = match &args.ground_truth {
        Some(path) => Some(GroundTruth::read_csv(path)?),
        None => None,
    };

    let mut rows: Vec<(String, ErrorStats, usize)> = Vec::new();
    let mut trajectories: Vec<(String, MappedTrajectory)> = Vec::new();
    for path in &args.trajectory {
        let label = trajectory_label(path);
        let traj = MappedTrajectory::read_csv(path, &floor, strategy_from_stem(path))?;
        trajectories.push((label, traj));
    }

    if let Some(truth) = &truth {
        for (label, traj) in &trajectories {
            let stats = trajectory_error(traj, truth)?;
            rows.push((label.clone(), stats, 0));
        }
    }

    if let Some(cp_path) = &args.control_points {
        let session_dir = args.session_dir.as_ref().ok_or_else(|| {
            CliError::new(
                "invalid-args",
                "--control-points needs --session-dir for the button-press events",
            )
        })?;
        let points = read_control_points(cp_path, &floor)?;
        let (session, _) = parse_session(session_dir, &floor, DEFAULT_DEVICE)?;
        for (label, traj) in &trajectories {
            let cp = control_point_errors(traj, &session.events, &points)?;
            rows.push((format!("{label}_cp"), cp.stats, cp.skipped));
        }
    }

    if !args.trajectory.is_empty() && truth.is_none() && args.control_points.is_none() {
        return Err(CliError::new(
            "invalid-args",
            "--trajectory needs --ground-truth and/or --control-points",
        ));
    }

    let mut out_text = String::new();
    if !rows.is_empty() {
        print!("{}", metrics_table(&rows));
        out_text.push_str(&metrics_csv(&rows));
    }

    if let Some(fp_path) = &args.fingerprints {
        let fingerprints = read_fingerprints_csv(fp_path)?;
        let (train, test) =
            split_fingerprints(&fingerprints, args.test_fraction, seed.unwrap_or(0));
        let knn_cfg = KnnConfig {
            k: args.k,
            ..config.knn.clone()
        };
        let result = knn_localize(&train, &test, &knn_cfg)?;
        println!(
            "knn(k={}): floor_acc {:.3}, mean error {:.2} m, median error {:.2} m over {} test scans ({} train)",
            args.k,
            result.floor_accuracy,
            result.stats.mean_m,
            result.stats.median_m,
            test.len(),
            train.len()
        );
        out_text.push_str(&format!(
            "model,floor_acc,mean_error_m,median_error_m,count\nknn_k{},{:.4},{:.4},{:.4},{}\n",
            args.k,
            result.floor_accuracy,
            result.stats.mean_m,
            result.stats.median_m,
            result.stats.count
        ));
    }

    if let Some(out) = &args.out {
        write_atomic(out, out_text.as_bytes())
            .map_err(|e| CliError::new("io-error", format!("{}: {e}", out.display())))?;
        println!("evaluate: metrics written to {}", out.display());
    }

    if let Some(plot) = &args.plot_data {
        let mut text = String::from("source,t_ns,x,y\n");
        for (label, traj) in &trajectories {
            for s in &traj.samples {
                text.push_str(&format!(
                    "{label},{},{},{}\n",
                    s.t_ns, s.position.x, s.position.y
                ));
            }
        }
        if let Some(truth) = &truth {
            for (t, p) in &truth.samples {
                text.push_str(&format!("ground_truth,{t},{},{}\n", p.x, p.y));
            }
        }
        write_atomic(plot, text.as_bytes())
            .map_err(|e| CliError::new("io-error", format!("{}: {e}", plot.display())))?;
        println!("evaluate: plot data written to {}", plot.display());
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs, config: &PipelineConfig) -> Result<(), CliError> {
    let floor = args
        .floor
        .or_else(|| config.floor_id.clone())
        .unwrap_or_else(|| DEFAULT_FLOOR.into());
    let device = args
        .device
        .or_else(|| config.device_id.clone())
        .unwrap_or_else(|| DEFAULT_DEVICE.into());

    let (session, report) = parse_session(&args.session_dir, &floor, &device)?;
    if !report.bad_rows.is_empty() {
        println!("parse: {} malformed rows ignored", report.bad_rows.len());
        for row in report.bad_rows.iter().take(10) {
            println!("  {} line {}: {}", row.file, row.line, row.reason);
        }
    }
    let validation = validate_session(&session);
    print!("{validation}");
    if validation.is_clean() {
        Ok(())
    } else {
        Err(CliError::new(
            "validation-failed",
            format!("{} invariant violation(s)", validation.violations.len()),
        ))
    }
}

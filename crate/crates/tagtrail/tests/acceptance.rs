//! Acceptance suite: every release criterion as one test that prints a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see them). Tolerances are pinned here, not tuned at runtime.

use std::time::Instant;
use tagtrail::annotate::{build_fingerprints, AnnotatorConfig};
use tagtrail::evaluate::{
    control_point_errors, knn_localize, split_fingerprints, trajectory_error, KnnConfig,
};
use tagtrail::geometry::{
    angle_distance, estimate_similarity_ls, estimate_similarity_two_point, PointCorrespondences,
    SimilarityTransform2D, Vec2,
};
use tagtrail::mapping::{
    detect_failures, map_global, map_local, LocalMapperConfig, MappedTrajectory, SegmentRecord,
};
use tagtrail::simulate::{
    acs_update_scenario, preset, scenario_control_points, scenario_registry, simulate_session,
    Fault, ScenarioConfig,
};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, detail: &str) {
    println!(
        "criterion {criterion:2} {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

fn uncorrected() -> LocalMapperConfig {
    LocalMapperConfig {
        correction_enabled: false,
        ..Default::default()
    }
}

fn map_three(
    session: &tagtrail::Session,
    registry: &tagtrail::LandmarkRegistry,
) -> (MappedTrajectory, MappedTrajectory, MappedTrajectory) {
    (
        map_global(session, registry).expect("global maps"),
        map_local(session, registry, &uncorrected()).expect("local maps"),
        map_local(session, registry, &LocalMapperConfig::default()).expect("corrected maps"),
    )
}

/// Spearman rank correlation (no tie handling; inputs are distinct).
fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
        let mut out = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            out[i] = rank as f64;
        }
        out
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = rx.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (a, b) in rx.iter().zip(ry.iter()) {
        cov += (a - mean) * (b - mean);
        var_x += (a - mean) * (a - mean);
        var_y += (b - mean) * (b - mean);
    }
    cov / (var_x.sqrt() * var_y.sqrt())
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull by monotone chain; collinear inputs
/// collapse to their extent segment.
fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| (*a - *b).norm() < 1e-15);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vec2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Vec2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Convex-hull membership with tolerance; degenerate point sets fall back
/// to distance checks.
fn in_convex_hull(p: Vec2, points: &[Vec2], tol: f64) -> bool {
    let hull = convex_hull(points);
    match hull.len() {
        0 => false,
        1 => (p - hull[0]).norm() <= tol,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            let ab = b - a;
            let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
            (p - (a + t * ab)).norm() <= tol
        }
        _ => (0..hull.len()).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            cross(a, b, p) >= -tol * (b - a).norm()
        }),
    }
}

fn random_transform(rng: &mut ChaCha8Rng) -> SimilarityTransform2D {
    SimilarityTransform2D::new(
        rng.random_range(0.2..5.0),
        rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        Vec2::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)),
    )
}

fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec2> {
    (0..n)
        .map(|_| Vec2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
        .collect()
}

/// Criterion 1: least-squares similarity estimation recovers randomly drawn
/// generating transforms exactly (1e-9) over 100 seeded sets, in under 1 s.
#[test]
fn criterion_01_least_squares_exactness() {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut cases = Vec::new();
    for _ in 0..100 {
        let n = rng.random_range(2..=50);
        let truth = random_transform(&mut rng);
        let src = random_points(&mut rng, n);
        // Coincident sources would make the problem ill-posed by design.
        if n == 2 && (src[1] - src[0]).norm() < 1e-3 {
            continue;
        }
        let dst: Vec<Vec2> = src.iter().map(|p| truth.apply(*p)).collect();
        cases.push((truth, src, dst));
    }

    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (truth, src, dst) in &cases {
        let corr = PointCorrespondences::new(src.clone(), dst.clone()).unwrap();
        let fit = estimate_similarity_ls(&corr).unwrap();
        worst = worst
            .max((fit.scale - truth.scale).abs())
            .max(angle_distance(fit.rotation, truth.rotation))
            .max((fit.translation - truth.translation).norm());
    }
    let elapsed = start.elapsed();

    let ok = worst <= TOL && elapsed.as_secs_f64() < 1.0;
    report(
        1,
        ok,
        &format!(
            "least-squares exactness: worst parameter error {worst:.2e} (tol {TOL:.0e}), {} fits in {:.3} s",
            cases.len(),
            elapsed.as_secs_f64()
        ),
    );
    assert!(ok);
}

/// Criterion 2: the exact two-point transform agrees with the least-squares
/// fit restricted to the same two correspondences, to 1e-9, 100 seeded cases.
#[test]
fn criterion_02_two_point_consistency() {
    const TOL: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let pts = random_points(&mut rng, 4);
        let (sa, sb, da, db) = (pts[0], pts[1], pts[2], pts[3]);
        if (sb - sa).norm() < 1e-3 || (db - da).norm() < 1e-3 {
            continue;
        }
        count += 1;
        let two = estimate_similarity_two_point(sa, sb, da, db).unwrap();
        let ls =
            estimate_similarity_ls(&PointCorrespondences::new(vec![sa, sb], vec![da, db]).unwrap())
                .unwrap();
        worst = worst
            .max((two.scale - ls.scale).abs())
            .max(angle_distance(two.rotation, ls.rotation))
            .max((two.translation - ls.translation).norm());
        // Anchors must be reproduced exactly as well.
        worst = worst
            .max((two.apply(sa) - da).norm())
            .max((two.apply(sb) - db).norm());
    }
    let ok = worst <= TOL;
    report(
        2,
        ok,
        &format!("two-point vs least-squares: worst deviation {worst:.2e} (tol {TOL:.0e})"),
    );
    assert!(ok);
}

/// Criterion 3: on the clean short walk both strategies stay within 0.10 m
/// mean error at default noise, and within 1e-6 m noiseless.
#[test]
fn criterion_03_clean_session_closure() {
    let cfg = preset("clean_short").unwrap();
    assert_eq!(cfg.odometry_noise_sigma_m, 0.005);
    assert_eq!(cfg.landmark_obs_noise_sigma_m, 0.02);

    let mut noisy = cfg.clone();
    noisy.seed = 31;
    let (session, truth) = simulate_session(&noisy).unwrap();
    let registry = scenario_registry(&noisy);
    let (g, l, lc) = map_three(&session, &registry);
    let mean_g = trajectory_error(&g, &truth).unwrap().mean_m;
    let mean_l = trajectory_error(&l, &truth).unwrap().mean_m;
    let mean_lc = trajectory_error(&lc, &truth).unwrap().mean_m;

    let mut clean = cfg.clone();
    clean.odometry_noise_sigma_m = 0.0;
    clean.landmark_obs_noise_sigma_m = 0.0;
    let (session0, truth0) = simulate_session(&clean).unwrap();
    let (g0, l0, _) = map_three(&session0, &registry);
    let mean_g0 = trajectory_error(&g0, &truth0).unwrap().mean_m;
    let mean_l0 = trajectory_error(&l0, &truth0).unwrap().mean_m;

    let ok =
        mean_g <= 0.10 && mean_l <= 0.10 && mean_lc <= 0.10 && mean_g0 <= 1e-6 && mean_l0 <= 1e-6;
    report(
        3,
        ok,
        &format!(
            "clean closure: noisy means global {mean_g:.3} / local {mean_l:.3} / corrected {mean_lc:.3} m (<= 0.10); noiseless {mean_g0:.1e} / {mean_l0:.1e} m (<= 1e-6)"
        ),
    );
    assert!(ok);
}

/// Criterion 4: over 20 seeds with a 2 m mid-walk update, control-point
/// error ordering corrected < local < global with global >= 0.5 m, in < 30 s.
#[test]
fn criterion_04_strategy_ordering_under_updates() {
    let start = Instant::now();
    let mut sum = [0.0_f64; 3]; // corrected, local, global
    const SEEDS: u64 = 20;
    for seed in 0..SEEDS {
        let mut cfg = preset("acs_update_2m").unwrap();
        cfg.seed = seed;
        let (session, _) = simulate_session(&cfg).unwrap();
        let registry = scenario_registry(&cfg);
        let points = scenario_control_points(&cfg);
        let (g, l, lc) = map_three(&session, &registry);
        sum[0] += control_point_errors(&lc, &session.events, &points)
            .unwrap()
            .stats
            .mean_m;
        sum[1] += control_point_errors(&l, &session.events, &points)
            .unwrap()
            .stats
            .mean_m;
        sum[2] += control_point_errors(&g, &session.events, &points)
            .unwrap()
            .stats
            .mean_m;
    }
    let [corrected, local, global] = sum.map(|s| s / SEEDS as f64);
    let elapsed = start.elapsed().as_secs_f64();

    let ok = corrected < local && local < global && global >= 0.5 && elapsed < 30.0;
    report(
        4,
        ok,
        &format!(
            "update ordering over {SEEDS} seeds: corrected {corrected:.3} < local {local:.3} < global {global:.3} m, global >= 0.5, {elapsed:.1} s (< 30)"
        ),
    );
    assert!(ok);
}

/// Criterion 5: global-strategy mean error grows with injected update
/// magnitude {0, 0.5, 1, 2, 4} m; rank correlation > 0.9 over 10 seeds.
#[test]
fn criterion_05_update_magnitude_trend() {
    const MAGNITUDES: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 4.0];
    const SEEDS: u64 = 10;
    let mut means = Vec::with_capacity(MAGNITUDES.len());
    for magnitude in MAGNITUDES {
        let mut acc = 0.0;
        for seed in 0..SEEDS {
            let mut cfg = acs_update_scenario(magnitude);
            cfg.seed = 1000 + seed;
            let (session, truth) = simulate_session(&cfg).unwrap();
            let registry = scenario_registry(&cfg);
            let global = map_global(&session, &registry).unwrap();
            acc += trajectory_error(&global, &truth).unwrap().mean_m;
        }
        means.push(acc / SEEDS as f64);
    }
    let rho = spearman(&MAGNITUDES, &means);
    let ok = rho > 0.9;
    report(
        5,
        ok,
        &format!(
            "magnitude trend: means {:?} m, spearman {rho:.3} (> 0.9)",
            means
                .iter()
                .map(|m| (m * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

fn fault_instants(cfg: &ScenarioConfig) -> (Vec<f64>, Vec<(f64, f64)>) {
    let mut jumps = Vec::new();
    let mut losses = Vec::new();
    for fault in &cfg.faults {
        match fault {
            Fault::Jump { t_s, .. } => jumps.push(*t_s),
            Fault::TrackingLoss { start_s, end_s, .. } => losses.push((*start_s, *end_s)),
        }
    }
    losses.sort_by(|a, b| a.0.total_cmp(&b.0));
    losses.dedup();
    (jumps, losses)
}

fn segment_overlaps_fault(seg: &SegmentRecord, jumps: &[f64], losses: &[(f64, f64)]) -> bool {
    let (s, e) = (seg.start_t_ns as f64 / 1e9, seg.end_t_ns as f64 / 1e9);
    let frame = 1.0 / 30.0;
    jumps.iter().any(|t| s - frame <= *t && *t <= e + frame)
        || losses.iter().any(|(a, b)| s < *b && *a < e)
}

/// Criterion 6: all injected jumps and tracking losses are detected, every
/// sample the corrected strategy emits comes from a fault-free segment, and
/// on the running scenario max(corrected) < max(uncorrected).
#[test]
fn criterion_06_failure_recall_and_purity() {
    let frame_s = 1.0 / 30.0;
    let mut detected_faults = 0usize;
    let mut injected_faults = 0usize;
    let mut impure_samples = 0usize;

    let scenarios: Vec<(String, u64)> = (0..10)
        .map(|s| ("jump".to_string(), 40 + s))
        .chain((0..10).map(|s| ("tracking_loss".to_string(), 60 + s)))
        .collect();
    for (name, seed) in &scenarios {
        let mut cfg = preset(name).unwrap();
        cfg.seed = *seed;
        let (session, _) = simulate_session(&cfg).unwrap();
        let defaults = LocalMapperConfig::default();
        let found = detect_failures(
            &session,
            defaults.jump_threshold_m,
            defaults.identity_eps_m,
            defaults.min_run_frames,
        );

        for fault in &cfg.faults {
            injected_faults += 1;
            let hit = match fault {
                Fault::Jump { t_s, offset_m } => found.jumps.iter().any(|j| {
                    let t = j.t_ns as f64 / 1e9;
                    (t - t_s).abs() <= 2.0 * frame_s
                        && (j.displacement_m - Vec2::new(offset_m[0], offset_m[1]).norm()).abs()
                            <= 0.3
                }),
                Fault::TrackingLoss {
                    start_s,
                    end_s,
                    landmark_id,
                } => found.tracking_loss.iter().any(|iv| {
                    if &iv.landmark_id != landmark_id {
                        return false;
                    }
                    let a = iv.start_t_ns as f64 / 1e9;
                    let b = iv.end_t_ns as f64 / 1e9;
                    let overlap = (b.min(*end_s) - a.max(*start_s)).max(0.0);
                    overlap >= 0.9 * (end_s - start_s)
                }),
            };
            if hit {
                detected_faults += 1;
            }
        }

        let registry = scenario_registry(&cfg);
        let corrected = map_local(&session, &registry, &LocalMapperConfig::default()).unwrap();
        let (jumps, losses) = fault_instants(&cfg);
        for sample in &corrected.samples {
            if segment_overlaps_fault(&corrected.segments[sample.segment], &jumps, &losses) {
                impure_samples += 1;
            }
        }
    }

    let mut running = preset("running").unwrap();
    running.seed = 99;
    let (session, truth) = simulate_session(&running).unwrap();
    let registry = scenario_registry(&running);
    let local = map_local(&session, &registry, &uncorrected()).unwrap();
    let corrected = map_local(&session, &registry, &LocalMapperConfig::default()).unwrap();
    let max_local = trajectory_error(&local, &truth).unwrap().max_m;
    let max_corrected = trajectory_error(&corrected, &truth).unwrap().max_m;

    let ok = detected_faults == injected_faults && impure_samples == 0 && max_corrected < max_local;
    report(
        6,
        ok,
        &format!(
            "failure recall {detected_faults}/{injected_faults}, {impure_samples} samples from faulty segments, running max corrected {max_corrected:.2} < uncorrected {max_local:.2} m"
        ),
    );
    assert!(ok);
}

/// Criterion 7: the 15-minute walk keeps mean labeling error <= 0.15 m with
/// no drift blow-up (final-minute error <= 2x first-minute error).
#[test]
fn criterion_07_long_walk_stability() {
    let mut cfg = preset("long_walk").unwrap();
    cfg.seed = 77;
    let (session, truth) = simulate_session(&cfg).unwrap();
    let registry = scenario_registry(&cfg);
    let (global, _, corrected) = map_three(&session, &registry);

    let minute_mean = |traj: &MappedTrajectory, from_s: f64, to_s: f64| {
        let errors: Vec<f64> = truth
            .samples
            .iter()
            .filter(|(t, _)| {
                let s = *t as f64 / 1e9;
                s >= from_s && s < to_s
            })
            .filter_map(|(t, p)| traj.pose_at(*t).map(|m| (m - p).norm()))
            .collect();
        errors.iter().sum::<f64>() / errors.len() as f64
    };

    let mut ok = true;
    let mut detail = String::from("long walk:");
    for (name, traj) in [("global", &global), ("corrected", &corrected)] {
        let mean = trajectory_error(traj, &truth).unwrap().mean_m;
        let first = minute_mean(traj, 0.0, 60.0);
        let last = minute_mean(traj, 840.0, 900.0);
        ok &= mean <= 0.15 && last <= 2.0 * first;
        detail.push_str(&format!(
            " {name} mean {mean:.3} m (<= 0.15), first-minute {first:.3} vs final-minute {last:.3} (<= 2x);"
        ));
    }
    report(7, ok, &detail);
    assert!(ok);
}

/// Criterion 8: fingerprint labels deviate from true scan means by at most
/// the mapping error plus one frame of motion, and always lie inside the
/// convex hull of their entry positions.
#[test]
fn criterion_08_annotation_correctness() {
    let mut ok = true;
    let mut detail = String::from("annotation:");
    for (name, seed) in [("clean_short", 8u64), ("jump", 9u64)] {
        let mut cfg = preset(name).unwrap();
        cfg.seed = seed;
        let (session, truth) = simulate_session(&cfg).unwrap();
        let registry = scenario_registry(&cfg);
        let corrected = map_local(&session, &registry, &LocalMapperConfig::default()).unwrap();

        // Max labeling error at ground-truth timestamps bounds the error at
        // any interpolated timestamp between the same samples.
        let mapping_max = truth
            .samples
            .iter()
            .filter_map(|(t, p)| corrected.pose_at(*t).map(|m| (m - p).norm()))
            .fold(0.0_f64, f64::max);
        let bound = mapping_max + cfg.speed_mps / cfg.frame_rate_hz + 1e-6;

        let set = build_fingerprints(
            &corrected,
            &session.wifi,
            &cfg.floor_id,
            &cfg.device_id,
            &AnnotatorConfig::default(),
        );
        assert!(!set.fingerprints.is_empty());

        let mut worst: f64 = 0.0;
        let mut hull_violations = 0usize;
        for fp in &set.fingerprints {
            let true_positions: Vec<Vec2> = fp
                .entries
                .iter()
                .filter_map(|e| truth.position_at(e.t_ns))
                .collect();
            if true_positions.len() == fp.entries.len() {
                let true_mean = true_positions.iter().sum::<Vec2>() / true_positions.len() as f64;
                worst = worst.max((fp.label - true_mean).norm());
            }
            let entry_positions: Vec<Vec2> = fp.entries.iter().map(|e| e.position).collect();
            if !in_convex_hull(fp.label, &entry_positions, 1e-9) {
                hull_violations += 1;
            }
        }
        ok &= worst <= bound && hull_violations == 0;
        detail.push_str(&format!(
            " {name}: worst label deviation {worst:.3} m (bound {bound:.3}), {hull_violations} hull violations over {} scans;",
            set.fingerprints.len()
        ));
    }
    report(8, ok, &detail);
    assert!(ok);
}

/// Criterion 9: kNN over a simulated radio map (8 APs, 4 dB shadowing,
/// 70/30 split, k=5) localizes to <= 3 m median, and k=1 on train==test is
/// exact.
#[test]
fn criterion_09_knn_baseline() {
    let mut cfg = preset("long_walk").unwrap();
    cfg.wifi.shadowing_sigma_db = 4.0;
    cfg.seed = 91;
    assert_eq!(cfg.wifi.ap_positions.len(), 8);
    let (session, _) = simulate_session(&cfg).unwrap();
    let registry = scenario_registry(&cfg);
    let corrected = map_local(&session, &registry, &LocalMapperConfig::default()).unwrap();
    let set = build_fingerprints(
        &corrected,
        &session.wifi,
        &cfg.floor_id,
        &cfg.device_id,
        &AnnotatorConfig::default(),
    );

    let (train, test) = split_fingerprints(&set.fingerprints, 0.3, 7);
    let k5 = knn_localize(
        &train,
        &test,
        &KnnConfig {
            k: 5,
            ..Default::default()
        },
    )
    .unwrap();

    let exact = knn_localize(
        &set.fingerprints,
        &set.fingerprints,
        &KnnConfig {
            k: 1,
            ..Default::default()
        },
    )
    .unwrap();

    let ok = k5.stats.median_m <= 3.0
        && k5.floor_accuracy == 1.0
        && exact.stats.max_m <= 1e-9
        && exact.floor_accuracy == 1.0;
    report(
        9,
        ok,
        &format!(
            "knn: median {:.2} m (<= 3) over {} test scans, floor acc {:.3}; train==test k=1 max error {:.1e}",
            k5.stats.median_m,
            test.len(),
            k5.floor_accuracy,
            exact.stats.max_m
        ),
    );
    assert!(ok);
}

/// Criterion 10: parse(write(session)) is the identity on every preset, and
/// the full CLI pipeline is byte-identical across two fixed-seed runs.
#[test]
fn criterion_10_round_trip_and_determinism() {
    // Serialization round trip over all preset fixtures.
    let mut round_trip_ok = true;
    for (name, mut cfg) in tagtrail::simulate::preset_scenarios() {
        cfg.seed = 123;
        let (session, _) = simulate_session(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        tagtrail::session::write_session(&session, dir.path()).unwrap();
        let (parsed, report) =
            tagtrail::session::parse_session(dir.path(), &cfg.floor_id, &cfg.device_id).unwrap();
        if parsed != session || !report.bad_rows.is_empty() {
            round_trip_ok = false;
            println!("round trip failed for preset {name}");
        }
    }

    // End-to-end pipeline, twice, byte-compared.
    let run_pipeline = |root: &std::path::Path| {
        let dir = |name: &str| root.join(name).display().to_string();
        let steps: Vec<Vec<String>> = vec![
            vec![
                "tagtrail".into(),
                "simulate".into(),
                "--preset".into(),
                "acs_update_2m".into(),
                "--seed".into(),
                "7".into(),
                "--out".into(),
                dir("session"),
                "--site-out".into(),
                dir("session"),
            ],
            vec![
                "tagtrail".into(),
                "map".into(),
                dir("session"),
                "--landmarks".into(),
                format!("{}/landmarks.csv", dir("session")),
                "--strategy".into(),
                "all".into(),
                "--out".into(),
                dir("mapped"),
            ],
            vec![
                "tagtrail".into(),
                "annotate".into(),
                dir("session"),
                "--trajectory".into(),
                format!("{}/trajectory_local_corrected.csv", dir("mapped")),
                "--out".into(),
                dir("labeled"),
            ],
            vec![
                "tagtrail".into(),
                "evaluate".into(),
                "--trajectory".into(),
                format!("{}/trajectory_local_corrected.csv", dir("mapped")),
                "--trajectory".into(),
                format!("{}/trajectory_global.csv", dir("mapped")),
                "--ground-truth".into(),
                format!("{}/ground_truth.csv", dir("session")),
                "--control-points".into(),
                format!("{}/control_points.csv", dir("session")),
                "--session-dir".into(),
                dir("session"),
                "--fingerprints".into(),
                format!("{}/fingerprints.csv", dir("labeled")),
                "--seed".into(),
                "7".into(),
                "--out".into(),
                format!("{}/metrics.csv", dir("report")),
                "--plot-data".into(),
                format!("{}/plot.csv", dir("report")),
            ],
        ];
        std::fs::create_dir_all(root.join("report")).unwrap();
        for step in steps {
            let code = tagtrail::cli::run_from(step.clone());
            assert_eq!(code, 0, "pipeline step failed: {step:?}");
        }
    };

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_pipeline(dir_a.path());
    run_pipeline(dir_b.path());

    let mut files_compared = 0usize;
    let mut determinism_ok = true;
    for sub in ["session", "mapped", "labeled", "report"] {
        let mut names: Vec<String> = std::fs::read_dir(dir_a.path().join(sub))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        for name in names {
            let a = std::fs::read(dir_a.path().join(sub).join(&name)).unwrap();
            let b = std::fs::read(dir_b.path().join(sub).join(&name)).unwrap();
            if a != b {
                determinism_ok = false;
                println!("{sub}/{name} differs between runs");
            }
            files_compared += 1;
        }
    }

    let ok = round_trip_ok && determinism_ok && files_compared >= 12;
    report(
        10,
        ok,
        &format!(
            "round trip over {} presets; pipeline determinism over {files_compared} files",
            tagtrail::simulate::preset_names().len()
        ),
    );
    assert!(ok);
}

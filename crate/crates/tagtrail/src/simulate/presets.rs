//! Named scenarios on a rectangular corridor loop (28 m x 12 m, 80 m per
//! lap): a short walk, a long walk, coordinate-system updates of graded
//! magnitude, tracking loss, a pose jump, and a running collector.

use super::{AcsUpdate, Fault, ScenarioConfig, SiteLandmark};
use crate::geometry::{SimilarityTransform2D, Vec2};

const RECT_W: f64 = 28.0;
const RECT_H: f64 = 12.0;

/// Counter-clockwise loop from the origin, cut to exactly `total_len` meters.
fn loop_waypoints(total_len: f64) -> Vec<Vec2> {
    let corners = [
        Vec2::new(0.0, 0.0),
        Vec2::new(RECT_W, 0.0),
        Vec2::new(RECT_W, RECT_H),
        Vec2::new(0.0, RECT_H),
    ];
    let mut points = vec![corners[0]];
    let mut remaining = total_len;
    let mut idx = 0usize;
    while remaining > 1e-9 {
        let from = corners[idx % 4];
        let to = corners[(idx + 1) % 4];
        let leg = (to - from).norm();
        if remaining >= leg {
            points.push(to);
            remaining -= leg;
            idx += 1;
        } else {
            points.push(from + (to - from) * (remaining / leg));
            remaining = 0.0;
        }
    }
    points
}

/// Eight wall-mounted landmarks, offset ~0.5 m outward from the loop: one
/// past each corner and one at each edge midpoint.
fn site_landmarks() -> Vec<SiteLandmark> {
    let positions = [
        ("L1", Vec2::new(-0.35, -0.35)),
        ("L2", Vec2::new(RECT_W / 2.0, -0.5)),
        ("L3", Vec2::new(RECT_W + 0.35, -0.35)),
        ("L4", Vec2::new(RECT_W + 0.5, RECT_H / 2.0)),
        ("L5", Vec2::new(RECT_W + 0.35, RECT_H + 0.35)),
        ("L6", Vec2::new(RECT_W / 2.0, RECT_H + 0.5)),
        ("L7", Vec2::new(-0.35, RECT_H + 0.35)),
        ("L8", Vec2::new(-0.5, RECT_H / 2.0)),
    ];
    positions
        .into_iter()
        .map(|(id, position)| SiteLandmark {
            id: id.to_string(),
            position,
        })
        .collect()
}

/// Six surveyed control points placed directly on the walked loop.
fn site_control_points() -> Vec<Vec2> {
    vec![
        Vec2::new(7.0, 0.0),
        Vec2::new(21.0, 0.0),
        Vec2::new(RECT_W, RECT_H / 2.0),
        Vec2::new(21.0, RECT_H),
        Vec2::new(7.0, RECT_H),
        Vec2::new(0.0, RECT_H / 2.0),
    ]
}

fn ap_positions() -> Vec<Vec2> {
    vec![
        Vec2::new(4.0, 3.0),
        Vec2::new(14.0, 1.5),
        Vec2::new(24.0, 3.0),
        Vec2::new(26.5, 9.0),
        Vec2::new(14.0, 10.5),
        Vec2::new(1.5, 9.0),
        Vec2::new(9.0, 6.0),
        Vec2::new(19.0, 6.0),
    ]
}

/// Base walk on the loop; the local frame starts rotated 30 degrees and
/// shifted (5, 5) so the mapping has real work to do.
fn base_scenario(walk_len_m: f64) -> ScenarioConfig {
    ScenarioConfig {
        waypoints: loop_waypoints(walk_len_m),
        initial_acs: SimilarityTransform2D::new(1.0, 30.0_f64.to_radians(), Vec2::new(5.0, 5.0)),
        landmarks: site_landmarks(),
        control_points: site_control_points(),
        wifi: super::WifiSimConfig {
            ap_positions: ap_positions(),
            ..Default::default()
        },
        ..Default::default()
    }
}

/// A walk with one mid-session coordinate-system update of the given
/// translation magnitude (0 gives the clean walk).
pub fn acs_update_scenario(magnitude_m: f64) -> ScenarioConfig {
    let mut cfg = base_scenario(180.0);
    if magnitude_m > 0.0 {
        let component = magnitude_m / std::f64::consts::SQRT_2;
        cfg.acs_updates = vec![AcsUpdate {
            t_s: 90.0,
            delta: SimilarityTransform2D::new(1.0, 0.0, Vec2::new(component, component)),
        }];
    }
    cfg
}

/// All built-in scenarios, in presentation order, with seed 0.
pub fn preset_scenarios() -> Vec<(&'static str, ScenarioConfig)> {
    let tracking_loss = {
        let mut cfg = base_scenario(180.0);
        // The tracker loses every landmark for 4 s on the second lap.
        cfg.faults = site_landmarks()
            .into_iter()
            .map(|lm| Fault::TrackingLoss {
                start_s: 140.0,
                end_s: 144.0,
                landmark_id: lm.id,
            })
            .collect();
        cfg
    };
    let jump = {
        let mut cfg = base_scenario(180.0);
        cfg.faults = vec![Fault::Jump {
            t_s: 100.0,
            offset_m: [7.5, -6.0],
        }];
        cfg
    };
    let running = {
        let mut cfg = base_scenario(180.0);
        cfg.speed_mps = 3.0;
        cfg.faults = vec![Fault::Jump {
            t_s: 30.0,
            offset_m: [7.5, -6.0],
        }];
        cfg
    };
    vec![
        ("clean_short", base_scenario(180.0)),
        ("long_walk", base_scenario(900.0)),
        ("acs_update_0.5m", acs_update_scenario(0.5)),
        ("acs_update_1m", acs_update_scenario(1.0)),
        ("acs_update_2m", acs_update_scenario(2.0)),
        ("acs_update_4m", acs_update_scenario(4.0)),
        ("tracking_loss", tracking_loss),
        ("jump", jump),
        ("running", running),
    ]
}

pub fn preset_names() -> Vec<&'static str> {
    preset_scenarios().into_iter().map(|(n, _)| n).collect()
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    preset_scenarios()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, cfg)| cfg)
}

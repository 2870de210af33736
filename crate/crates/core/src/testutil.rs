use crate::trackdata::{Camera, Point, Scenario, Track, TrackPoint};

pub(crate) fn track(id: &str, cam: &str, pts: &[(i64, f64, f64)], snaps: Vec<Vec<f64>>) -> Track {
    Track {
        id: id.to_string(),
        camera: cam.to_string(),
        points: pts.iter().map(|&(t, x, y)| TrackPoint { t, x, y }).collect(),
        snapshots: snaps,
    }
}

pub(crate) fn track_pts(id: &str, cam: &str, pts: &[(i64, f64, f64)]) -> Track {
    track(id, cam, pts, vec![vec![1.0, 0.0]])
}

pub(crate) fn track_with_snapshots(id: &str, cam: &str, snaps: Vec<Vec<f64>>) -> Track {
    track(id, cam, &[(0, 0.0, 0.0), (1, 1.0, 0.0)], snaps)
}

/// Two-point track spanning `t0..=t0 + 10` with the single snapshot `[f, 1]`.
pub(crate) fn track_at(id: &str, cam: &str, t0: i64, f: f64) -> Track {
    track(id, cam, &[(t0, 0.0, 0.0), (t0 + 10, 1.0, 0.0)], vec![vec![f, 1.0]])
}

pub(crate) fn scenario_with_gates(
    gates_a: Vec<Point>,
    gates_b: Vec<Point>,
    tracks_a: Vec<Track>,
    tracks_b: Vec<Track>,
) -> Scenario {
    Scenario {
        camera_a: Camera { id: "a".into(), gates: gates_a },
        camera_b: Camera { id: "b".into(), gates: gates_b },
        tracks_a,
        tracks_b,
        topology: None,
        ground_truth: None,
    }
}

pub(crate) fn scenario_from(tracks_a: Vec<Track>, tracks_b: Vec<Track>) -> Scenario {
    scenario_with_gates(vec![[0.0, 0.0]], vec![[0.0, 0.0]], tracks_a, tracks_b)
}

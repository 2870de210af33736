//! Cameras, gates, tracks and cross-camera match hypotheses.
//!
//! A [`Scenario`] holds two camera views, the tracks observed in each, an
//! optional topology placing both cameras in one common plane, and optional
//! ground truth. Scenario files are JSON; see [`ScenarioFile`] for the schema.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 2-D point in camera-local (or common-plane) scene units.
pub type Point = [f64; 2];

pub(crate) fn dist(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackPoint {
    /// Frame index.
    pub t: i64,
    pub x: f64,
    pub y: f64,
}

impl TrackPoint {
    pub fn pos(&self) -> Point {
        [self.x, self.y]
    }
}

/// One person's observation in one camera.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: String,
    pub camera: String,
    pub points: Vec<TrackPoint>,
    /// Appearance snapshots, opaque feature vectors of uniform dimension.
    pub snapshots: Vec<Vec<f64>>,
}

impl Track {
    pub fn entry_time(&self) -> i64 {
        self.points[0].t
    }

    pub fn exit_time(&self) -> i64 {
        self.points[self.points.len() - 1].t
    }

    pub fn entry_point(&self) -> Point {
        self.points[0].pos()
    }

    pub fn exit_point(&self) -> Point {
        self.points[self.points.len() - 1].pos()
    }

    /// Displacement per frame over the first step, `None` for single-point tracks.
    pub fn entry_speed(&self) -> Option<f64> {
        let p = &self.points;
        (p.len() >= 2).then(|| step_speed(&p[0], &p[1]))
    }

    /// Displacement per frame over the last step, `None` for single-point tracks.
    pub fn exit_speed(&self) -> Option<f64> {
        let p = &self.points;
        let n = p.len();
        (n >= 2).then(|| step_speed(&p[n - 2], &p[n - 1]))
    }

    pub fn feature_dim(&self) -> usize {
        self.snapshots.first().map_or(0, Vec::len)
    }
}

fn step_speed(from: &TrackPoint, to: &TrackPoint) -> f64 {
    dist(from.pos(), to.pos()) / (to.t - from.t) as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct Camera {
    pub id: String,
    pub gates: Vec<Point>,
}

/// Linear map plus translation taking camera-local coordinates into the
/// common plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub matrix: [[f64; 2]; 2],
    pub translation: [f64; 2],
}

impl AffineMap {
    pub fn identity() -> Self {
        AffineMap {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
            translation: [0.0, 0.0],
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let m = &self.matrix;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + self.translation[0],
            m[1][0] * p[0] + m[1][1] * p[1] + self.translation[1],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.matrix;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub a: AffineMap,
    pub b: AffineMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub camera_a: Camera,
    pub camera_b: Camera,
    pub tracks_a: Vec<Track>,
    pub tracks_b: Vec<Track>,
    pub topology: Option<Topology>,
    /// `(i_a, j_b)` index pairs of true matches.
    pub ground_truth: Option<Vec<(usize, usize)>>,
}

/// Candidate match between track `i_a` in camera a and track `j_b` in camera b.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
pub struct Hypothesis {
    pub i_a: usize,
    pub j_b: usize,
}

impl Hypothesis {
    pub fn new(i_a: usize, j_b: usize) -> Self {
        Hypothesis { i_a, j_b }
    }

    /// Two hypotheses conflict when they share a person in either camera.
    pub fn conflicts(&self, other: &Hypothesis) -> bool {
        self.i_a == other.i_a || self.j_b == other.j_b
    }
}

/// Index of the gate nearest to `p`; ties go to the lowest index.
pub fn nearest_gate(camera: &Camera, p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (u, g) in camera.gates.iter().enumerate() {
        let d = (g[0] - p[0]).powi(2) + (g[1] - p[1]).powi(2);
        if d < best_d {
            best = u;
            best_d = d;
        }
    }
    best
}

/// Every `(i_a, j_b)` with `0 <= entry(j_b) - exit(i_a) <= tau`, in
/// lexicographic order.
pub fn candidate_matches(s: &Scenario, tau: i64) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    for (i, ta) in s.tracks_a.iter().enumerate() {
        let exit = ta.exit_time();
        for (j, tb) in s.tracks_b.iter().enumerate() {
            let gap = tb.entry_time() - exit;
            if (0..=tau).contains(&gap) {
                out.push(Hypothesis::new(i, j));
            }
        }
    }
    out
}

impl Scenario {
    pub fn feature_dim(&self) -> usize {
        self.tracks_a
            .iter()
            .chain(&self.tracks_b)
            .map(Track::feature_dim)
            .next()
            .unwrap_or(0)
    }

    /// Entry-minus-exit frame gap of a hypothesis.
    pub fn gap(&self, m: Hypothesis) -> i64 {
        self.tracks_b[m.j_b].entry_time() - self.tracks_a[m.i_a].exit_time()
    }

    pub fn exit_gate(&self, i_a: usize) -> usize {
        nearest_gate(&self.camera_a, self.tracks_a[i_a].exit_point())
    }

    pub fn entry_gate(&self, j_b: usize) -> usize {
        nearest_gate(&self.camera_b, self.tracks_b[j_b].entry_point())
    }

    /// Checks every structural invariant; errors name the offending track.
    pub fn validate(&self) -> Result<()> {
        for cam in [&self.camera_a, &self.camera_b] {
            if cam.gates.is_empty() {
                return Err(Error::InvalidScenario(format!(
                    "camera `{}` has no gates",
                    cam.id
                )));
            }
            for (u, g) in cam.gates.iter().enumerate() {
                if !(g[0].is_finite() && g[1].is_finite()) {
                    return Err(Error::InvalidScenario(format!(
                        "camera `{}` gate {u} is not finite",
                        cam.id
                    )));
                }
                if cam.gates[..u].contains(g) {
                    return Err(Error::InvalidScenario(format!(
                        "camera `{}` gate {u} duplicates an earlier anchor",
                        cam.id
                    )));
                }
            }
        }
        if self.camera_a.id == self.camera_b.id {
            return Err(Error::InvalidScenario(
                "the two cameras share an id".to_string(),
            ));
        }

        let dim = self.feature_dim();
        let mut ids = HashSet::new();
        for (cam, tracks) in [
            (&self.camera_a, &self.tracks_a),
            (&self.camera_b, &self.tracks_b),
        ] {
            for t in tracks.iter() {
                if !ids.insert(t.id.as_str()) {
                    return Err(Error::track(&t.id, "duplicate track id"));
                }
                validate_track(t, &cam.id, dim)?;
            }
        }

        if let Some(topo) = &self.topology {
            for (name, map) in [("a", &topo.a), ("b", &topo.b)] {
                let det = map.determinant();
                if !det.is_finite() || det.abs() < 1e-12 {
                    return Err(Error::InvalidScenario(format!(
                        "topology map for camera {name} is not invertible"
                    )));
                }
            }
        }

        if let Some(gt) = &self.ground_truth {
            let mut seen_a = HashSet::new();
            let mut seen_b = HashSet::new();
            for &(i, j) in gt {
                if i >= self.tracks_a.len() || j >= self.tracks_b.len() {
                    return Err(Error::InvalidScenario(format!(
                        "ground-truth pair ({i}, {j}) out of range"
                    )));
                }
                if !seen_a.insert(i) || !seen_b.insert(j) {
                    return Err(Error::InvalidScenario(format!(
                        "ground truth is not one-to-one at ({}, {})",
                        self.tracks_a[i].id, self.tracks_b[j].id
                    )));
                }
            }
        }
        Ok(())
    }
}

fn validate_track(t: &Track, camera: &str, dim: usize) -> Result<()> {
    if t.camera != camera {
        return Err(Error::track(
            &t.id,
            format!("listed under camera `{camera}` but tagged `{}`", t.camera),
        ));
    }
    if t.points.is_empty() {
        return Err(Error::track(&t.id, "no points"));
    }
    for w in t.points.windows(2) {
        if w[1].t <= w[0].t {
            return Err(Error::track(
                &t.id,
                format!("timestamps not strictly increasing ({} then {})", w[0].t, w[1].t),
            ));
        }
    }
    if t.points.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::track(&t.id, "non-finite coordinate"));
    }
    if t.snapshots.is_empty() {
        return Err(Error::track(&t.id, "no appearance snapshots"));
    }
    for s in &t.snapshots {
        if s.len() != dim {
            return Err(Error::track(
                &t.id,
                format!("snapshot dimension {} differs from scenario dimension {dim}", s.len()),
            ));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::track(&t.id, "non-finite feature value"));
        }
    }
    Ok(())
}

// On-disk layout.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Exactly two cameras; the first is camera a, the second camera b.
    pub cameras: Vec<CameraRecord>,
    pub tracks: Vec<TrackRecord>,
    /// Per-camera maps into the common plane, keyed by camera id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<BTreeMap<String, AffineMap>>,
    /// `[track id in a, track id in b]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<(String, String)>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub id: String,
    pub gates: Vec<Point>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRecord {
    pub id: String,
    pub camera: String,
    /// `[t, x, y]` triples.
    pub points: Vec<(i64, f64, f64)>,
    pub snapshots: Vec<Vec<f64>>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let cameras = [&s.camera_a, &s.camera_b]
            .into_iter()
            .map(|c| CameraRecord {
                id: c.id.clone(),
                gates: c.gates.clone(),
            })
            .collect();
        let tracks = s
            .tracks_a
            .iter()
            .chain(&s.tracks_b)
            .map(|t| TrackRecord {
                id: t.id.clone(),
                camera: t.camera.clone(),
                points: t.points.iter().map(|p| (p.t, p.x, p.y)).collect(),
                snapshots: t.snapshots.clone(),
            })
            .collect();
        let topology = s.topology.map(|topo| {
            BTreeMap::from([
                (s.camera_a.id.clone(), topo.a),
                (s.camera_b.id.clone(), topo.b),
            ])
        });
        let ground_truth = s.ground_truth.as_ref().map(|gt| {
            gt.iter()
                .map(|&(i, j)| (s.tracks_a[i].id.clone(), s.tracks_b[j].id.clone()))
                .collect()
        });
        ScenarioFile {
            cameras,
            tracks,
            topology,
            ground_truth,
        }
    }
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let [ca, cb]: [CameraRecord; 2] = f.cameras.try_into().map_err(|v: Vec<_>| {
            Error::InvalidScenario(format!("expected exactly 2 cameras, found {}", v.len()))
        })?;
        let camera_a = Camera {
            id: ca.id,
            gates: ca.gates,
        };
        let camera_b = Camera {
            id: cb.id,
            gates: cb.gates,
        };

        let mut tracks_a = Vec::new();
        let mut tracks_b = Vec::new();
        for r in f.tracks {
            let track = Track {
                points: r
                    .points
                    .iter()
                    .map(|&(t, x, y)| TrackPoint { t, x, y })
                    .collect(),
                id: r.id,
                camera: r.camera,
                snapshots: r.snapshots,
            };
            if track.camera == camera_a.id {
                tracks_a.push(track);
            } else if track.camera == camera_b.id {
                tracks_b.push(track);
            } else {
                return Err(Error::track(
                    &track.id,
                    format!("unknown camera `{}`", track.camera),
                ));
            }
        }

        let topology = match f.topology {
            None => None,
            Some(mut maps) => {
                let mut take = |id: &str| {
                    maps.remove(id).ok_or_else(|| {
                        Error::InvalidScenario(format!("topology lacks camera `{id}`"))
                    })
                };
                let a = take(&camera_a.id)?;
                let b = take(&camera_b.id)?;
                if let Some(extra) = maps.keys().next() {
                    return Err(Error::InvalidScenario(format!(
                        "topology names unknown camera `{extra}`"
                    )));
                }
                Some(Topology { a, b })
            }
        };

        let ground_truth = match f.ground_truth {
            None => None,
            Some(pairs) => {
                let index_a: HashMap<&str, usize> = tracks_a
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.id.as_str(), i))
                    .collect();
                let index_b: HashMap<&str, usize> = tracks_b
                    .iter()
                    .enumerate()
                    .map(|(j, t)| (t.id.as_str(), j))
                    .collect();
                let mut gt = Vec::with_capacity(pairs.len());
                for (ida, idb) in &pairs {
                    let i = *index_a.get(ida.as_str()).ok_or_else(|| {
                        Error::InvalidScenario(format!(
                            "ground truth names unknown track `{ida}` in camera a"
                        ))
                    })?;
                    let j = *index_b.get(idb.as_str()).ok_or_else(|| {
                        Error::InvalidScenario(format!(
                            "ground truth names unknown track `{idb}` in camera b"
                        ))
                    })?;
                    gt.push((i, j));
                }
                Some(gt)
            }
        };

        let s = Scenario {
            camera_a,
            camera_b,
            tracks_a,
            tracks_b,
            topology,
            ground_truth,
        };
        s.validate()?;
        Ok(s)
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    Scenario::try_from(file)
}

pub fn scenario_to_json(s: &Scenario) -> String {
    serde_json::to_string(&ScenarioFile::from(s)).expect("scenario serializes")
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario(&text)
}

pub fn save_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, scenario_to_json(s)).map_err(|e| Error::io(path, e))
}

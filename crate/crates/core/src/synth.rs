//! Synthetic two-camera scenarios with planted ground truth.
//!
//! Both cameras are 100 x 60 rectangles with gates spread along the border.
//! A few gates on camera a's right edge face camera b's left edge; everyone
//! who crosses leaves a through one of them and enters b through one of
//! b's facing gates, chosen by a planted destination matrix, after a travel
//! time drawn from a planted per-gate-pair Gaussian mixture. Walks are
//! piecewise linear through a random waypoint at a per-person speed.
//!
//! Appearance: every snapshot is a shared mean, plus a per-camera shift,
//! plus the person's latent (a cluster center shared with look-alikes and
//! a small individual offset), plus isotropic noise.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trackdata::{
    scenario_to_json, AffineMap, Camera, Point, Scenario, Topology, Track, TrackPoint,
};
use crate::transitions::Gaussian;

pub const CAMERA_WIDTH: f64 = 100.0;
pub const CAMERA_HEIGHT: f64 = 60.0;
/// Camera b's local units per common-plane unit.
pub const CAMERA_B_SCALE: f64 = 1.2;
/// Width of the unobserved strip between the cameras, common-plane units.
pub const INVISIBLE_GAP: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_people: usize,
    /// Gates per camera.
    pub gates: usize,
    /// Planted destination matrix, gates x gates; defaults to a concentrated
    /// matrix over the facing gates.
    pub dest: Option<Vec<Vec<f64>>>,
    /// Planted travel-time mixture per gate pair, gates x gates.
    pub travel: Option<Vec<Vec<Vec<Gaussian>>>>,
    /// Share of crossing people who walk in pairs.
    pub group_fraction: f64,
    pub speed_mean: f64,
    pub speed_sd: f64,
    pub feature_dim: usize,
    /// Per-coordinate standard deviation of snapshot noise.
    pub feature_noise: f64,
    /// Norm of the mean shared by all snapshots.
    pub common_norm: f64,
    /// Norm of each camera's shift.
    pub camera_shift: f64,
    /// Norm of appearance cluster centers.
    pub cluster_norm: f64,
    /// Norm of a person's offset from its cluster center.
    pub identity_spread: f64,
    /// People per appearance cluster, on average.
    pub cluster_size: usize,
    pub snapshots: usize,
    /// Share of people seen in only one camera, split evenly.
    pub unmatched_fraction: f64,
    /// People entering camera a per frame.
    pub arrival_rate: f64,
    pub position_noise: f64,
    /// Attach the common-plane topology to the scenario.
    pub topology: bool,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_people: 100,
            gates: 11,
            dest: None,
            travel: None,
            group_fraction: 0.0,
            speed_mean: 1.3,
            speed_sd: 0.2,
            feature_dim: 32,
            feature_noise: 0.5,
            common_norm: 10.0,
            camera_shift: 1.0,
            cluster_norm: 3.0,
            identity_spread: 1.5,
            cluster_size: 5,
            snapshots: 8,
            unmatched_fraction: 0.1,
            arrival_rate: 0.1,
            position_noise: 0.02,
            topology: false,
        }
    }
}

/// Planted structure behind a generated scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub dest: Vec<Vec<f64>>,
    pub travel: Vec<Vec<Vec<Gaussian>>>,
    /// Gate indices on camera a's right edge.
    pub facing_a: Vec<usize>,
    /// Gate indices on camera b's left edge.
    pub facing_b: Vec<usize>,
    /// True matches by track id.
    pub matches: Vec<(String, String)>,
    /// Camera-a track ids of people walking together.
    pub groups: Vec<(String, String)>,
    pub topology: Topology,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub scenario: Scenario,
    pub truth: SynthTruth,
}

/// Gate positions for one camera and which of them lie on the given
/// vertical edge (`x = 0` or `x = CAMERA_WIDTH`).
pub fn gate_layout(u: usize, facing_x: f64) -> (Vec<Point>, Vec<usize>) {
    let n_face = u.div_ceil(4).min(u - 1);
    let rest = u - n_face;
    let mut gates = Vec::with_capacity(u);
    let mut facing = Vec::with_capacity(n_face);
    for k in 0..n_face {
        facing.push(gates.len());
        let y = CAMERA_HEIGHT * (k as f64 + 0.5) / n_face as f64;
        gates.push([facing_x, y]);
    }
    // The remaining gates go round the other three edges at even spacing.
    let other_x = CAMERA_WIDTH - facing_x;
    let perimeter = 2.0 * CAMERA_WIDTH + CAMERA_HEIGHT;
    for k in 0..rest {
        let mut s = perimeter * (k as f64 + 0.5) / rest as f64;
        let p = if s < CAMERA_WIDTH {
            [if facing_x == 0.0 { s } else { CAMERA_WIDTH - s }, 0.0]
        } else {
            s -= CAMERA_WIDTH;
            if s < CAMERA_HEIGHT {
                [other_x, s]
            } else {
                s -= CAMERA_HEIGHT;
                [if facing_x == 0.0 { CAMERA_WIDTH - s } else { s }, CAMERA_HEIGHT]
            }
        };
        gates.push(p);
    }
    (gates, facing)
}

/// Default planted destinations: facing exit gate `r` goes to facing entry
/// gate `r` with probability 0.75 and to the next facing gate otherwise.
/// Rows of gates nobody exits through are uniform.
pub fn default_dest(u: usize, facing_a: &[usize], facing_b: &[usize]) -> Vec<Vec<f64>> {
    let mut dest = vec![vec![1.0 / u as f64; u]; u];
    let n = facing_b.len();
    for (r, &ga) in facing_a.iter().enumerate() {
        let row = &mut dest[ga];
        row.iter_mut().for_each(|p| *p = 0.0);
        if n == 1 {
            row[facing_b[0]] = 1.0;
        } else {
            row[facing_b[r % n]] += 0.75;
            row[facing_b[(r + 1) % n]] += 0.25;
        }
    }
    dest
}

/// Default planted travel times: two modes 35 frames apart.
pub fn default_travel(u: usize) -> Vec<Vec<Vec<Gaussian>>> {
    (0..u)
        .map(|a| {
            (0..u)
                .map(|b| {
                    let base = 30.0 + 6.0 * (a as f64 - b as f64).abs() + 4.0 * ((a + b) % 3) as f64;
                    vec![
                        Gaussian { weight: 0.6, mean: base, variance: 9.0 },
                        Gaussian { weight: 0.4, mean: base + 35.0, variance: 16.0 },
                    ]
                })
                .collect()
        })
        .collect()
}

/// Camera a is the common plane; camera b sits to its right across the gap,
/// with its local units `CAMERA_B_SCALE` times finer.
pub fn synth_topology() -> Topology {
    let s = 1.0 / CAMERA_B_SCALE;
    Topology {
        a: AffineMap::identity(),
        b: AffineMap {
            matrix: [[s, 0.0], [0.0, s]],
            translation: [
                CAMERA_WIDTH + INVISIBLE_GAP,
                0.5 * CAMERA_HEIGHT * (1.0 - s),
            ],
        },
    }
}

fn validate(c: &SynthConfig) -> Result<()> {
    let bad = |m: String| Err(Error::Config(m));
    if c.n_people == 0 {
        return bad("n_people must be at least 1".into());
    }
    if c.gates < 2 {
        return bad("need at least 2 gates per camera".into());
    }
    for (name, v) in [
        ("group_fraction", c.group_fraction),
        ("unmatched_fraction", c.unmatched_fraction),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return bad(format!("{name} must lie in [0, 1], got {v}"));
        }
    }
    if c.feature_dim == 0 || c.snapshots == 0 {
        return bad("feature_dim and snapshots must be positive".into());
    }
    if !(c.speed_mean > 0.0) || !(c.speed_sd >= 0.0) || !(c.arrival_rate > 0.0) {
        return bad("speed_mean and arrival_rate must be positive, speed_sd non-negative".into());
    }
    if c.cluster_size == 0 {
        return bad("cluster_size must be positive".into());
    }
    for v in [c.feature_noise, c.common_norm, c.camera_shift, c.cluster_norm, c.identity_spread, c.position_noise] {
        if !(v >= 0.0) || !v.is_finite() {
            return bad("norms and noise levels must be finite and non-negative".into());
        }
    }
    if let Some(d) = &c.dest {
        if d.len() != c.gates || d.iter().any(|r| r.len() != c.gates) {
            return bad(format!("dest must be {0} x {0}", c.gates));
        }
        for (i, row) in d.iter().enumerate() {
            if row.iter().any(|p| !(*p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return bad(format!("dest row {i} is not a probability distribution"));
            }
        }
    }
    if let Some(t) = &c.travel {
        if t.len() != c.gates || t.iter().any(|r| r.len() != c.gates) {
            return bad(format!("travel must be {0} x {0}", c.gates));
        }
        for (i, row) in t.iter().enumerate() {
            for (j, mix) in row.iter().enumerate() {
                let w: f64 = mix.iter().map(|g| g.weight).sum();
                if mix.is_empty()
                    || (w - 1.0).abs() > 1e-9
                    || mix.iter().any(|g| !(g.variance > 0.0) || !(g.weight >= 0.0))
                {
                    return bad(format!("travel mixture ({i}, {j}) is invalid"));
                }
            }
        }
    }
    Ok(())
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Vec<f64> {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let v: Vec<f64> = (0..dim).map(|_| n.sample(rng)).collect();
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    v.into_iter().map(|x| x * norm / len).collect()
}

fn draw_index(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut target = rng.random::<f64>() * probs.iter().sum::<f64>();
    for (k, p) in probs.iter().enumerate() {
        if target < *p {
            return k;
        }
        target -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn draw_mixture(rng: &mut ChaCha8Rng, mix: &[Gaussian]) -> f64 {
    let weights: Vec<f64> = mix.iter().map(|g| g.weight).collect();
    let g = mix[draw_index(rng, &weights)];
    Normal::new(g.mean, g.variance.sqrt()).expect("positive variance").sample(rng)
}

fn random_waypoint(rng: &mut ChaCha8Rng) -> Point {
    [
        rng.random_range(0.2..0.8) * CAMERA_WIDTH,
        rng.random_range(0.2..0.8) * CAMERA_HEIGHT,
    ]
}

fn polyline_at(poly: &[Point], mut s: f64) -> Point {
    for w in poly.windows(2) {
        let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        if s <= seg || seg == 0.0 {
            let f = if seg > 0.0 { (s / seg).min(1.0) } else { 0.0 };
            return [w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])];
        }
        s -= seg;
    }
    *poly.last().expect("non-empty polyline")
}

fn polyline_len(poly: &[Point]) -> f64 {
    poly.windows(2).map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1])).sum()
}

/// Frame-by-frame walk along `poly` at `speed`. With `end_anchor` the last
/// point sits exactly at the end of the polyline at frame `t_anchor`,
/// otherwise the first point sits at the start at `t_anchor`. Every step
/// has length `speed` along the polyline.
fn walk(poly: &[Point], speed: f64, t_anchor: i64, end_anchor: bool, offset: Point) -> Vec<(i64, Point)> {
    let len = polyline_len(poly);
    let n = ((len / speed).floor() as i64).max(1);
    (0..=n)
        .map(|f| {
            let (t, s) = if end_anchor {
                (t_anchor - (n - f), (len - (n - f) as f64 * speed).max(0.0))
            } else {
                (t_anchor + f, (f as f64 * speed).min(len))
            };
            let p = polyline_at(poly, s);
            (t, [p[0] + offset[0], p[1] + offset[1]])
        })
        .collect()
}

struct Person {
    speed: f64,
    latent: Vec<f64>,
    /// Camera-a walk: spawn gate, waypoint, exit gate, and exit frame.
    a: Option<(Vec<Point>, i64)>,
    /// Camera-b walk and entry frame.
    b: Option<(Vec<Point>, i64)>,
    offset: Point,
}

/// Generates a scenario and its planted truth; a pure function of `c`.
pub fn generate_scenario(c: &SynthConfig) -> Result<SynthOutput> {
    validate(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let u = c.gates;
    let (gates_a, facing_a) = gate_layout(u, CAMERA_WIDTH);
    let (gates_b, facing_b) = gate_layout(u, 0.0);
    let inner_a: Vec<usize> = (0..u).filter(|g| !facing_a.contains(g)).collect();
    let inner_b: Vec<usize> = (0..u).filter(|g| !facing_b.contains(g)).collect();
    let dest = c.dest.clone().unwrap_or_else(|| default_dest(u, &facing_a, &facing_b));
    let travel = c.travel.clone().unwrap_or_else(|| default_travel(u));

    let dim = c.feature_dim;
    let mean = random_vector(&mut rng, dim, c.common_norm);
    let shift_a = random_vector(&mut rng, dim, c.camera_shift);
    let shift_b = random_vector(&mut rng, dim, c.camera_shift);
    let n_clusters = c.n_people.div_ceil(c.cluster_size);
    let centers: Vec<Vec<f64>> = (0..n_clusters)
        .map(|_| random_vector(&mut rng, dim, c.cluster_norm))
        .collect();

    // Roles: crossing, camera a only, camera b only.
    let n_unmatched = (c.unmatched_fraction * c.n_people as f64).round() as usize;
    let n_a_only = n_unmatched / 2;
    let n_cross = c.n_people - n_unmatched;
    let mut order: Vec<usize> = (0..c.n_people).collect();
    order.shuffle(&mut rng);
    let n_grouped = ((c.group_fraction * n_cross as f64).round() as usize / 2) * 2;

    let horizon = c.n_people as f64 / c.arrival_rate;
    let speed_law = Normal::new(c.speed_mean, c.speed_sd).expect("valid speed law");
    let noise = Normal::new(0.0, c.feature_noise.max(0.0)).expect("valid noise");
    let pos_noise = Normal::new(0.0, c.position_noise).expect("valid noise");

    let mut people: Vec<Person> = Vec::with_capacity(c.n_people);
    let mut groups_idx: Vec<(usize, usize)> = Vec::new();
    let facing_probs: Vec<f64> = (0..u)
        .map(|g| facing_a.iter().map(|&ga| dest[ga][g]).sum::<f64>())
        .collect();
    let mut k = 0;
    while k < c.n_people {
        let pid = order[k];
        let latent: Vec<f64> = centers[pid % n_clusters]
            .iter()
            .zip(random_vector(&mut rng, dim, c.identity_spread))
            .map(|(a, b)| a + b)
            .collect();
        let speed = speed_law.sample(&mut rng).max(0.3);
        let crossing = k < n_cross;
        let a_only = !crossing && k < n_cross + n_a_only;
        let mut person = Person {
            speed,
            latent,
            a: None,
            b: None,
            offset: [0.0, 0.0],
        };
        let spawn = rng.random::<f64>() * horizon;
        if crossing || a_only {
            let start = gates_a[inner_a[rng.random_range(0..inner_a.len())]];
            let ga = facing_a[rng.random_range(0..facing_a.len())];
            let poly = vec![start, random_waypoint(&mut rng), gates_a[ga]];
            let exit = spawn.round() as i64 + (polyline_len(&poly) / speed).floor().max(1.0) as i64;
            person.a = Some((poly, exit));
            if crossing {
                let gb = draw_index(&mut rng, &dest[ga]);
                let dt = draw_mixture(&mut rng, &travel[ga][gb]).round().max(1.0) as i64;
                let end = gates_b[inner_b[rng.random_range(0..inner_b.len())]];
                person.b = Some((vec![gates_b[gb], random_waypoint(&mut rng), end], exit + dt));
            }
        } else {
            let gb = draw_index(&mut rng, &facing_probs);
            let end = gates_b[inner_b[rng.random_range(0..inner_b.len())]];
            person.b = Some((vec![gates_b[gb], random_waypoint(&mut rng), end], spawn.round() as i64));
        }
        people.push(person);

        // The next person in a group copies this walk with small offsets.
        if crossing && k < n_grouped && k % 2 == 0 && k + 1 < n_grouped {
            let lead = people.len() - 1;
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            let r = rng.random_range(0.5..1.5);
            let dx = rng.random_range(0..=2i64);
            let de = rng.random_range(0..=2i64);
            let follower_latent: Vec<f64> = centers[order[k + 1] % n_clusters]
                .iter()
                .zip(random_vector(&mut rng, dim, c.identity_spread))
                .map(|(a, b)| a + b)
                .collect();
            let leader = &people[lead];
            let (pa, ea) = leader.a.clone().expect("crossing person has an a walk");
            let (pb, eb) = leader.b.clone().expect("crossing person has a b walk");
            people.push(Person {
                speed: leader.speed,
                latent: follower_latent,
                a: Some((pa, ea + dx)),
                b: Some((pb, eb + de)),
                offset: [r * angle.cos(), r * angle.sin()],
            });
            groups_idx.push((lead, lead + 1));
            k += 2;
        } else {
            k += 1;
        }
    }

    let snapshot = |rng: &mut ChaCha8Rng, latent: &[f64], shift: &[f64]| -> Vec<Vec<f64>> {
        (0..c.snapshots)
            .map(|_| {
                (0..dim)
                    .map(|d| mean[d] + shift[d] + latent[d] + noise.sample(rng))
                    .collect()
            })
            .collect()
    };
    let jitter = |rng: &mut ChaCha8Rng, p: Point| -> Point {
        [p[0] + pos_noise.sample(rng), p[1] + pos_noise.sample(rng)]
    };

    // (person index, track) per camera, before sorting.
    let mut raw_a: Vec<(usize, Track)> = Vec::new();
    let mut raw_b: Vec<(usize, Track)> = Vec::new();
    for (idx, p) in people.iter().enumerate() {
        if let Some((poly, exit)) = &p.a {
            let pts = walk(poly, p.speed, *exit, true, p.offset);
            let points = pts
                .into_iter()
                .map(|(t, q)| {
                    let q = jitter(&mut rng, q);
                    TrackPoint { t, x: q[0], y: q[1] }
                })
                .collect();
            let snapshots = snapshot(&mut rng, &p.latent, &shift_a);
            raw_a.push((idx, Track { id: String::new(), camera: "a".into(), points, snapshots }));
        }
        if let Some((poly, entry)) = &p.b {
            let off = [p.offset[0] * CAMERA_B_SCALE, p.offset[1] * CAMERA_B_SCALE];
            let pts = walk(poly, p.speed * CAMERA_B_SCALE, *entry, false, off);
            let points = pts
                .into_iter()
                .map(|(t, q)| {
                    let q = jitter(&mut rng, q);
                    TrackPoint { t, x: q[0], y: q[1] }
                })
                .collect();
            let snapshots = snapshot(&mut rng, &p.latent, &shift_b);
            raw_b.push((idx, Track { id: String::new(), camera: "b".into(), points, snapshots }));
        }
    }
    let key = |t: &Track| (t.entry_time(), t.exit_time());
    raw_a.sort_by(|x, y| key(&x.1).cmp(&key(&y.1)).then(x.0.cmp(&y.0)));
    raw_b.sort_by(|x, y| key(&x.1).cmp(&key(&y.1)).then(x.0.cmp(&y.0)));
    let mut slot_a = vec![None; people.len()];
    let mut slot_b = vec![None; people.len()];
    for (i, (p, t)) in raw_a.iter_mut().enumerate() {
        t.id = format!("a{i}");
        slot_a[*p] = Some(i);
    }
    for (j, (p, t)) in raw_b.iter_mut().enumerate() {
        t.id = format!("b{j}");
        slot_b[*p] = Some(j);
    }
    let mut ground_truth: Vec<(usize, usize)> = (0..people.len())
        .filter_map(|p| Some((slot_a[p]?, slot_b[p]?)))
        .collect();
    ground_truth.sort_unstable();
    let mut groups: Vec<(usize, usize)> = groups_idx
        .iter()
        .map(|&(x, y)| {
            let (i, j) = (slot_a[x].expect("grouped"), slot_a[y].expect("grouped"));
            (i.min(j), i.max(j))
        })
        .collect();
    groups.sort_unstable();

    let topology = synth_topology();
    let tracks_a: Vec<Track> = raw_a.into_iter().map(|x| x.1).collect();
    let tracks_b: Vec<Track> = raw_b.into_iter().map(|x| x.1).collect();
    let truth = SynthTruth {
        dest,
        travel,
        facing_a,
        facing_b,
        matches: ground_truth
            .iter()
            .map(|&(i, j)| (tracks_a[i].id.clone(), tracks_b[j].id.clone()))
            .collect(),
        groups: groups
            .iter()
            .map(|&(i, j)| (tracks_a[i].id.clone(), tracks_a[j].id.clone()))
            .collect(),
        topology: topology.clone(),
    };
    let scenario = Scenario {
        camera_a: Camera { id: "a".into(), gates: gates_a },
        camera_b: Camera { id: "b".into(), gates: gates_b },
        tracks_a,
        tracks_b,
        topology: c.topology.then_some(topology),
        ground_truth: Some(ground_truth),
    };
    scenario.validate()?;
    Ok(SynthOutput { scenario, truth })
}

/// Path of the truth file written next to `scenario`: `x.json` becomes
/// `x.truth.json`.
pub fn truth_path(scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    scenario.with_file_name(format!("{stem}.truth.json"))
}

/// Writes the scenario to `path` and the planted truth beside it.
pub fn save_output(out: &SynthOutput, path: &Path) -> Result<PathBuf> {
    fs::write(path, scenario_to_json(&out.scenario)).map_err(|e| Error::io(path, e))?;
    let tp = truth_path(path);
    let text = serde_json::to_string_pretty(&out.truth).expect("truth serializes") + "\n";
    fs::write(&tp, text).map_err(|e| Error::io(&tp, e))?;
    Ok(tp)
}

pub fn load_truth(path: &Path) -> Result<SynthTruth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appearance::appearance_similarity;
    use crate::evaluation::{cmc_linear, fscore};
    use crate::motioncosts::social_grouping_cost;
    use crate::objective::{assemble_cost_model, AssemblyOptions, ComponentModels, Weights};
    use crate::solvers::munkres_linear;
    use crate::trackdata::{candidate_matches, nearest_gate, Hypothesis};
    use crate::transitions::{estimate_destination_distribution, total_variation};

    #[test]
    fn layout_has_facing_gates_on_the_right_edge() {
        let (g, f) = gate_layout(11, CAMERA_WIDTH);
        assert_eq!(g.len(), 11);
        assert_eq!(f, vec![0, 1, 2]);
        assert!(f.iter().all(|&k| g[k][0] == CAMERA_WIDTH));
        assert!((0..11).filter(|k| !f.contains(k)).all(|k| g[k][0] < CAMERA_WIDTH));
    }

    #[test]
    fn same_seed_same_bytes() {
        let c = SynthConfig { n_people: 40, group_fraction: 0.3, seed: 5, ..Default::default() };
        let x = scenario_to_json(&generate_scenario(&c).unwrap().scenario);
        let y = scenario_to_json(&generate_scenario(&c).unwrap().scenario);
        assert_eq!(x, y);
        let z = scenario_to_json(&generate_scenario(&SynthConfig { seed: 6, ..c }).unwrap().scenario);
        assert_ne!(x, z);
    }

    #[test]
    fn truth_file_sits_beside_the_scenario() {
        let dir = tempfile::tempdir().unwrap();
        let out = generate_scenario(&SynthConfig { n_people: 10, ..Default::default() }).unwrap();
        let path = dir.path().join("demo.json");
        let tp = save_output(&out, &path).unwrap();
        assert_eq!(tp, dir.path().join("demo.truth.json"));
        assert_eq!(load_truth(&tp).unwrap(), out.truth);
        assert_eq!(crate::trackdata::load_scenario(&path).unwrap(), out.scenario);
    }

    #[test]
    fn invalid_configs_are_named() {
        let err = generate_scenario(&SynthConfig { n_people: 0, ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("n_people"));
        let err = generate_scenario(&SynthConfig { group_fraction: 1.5, ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("group_fraction"));
        let bad = vec![vec![0.5; 11]; 11];
        let err = generate_scenario(&SynthConfig { dest: Some(bad), ..Default::default() }).unwrap_err();
        assert!(err.to_string().contains("dest row 0"));
    }

    #[test]
    fn ground_truth_is_inside_the_window_and_gates_are_recoverable() {
        let out = generate_scenario(&SynthConfig { n_people: 120, group_fraction: 0.3, ..Default::default() }).unwrap();
        let s = &out.scenario;
        let cands = candidate_matches(s, 1000);
        for &(i, j) in s.ground_truth.as_ref().unwrap() {
            assert!(cands.contains(&Hypothesis::new(i, j)));
            assert!(out.truth.facing_a.contains(&nearest_gate(&s.camera_a, s.tracks_a[i].exit_point())));
            assert!(out.truth.facing_b.contains(&nearest_gate(&s.camera_b, s.tracks_b[j].entry_point())));
        }
    }

    #[test]
    fn empirical_destinations_follow_the_plant() {
        let out = generate_scenario(&SynthConfig { n_people: 2000, unmatched_fraction: 0.0, ..Default::default() }).unwrap();
        let s = &out.scenario;
        let gt: Vec<Hypothesis> = s.ground_truth.as_ref().unwrap().iter().map(|&(i, j)| Hypothesis::new(i, j)).collect();
        let learned = estimate_destination_distribution(&gt, s);
        for &g in &out.truth.facing_a {
            let tv = total_variation(&learned[g], &out.truth.dest[g]);
            assert!(tv <= 0.05, "row {g}: {tv}");
        }
    }

    #[test]
    fn grouped_pairs_clear_the_social_bound() {
        let out = generate_scenario(&SynthConfig { n_people: 80, group_fraction: 0.5, ..Default::default() }).unwrap();
        let s = &out.scenario;
        let gt = s.ground_truth.as_ref().unwrap();
        let idx = |id: &str| s.tracks_a.iter().position(|t| t.id == id).unwrap();
        assert!(!out.truth.groups.is_empty());
        for (x, y) in &out.truth.groups {
            let (i1, i2) = (idx(x), idx(y));
            let j1 = gt.iter().find(|p| p.0 == i1).unwrap().1;
            let j2 = gt.iter().find(|p| p.0 == i2).unwrap().1;
            let v = social_grouping_cost(Hypothesis::new(i1, j1), Hypothesis::new(i2, j2), s);
            assert!(v >= (-8.0f64).exp(), "{x},{y}: {v}");
        }
    }

    #[test]
    fn noiseless_appearance_is_perfectly_separable() {
        let c = SynthConfig {
            n_people: 60,
            group_fraction: 0.0,
            feature_noise: 0.0,
            unmatched_fraction: 0.0,
            ..Default::default()
        };
        let s = generate_scenario(&c).unwrap().scenario;
        let opts = AssemblyOptions {
            weights: Weights { app: 5.0, ..Weights::zero() },
            ..Default::default()
        };
        let cm = assemble_cost_model(&s, &ComponentModels::default(), &opts).unwrap();
        let z = munkres_linear(&cm);
        let f = fscore(&z.pairs(&cm), s.ground_truth.as_ref().unwrap());
        assert_eq!(f.fscore, 1.0, "{f:?}");
    }

    #[test]
    fn more_noise_means_worse_appearance_ranking() {
        let auc = |noise: f64| {
            let s = generate_scenario(&SynthConfig { n_people: 80, feature_noise: noise, seed: 2, ..Default::default() })
                .unwrap()
                .scenario;
            let hyps = candidate_matches(&s, 1000);
            let costs: Vec<f64> = hyps
                .iter()
                .map(|m| -appearance_similarity(&s.tracks_a[m.i_a], &s.tracks_b[m.j_b]).unwrap())
                .collect();
            cmc_linear(&hyps, &costs, s.ground_truth.as_ref().unwrap()).auc_50
        };
        let (lo, mid, hi) = (auc(0.2), auc(1.0), auc(3.0));
        assert!(lo > mid && mid > hi, "{lo} {mid} {hi}");
    }
}

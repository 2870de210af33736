//! The matching objective `L(z) = z'Qz + L'z` over binary hypothesis
//! indicators, its assembly from the individual cost terms, and the
//! normalized-Laplacian convexification used by Frank-Wolfe.
//!
//! Every raw term is passed through a calibrated logistic before weighting:
//! `w * (logistic(beta * (phi - center)) - 1/2)`. Linear terms are centered
//! on their median over the candidate set so a typical hypothesis costs
//! nothing and skipping a person stays meaningful; pairwise terms are
//! centered at zero so that absent interactions keep `Q` sparse.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appearance::{appearance_similarity, discriminative_cost, DiscriminativeModel};
use crate::error::{Error, Result};
use crate::motioncosts::{
    camera_speed_stats, logistic, social_grouping_cost, spatial_grouping_cost, speed_cost,
};
use crate::topology::{collision_cost, interpolate_path, invisible_speed_cost, InterpolatedPath};
use crate::trackdata::{candidate_matches, Hypothesis, Scenario};
use crate::transitions::{transition_cost, GateTransitionModel};

/// Raw pairwise values below this are treated as no interaction.
pub const PAIR_CUTOFF: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub app: f64,
    pub disc: f64,
    pub spd: f64,
    pub tr: f64,
    pub spt: f64,
    pub grp: f64,
    pub inv_coll: f64,
    pub inv_spd: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            app: 1.0,
            disc: 1.0,
            spd: 5.0,
            tr: 1.0,
            spt: 0.2,
            grp: -5.0,
            inv_coll: 0.2,
            inv_spd: 5.0,
        }
    }
}

impl Weights {
    pub fn zero() -> Self {
        Weights {
            app: 0.0,
            disc: 0.0,
            spd: 0.0,
            tr: 0.0,
            spt: 0.0,
            grp: 0.0,
            inv_coll: 0.0,
            inv_spd: 0.0,
        }
    }

    /// Only the single-hypothesis terms.
    pub fn linear_only(self) -> Self {
        Weights {
            spt: 0.0,
            grp: 0.0,
            inv_coll: 0.0,
            ..self
        }
    }

    pub fn get(&self, term: Term) -> f64 {
        match term {
            Term::App => self.app,
            Term::Disc => self.disc,
            Term::Spd => self.spd,
            Term::Tr => self.tr,
            Term::InvSpd => self.inv_spd,
            Term::Spt => self.spt,
            Term::Grp => self.grp,
            Term::InvColl => self.inv_coll,
        }
    }

    pub fn is_finite(&self) -> bool {
        Term::ALL.iter().all(|&t| self.get(t).is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    App,
    Disc,
    Spd,
    Tr,
    InvSpd,
    Spt,
    Grp,
    InvColl,
}

impl Term {
    pub const ALL: [Term; 8] = [
        Term::App,
        Term::Disc,
        Term::Spd,
        Term::Tr,
        Term::InvSpd,
        Term::Spt,
        Term::Grp,
        Term::InvColl,
    ];
    pub const LINEAR: [Term; 5] = [Term::App, Term::Disc, Term::Spd, Term::Tr, Term::InvSpd];
    pub const PAIRWISE: [Term; 3] = [Term::Spt, Term::Grp, Term::InvColl];

    pub fn name(self) -> &'static str {
        match self {
            Term::App => "app",
            Term::Disc => "disc",
            Term::Spd => "spd",
            Term::Tr => "tr",
            Term::InvSpd => "inv_spd",
            Term::Spt => "spt",
            Term::Grp => "grp",
            Term::InvColl => "inv_coll",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Logistic placement of one term.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermCalibration {
    pub term: Term,
    pub weight: f64,
    pub center: f64,
    pub beta: f64,
}

impl TermCalibration {
    pub fn apply(&self, phi: f64) -> f64 {
        self.weight * (logistic(self.beta * (phi - self.center)) - 0.5)
    }
}

/// Symmetric sparse matrix with an explicit diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "SparseRecord", from = "SparseRecord")]
pub struct SparseSym {
    diag: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct SparseRecord {
    n: usize,
    diagonal: Vec<f64>,
    /// Upper-triangle entries `(i, j, value)` with `i < j`.
    entries: Vec<(usize, usize, f64)>,
}

impl From<SparseSym> for SparseRecord {
    fn from(q: SparseSym) -> Self {
        SparseRecord {
            n: q.len(),
            entries: q.entries().collect(),
            diagonal: q.diag,
        }
    }
}

impl From<SparseRecord> for SparseSym {
    fn from(r: SparseRecord) -> Self {
        let mut q = SparseSym::from_entries(r.n, r.entries);
        if r.diagonal.len() == r.n {
            q.diag = r.diagonal;
        }
        q
    }
}

impl SparseSym {
    pub fn zeros(n: usize) -> Self {
        SparseSym {
            diag: vec![0.0; n],
            rows: vec![Vec::new(); n],
        }
    }

    /// Builds from off-diagonal entries, each unordered pair given once.
    /// Zero values are dropped; repeated pairs are summed.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut q = SparseSym::zeros(n);
        for (i, j, v) in entries {
            assert!(i != j && i < n && j < n, "off-diagonal entry ({i}, {j}) out of range");
            if v != 0.0 {
                q.rows[i].push((j, v));
                q.rows[j].push((i, v));
            }
        }
        for row in &mut q.rows {
            row.sort_by_key(|e| e.0);
            row.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
        }
        q
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal neighbours of `i`, sorted by column.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let row = &self.rows[i];
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(k) => row[k].1,
            Err(_) => 0.0,
        }
    }

    /// Number of stored unordered off-diagonal pairs.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter(move |e| e.0 > i).map(move |&(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, z: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.diag)
            .zip(z)
            .map(|((row, d), zi)| d * zi + row.iter().map(|&(j, v)| v * z[j]).sum::<f64>())
            .collect()
    }

    pub fn quad_form(&self, z: &[f64]) -> f64 {
        self.mul_vec(z).iter().zip(z).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            for &(j, v) in &self.rows[i] {
                m[i][j] = v;
            }
        }
        m
    }
}

/// Linear and quadratic costs over a fixed, ordered hypothesis list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub n_a: usize,
    pub n_b: usize,
    pub hypotheses: Vec<Hypothesis>,
    pub linear: Vec<f64>,
    pub quadratic: SparseSym,
    #[serde(default)]
    pub calibration: Vec<TermCalibration>,
    /// Weighted, squashed contribution of each linear term, per hypothesis.
    #[serde(default)]
    pub linear_terms: BTreeMap<Term, Vec<f64>>,
}

impl CostModel {
    /// A model with no pairwise terms.
    pub fn linear(n_a: usize, n_b: usize, hypotheses: Vec<Hypothesis>, linear: Vec<f64>) -> Self {
        let n = hypotheses.len();
        assert_eq!(n, linear.len());
        CostModel {
            n_a,
            n_b,
            hypotheses,
            linear,
            quadratic: SparseSym::zeros(n),
            calibration: Vec::new(),
            linear_terms: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn index_of(&self, m: Hypothesis) -> Option<usize> {
        self.hypotheses.binary_search(&m).ok()
    }

    /// The same objective with every cost multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.linear.iter_mut().for_each(|v| *v *= k);
        out.quadratic = SparseSym::from_entries(
            self.len(),
            self.quadratic.entries().map(|(i, j, v)| (i, j, v * k)),
        );
        out.quadratic.diag = self.quadratic.diag.iter().map(|d| d * k).collect();
        out
    }

    /// `z'Qz + L'z` for a fractional point of the relaxed polytope.
    pub fn relaxed_loss(&self, z: &[f64]) -> f64 {
        self.quadratic.quad_form(z) + self.linear.iter().zip(z).map(|(l, x)| l * x).sum::<f64>()
    }

    /// `2Qz + L`.
    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        self.quadratic
            .mul_vec(z)
            .into_iter()
            .zip(&self.linear)
            .map(|(q, l)| 2.0 * q + l)
            .collect()
    }
}

/// Binary selection over a [`CostModel`]'s hypotheses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub z: Vec<bool>,
}

impl Assignment {
    pub fn empty(n: usize) -> Self {
        Assignment { z: vec![false; n] }
    }

    pub fn from_indices(n: usize, selected: impl IntoIterator<Item = usize>) -> Self {
        let mut z = vec![false; n];
        for k in selected {
            z[k] = true;
        }
        Assignment { z }
    }

    /// Selects the listed pairs; pairs outside the candidate set are an error.
    pub fn from_pairs(cm: &CostModel, pairs: &[Hypothesis]) -> Result<Self> {
        let mut z = vec![false; cm.len()];
        for &m in pairs {
            let k = cm.index_of(m).ok_or_else(|| {
                Error::Infeasible(format!("pair ({}, {}) is not a candidate hypothesis", m.i_a, m.j_b))
            })?;
            z[k] = true;
        }
        Ok(Assignment { z })
    }

    pub fn selected(&self) -> impl Iterator<Item = usize> + '_ {
        self.z.iter().enumerate().filter(|(_, &on)| on).map(|(k, _)| k)
    }

    pub fn count(&self) -> usize {
        self.z.iter().filter(|&&on| on).count()
    }

    pub fn pairs(&self, cm: &CostModel) -> Vec<Hypothesis> {
        self.selected().map(|k| cm.hypotheses[k]).collect()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.z.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect()
    }
}

/// Each track in either camera is used by at most one selected hypothesis.
pub fn check_feasible(cm: &CostModel, z: &Assignment) -> Result<()> {
    if z.z.len() != cm.len() {
        return Err(Error::DimensionMismatch {
            expected: cm.len(),
            found: z.z.len(),
        });
    }
    let mut row = vec![None; cm.n_a];
    let mut col = vec![None; cm.n_b];
    for k in z.selected() {
        let m = cm.hypotheses[k];
        if let Some(prev) = row[m.i_a].replace(k) {
            return Err(Error::Infeasible(format!(
                "row {} (camera a) selected by hypotheses {prev} and {k}",
                m.i_a
            )));
        }
        if let Some(prev) = col[m.j_b].replace(k) {
            return Err(Error::Infeasible(format!(
                "column {} (camera b) selected by hypotheses {prev} and {k}",
                m.j_b
            )));
        }
    }
    Ok(())
}

/// Exact objective value of a feasible assignment.
pub fn loss(cm: &CostModel, z: &Assignment) -> Result<f64> {
    check_feasible(cm, z)?;
    Ok(loss_unchecked(cm, z))
}

pub(crate) fn loss_unchecked(cm: &CostModel, z: &Assignment) -> f64 {
    let mut total = 0.0;
    for k in z.selected() {
        total += cm.linear[k] + cm.quadratic.diag[k];
        for &(j, v) in cm.quadratic.row(k) {
            if z.z[j] {
                total += v;
            }
        }
    }
    total
}

/// `I + D^{-1/2} Q D^{-1/2}` with `D` the row sums of `|Q|`; rows with no
/// coupling become identity rows. The linear part is unchanged.
pub fn convexify(cm: &CostModel) -> CostModel {
    let q = &cm.quadratic;
    let n = q.len();
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d: f64 = q.row(i).iter().map(|e| e.1.abs()).sum();
            if d > 0.0 {
                d.sqrt().recip()
            } else {
                0.0
            }
        })
        .collect();
    let mut hat = SparseSym::from_entries(n, q.entries().map(|(i, j, v)| (i, j, v * scale[i] * scale[j])));
    hat.diag = vec![1.0; n];
    CostModel {
        quadratic: hat,
        ..cm.clone()
    }
}

/// Optional learned components; terms whose component is absent are an error
/// when their weight is nonzero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComponentModels<'a> {
    pub transitions: Option<&'a GateTransitionModel>,
    /// One optional model per camera-a track.
    pub discriminative: Option<&'a [Option<DiscriminativeModel>]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssemblyOptions {
    pub tau: i64,
    pub weights: Weights,
    /// Fixed logistic slopes by term name, overriding calibration.
    pub beta: BTreeMap<Term, f64>,
    /// Sampling step in frames along interpolated paths.
    pub path_step: f64,
    /// Keep only hypotheses among the `k` cheapest by linear cost for their
    /// camera-a or their camera-b track.
    pub top_k: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            tau: 1000,
            weights: Weights::default(),
            beta: BTreeMap::new(),
            path_step: 1.0,
            top_k: None,
        }
    }
}

/// Median and `1 / std` of the available values.
fn calibrate(term: Term, weight: f64, raw: &[Option<f64>], beta: Option<f64>, centered: bool) -> TermCalibration {
    let mut xs: Vec<f64> = raw.iter().flatten().copied().collect();
    let n = xs.len() as f64;
    let center = if centered && !xs.is_empty() {
        xs.sort_by(f64::total_cmp);
        let mid = xs.len() / 2;
        if xs.len() % 2 == 1 {
            xs[mid]
        } else {
            0.5 * (xs[mid - 1] + xs[mid])
        }
    } else {
        0.0
    };
    let beta = beta.unwrap_or_else(|| {
        if xs.is_empty() {
            return 1.0;
        }
        let mean = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
        if sd > 1e-9 * mean.abs().max(1e-3) {
            1.0 / sd
        } else {
            1.0
        }
    });
    TermCalibration {
        term,
        weight,
        center,
        beta,
    }
}

/// Raw value of every linear term for every hypothesis; `None` marks a
/// value that cannot be computed and contributes nothing.
fn raw_linear(
    s: &Scenario,
    hyps: &[Hypothesis],
    models: &ComponentModels,
    opts: &AssemblyOptions,
    paths: &[Option<InterpolatedPath>],
) -> Result<BTreeMap<Term, Vec<Option<f64>>>> {
    let w = &opts.weights;
    let mut out = BTreeMap::new();
    if w.app != 0.0 {
        let v: Result<Vec<Option<f64>>> = hyps
            .par_iter()
            .map(|m| appearance_similarity(&s.tracks_a[m.i_a], &s.tracks_b[m.j_b]).map(|x| Some(-x)))
            .collect();
        out.insert(Term::App, v?);
    }
    if w.disc != 0.0 {
        let models = models
            .discriminative
            .ok_or_else(|| Error::MissingComponent("discriminative appearance models".into()))?;
        if models.len() != s.tracks_a.len() {
            return Err(Error::DimensionMismatch {
                expected: s.tracks_a.len(),
                found: models.len(),
            });
        }
        let v: Result<Vec<Option<f64>>> = hyps
            .par_iter()
            .map(|m| match &models[m.i_a] {
                Some(model) => discriminative_cost(model, &s.tracks_b[m.j_b]).map(|x| Some(-x)),
                None => Ok(None),
            })
            .collect();
        out.insert(Term::Disc, v?);
    }
    if w.spd != 0.0 {
        let sa = camera_speed_stats(&s.tracks_a);
        let sb = camera_speed_stats(&s.tracks_b);
        let v = hyps
            .iter()
            .map(|m| speed_cost(&s.tracks_a[m.i_a], &s.tracks_b[m.j_b], &sa, &sb))
            .collect();
        out.insert(Term::Spd, v);
    }
    if w.tr != 0.0 {
        let model = models
            .transitions
            .ok_or_else(|| Error::MissingComponent("gate transition model".into()))?;
        let (u_a, u_b) = (s.camera_a.gates.len(), s.camera_b.gates.len());
        if model.dest.len() != u_a || model.dest.iter().any(|r| r.len() != u_b) {
            return Err(Error::MissingComponent(format!(
                "transition model for {u_a} x {u_b} gates"
            )));
        }
        let v = hyps.iter().map(|&m| Some(transition_cost(m, model, s))).collect();
        out.insert(Term::Tr, v);
    }
    if w.inv_spd != 0.0 && s.topology.is_some() {
        let v = paths
            .par_iter()
            .map(|p| p.as_ref().map(|p| invisible_speed_cost(p, opts.path_step)))
            .collect();
        out.insert(Term::InvSpd, v);
    }
    Ok(out)
}

struct PairRaw {
    k1: usize,
    k2: usize,
    spt: f64,
    grp: f64,
    coll: f64,
}

fn raw_pairs(
    s: &Scenario,
    hyps: &[Hypothesis],
    opts: &AssemblyOptions,
    paths: &[Option<InterpolatedPath>],
) -> Vec<PairRaw> {
    let w = &opts.weights;
    let want_spt = w.spt != 0.0;
    let want_grp = w.grp != 0.0;
    let want_coll = w.inv_coll != 0.0 && s.topology.is_some();
    if !(want_spt || want_grp || want_coll) {
        return Vec::new();
    }
    // Exit distance beyond which the exponential gates of both grouping
    // terms fall below the cutoff.
    let cut = -PAIR_CUTOFF.ln();
    let travel_max = hyps
        .iter()
        .map(|&m| {
            let a = &s.tracks_a[m.i_a];
            let b = &s.tracks_b[m.j_b];
            (a.exit_speed().unwrap_or(0.0) + b.entry_speed().unwrap_or(0.0)) * s.gap(m) as f64
        })
        .fold(0.0, f64::max);
    let exit_radius = cut + (2.0 * travel_max).max(1.0).ln();
    let boxes: Vec<Option<[f64; 4]>> = if want_coll {
        paths
            .iter()
            .map(|p| p.as_ref().map(|p| window_box(p, opts.path_step)))
            .collect()
    } else {
        Vec::new()
    };

    (0..hyps.len())
        .into_par_iter()
        .flat_map_iter(|k1| {
            let m1 = hyps[k1];
            let boxes = &boxes;
            (k1 + 1..hyps.len()).filter_map(move |k2| {
                let m2 = hyps[k2];
                if m1.conflicts(&m2) {
                    return None;
                }
                let exits = crate::trackdata::dist(
                    s.tracks_a[m1.i_a].exit_point(),
                    s.tracks_a[m2.i_a].exit_point(),
                );
                let near = exits <= exit_radius;
                let spt = if want_spt && near { spatial_grouping_cost(m1, m2, s) } else { 0.0 };
                let social = if near || want_coll { social_grouping_cost(m1, m2, s) } else { 0.0 };
                let grp = if want_grp { social } else { 0.0 };
                let coll = match (want_coll, paths.get(k1), paths.get(k2)) {
                    (true, Some(Some(p1)), Some(Some(p2)))
                        if boxes_close(boxes[k1], boxes[k2], cut) =>
                    {
                        collision_cost(p1, p2, social, opts.path_step)
                    }
                    _ => 0.0,
                };
                (spt >= PAIR_CUTOFF || grp >= PAIR_CUTOFF || coll >= PAIR_CUTOFF)
                    .then_some(PairRaw { k1, k2, spt, grp, coll })
            })
        })
        .collect()
}

/// Bounding box `[x0, y0, x1, y1]` of a path over its unobserved window.
fn window_box(p: &InterpolatedPath, step: f64) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    let (lo, hi) = (p.exit_a as f64, p.entry_b as f64);
    let n = ((hi - lo) / step).ceil().max(0.0) as usize;
    for k in 0..=n {
        let q = p.position((lo + k as f64 * step).min(hi));
        b[0] = b[0].min(q[0]);
        b[1] = b[1].min(q[1]);
        b[2] = b[2].max(q[0]);
        b[3] = b[3].max(q[1]);
    }
    b
}

fn boxes_close(b1: Option<[f64; 4]>, b2: Option<[f64; 4]>, r: f64) -> bool {
    match (b1, b2) {
        (Some(p), Some(q)) => {
            let dx = (q[0] - p[2]).max(p[0] - q[2]).max(0.0);
            let dy = (q[1] - p[3]).max(p[1] - q[3]).max(0.0);
            dx.hypot(dy) <= r
        }
        _ => false,
    }
}

/// Indices of hypotheses ranked among the `k` cheapest for their camera-a
/// track or for their camera-b track, ascending. Ties go to the lower index.
pub fn top_k_per_track(hyps: &[Hypothesis], linear: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..hyps.len()).collect();
    order.sort_by(|&x, &y| linear[x].total_cmp(&linear[y]).then(x.cmp(&y)));
    let n_a = hyps.iter().map(|m| m.i_a + 1).max().unwrap_or(0);
    let n_b = hyps.iter().map(|m| m.j_b + 1).max().unwrap_or(0);
    let (mut seen_a, mut seen_b) = (vec![0usize; n_a], vec![0usize; n_b]);
    let mut keep = vec![false; hyps.len()];
    for idx in order {
        let m = hyps[idx];
        if seen_a[m.i_a] < k || seen_b[m.j_b] < k {
            keep[idx] = true;
        }
        seen_a[m.i_a] += 1;
        seen_b[m.j_b] += 1;
    }
    (0..hyps.len()).filter(|&i| keep[i]).collect()
}

/// Builds the full objective over `candidate_matches(s, tau)`, optionally
/// pruned to each track's `top_k` cheapest hypotheses before pairwise
/// terms are computed.
pub fn assemble_cost_model(s: &Scenario, models: &ComponentModels, opts: &AssemblyOptions) -> Result<CostModel> {
    if !opts.weights.is_finite() {
        return Err(Error::Config("weights must be finite".into()));
    }
    let hyps = candidate_matches(s, opts.tau);
    let w = &opts.weights;
    let needs_paths = s.topology.is_some() && (w.inv_spd != 0.0 || w.inv_coll != 0.0);
    let paths: Vec<Option<InterpolatedPath>> = match (&s.topology, needs_paths) {
        (Some(topo), true) => hyps
            .par_iter()
            .map(|m| interpolate_path(&s.tracks_a[m.i_a], &s.tracks_b[m.j_b], topo).ok())
            .collect(),
        _ => Vec::new(),
    };

    let raw = raw_linear(s, &hyps, models, opts, &paths)?;
    let mut linear = vec![0.0; hyps.len()];
    let mut calibration = Vec::new();
    let mut linear_terms = BTreeMap::new();
    for (&term, values) in &raw {
        let cal = calibrate(term, w.get(term), values, opts.beta.get(&term).copied(), true);
        let contrib: Vec<f64> = values.iter().map(|v| v.map_or(0.0, |x| cal.apply(x))).collect();
        for (l, c) in linear.iter_mut().zip(&contrib) {
            *l += c;
        }
        calibration.push(cal);
        linear_terms.insert(term, contrib);
    }

    let (hyps, linear, paths) = match opts.top_k {
        Some(k) => {
            let keep = top_k_per_track(&hyps, &linear, k);
            let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
            for contrib in linear_terms.values_mut() {
                *contrib = pick(contrib);
            }
            let paths = if paths.is_empty() { paths } else { keep.iter().map(|&i| paths[i].clone()).collect() };
            (keep.iter().map(|&i| hyps[i]).collect(), pick(&linear), paths)
        }
        None => (hyps, linear, paths),
    };

    let pairs = raw_pairs(s, &hyps, opts, &paths);
    let pair_cal = |term: Term, pick: fn(&PairRaw) -> f64| {
        let vals: Vec<Option<f64>> = pairs.iter().map(|p| Some(pick(p)).filter(|v| *v >= PAIR_CUTOFF)).collect();
        calibrate(term, w.get(term), &vals, opts.beta.get(&term).copied(), false)
    };
    let cal_spt = pair_cal(Term::Spt, |p| p.spt);
    let cal_grp = pair_cal(Term::Grp, |p| p.grp);
    let cal_coll = pair_cal(Term::InvColl, |p| p.coll);
    let quadratic = SparseSym::from_entries(
        hyps.len(),
        pairs.iter().map(|p| {
            let v = cal_spt.apply(p.spt) + cal_grp.apply(p.grp) + cal_coll.apply(p.coll);
            (p.k1, p.k2, v)
        }),
    );
    if !pairs.is_empty() {
        calibration.extend(
            [cal_spt, cal_grp, cal_coll]
                .into_iter()
                .filter(|c| c.weight != 0.0),
        );
    }

    Ok(CostModel {
        n_a: s.tracks_a.len(),
        n_b: s.tracks_b.len(),
        hypotheses: hyps,
        linear,
        quadratic,
        calibration,
        linear_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{scenario_from, track};
    use proptest::prelude::*;

    fn toy(l: Vec<f64>, q: &[(usize, usize, f64)]) -> CostModel {
        let hyps = vec![
            Hypothesis::new(0, 0),
            Hypothesis::new(0, 1),
            Hypothesis::new(1, 0),
            Hypothesis::new(1, 1),
        ];
        let mut cm = CostModel::linear(2, 2, hyps, l);
        cm.quadratic = SparseSym::from_entries(4, q.iter().copied());
        cm
    }

    #[test]
    fn empty_and_single_selection() {
        let cm = toy(vec![0.5, -1.0, 2.0, 0.25], &[(0, 3, -2.0)]);
        assert_eq!(loss(&cm, &Assignment::empty(4)).unwrap(), 0.0);
        assert_eq!(loss(&cm, &Assignment::from_indices(4, [1])).unwrap(), -1.0);
        // Both orientations of the pair count.
        assert_eq!(loss(&cm, &Assignment::from_indices(4, [0, 3])).unwrap(), 0.5 + 0.25 - 4.0);
    }

    #[test]
    fn infeasible_selection_names_the_row() {
        let cm = toy(vec![0.0; 4], &[]);
        let err = loss(&cm, &Assignment::from_indices(4, [0, 1])).unwrap_err();
        assert!(err.to_string().contains("row 0"), "{err}");
        let err = loss(&cm, &Assignment::from_indices(4, [1, 3])).unwrap_err();
        assert!(err.to_string().contains("column 1"), "{err}");
    }

    #[test]
    fn convexify_identity_and_pair() {
        let cm = toy(vec![0.0; 4], &[]);
        let hat = convexify(&cm);
        assert_eq!(hat.quadratic.to_dense(), vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        let mut two = CostModel::linear(2, 2, vec![Hypothesis::new(0, 0), Hypothesis::new(1, 1)], vec![0.0; 2]);
        two.quadratic = SparseSym::from_entries(2, [(0, 1, 1.0)]);
        assert_eq!(convexify(&two).quadratic.to_dense(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn sparse_round_trips_through_json() {
        let cm = toy(vec![0.5, -1.0, 2.0, 0.25], &[(0, 3, -2.0), (1, 2, 0.125)]);
        let back: CostModel = serde_json::from_str(&serde_json::to_string(&cm).unwrap()).unwrap();
        assert_eq!(back, cm);
    }

    #[test]
    fn single_hypothesis_and_zero_weights() {
        let snap = |v: f64| vec![vec![v, 1.0, 0.0]];
        let s = scenario_from(
            vec![track("a0", "a", &[(0, 0.0, 0.0), (5, 5.0, 0.0)], snap(1.0))],
            vec![track("b0", "b", &[(20, 0.0, 0.0), (25, 5.0, 0.0)], snap(1.2))],
        );
        let opts = AssemblyOptions {
            weights: Weights::default().linear_only(),
            ..Default::default()
        };
        let tm = GateTransitionModel::for_scenario(&s, 1000);
        let models = ComponentModels {
            transitions: Some(&tm),
            discriminative: Some(&[None]),
        };
        let cm = assemble_cost_model(&s, &models, &opts).unwrap();
        assert_eq!(cm.len(), 1);
        assert_eq!(cm.quadratic.to_dense(), vec![vec![0.0]]);
        assert!(cm.linear[0].is_finite());

        let zero = AssemblyOptions {
            weights: Weights::zero(),
            ..Default::default()
        };
        let cm = assemble_cost_model(&s, &ComponentModels::default(), &zero).unwrap();
        assert_eq!(cm.linear, vec![0.0]);
        assert_eq!(loss(&cm, &Assignment::from_indices(1, [0])).unwrap(), 0.0);
    }

    #[test]
    fn missing_component_is_named() {
        let s = scenario_from(
            vec![track("a0", "a", &[(0, 0.0, 0.0), (5, 5.0, 0.0)], vec![vec![1.0]])],
            vec![track("b0", "b", &[(20, 0.0, 0.0), (25, 5.0, 0.0)], vec![vec![1.0]])],
        );
        let err = assemble_cost_model(&s, &ComponentModels::default(), &AssemblyOptions::default()).unwrap_err();
        assert!(err.to_string().contains("discriminative"), "{err}");
    }

    /// Three people leave together-ish, with distinct looks and speeds.
    fn three_by_three() -> Scenario {
        let a = |id: &str, x: f64, t: i64, v: f64, f: f64| {
            track(id, "a", &[(t - 2, x - 2.0 * v, 0.0), (t - 1, x - v, 0.0), (t, x, 0.0)], vec![
                vec![f, 1.0, 0.2],
                vec![f + 0.1, 0.9, 0.1],
            ])
        };
        let b = |id: &str, y: f64, t: i64, v: f64, f: f64| {
            track(id, "b", &[(t, 0.0, y), (t + 1, v, y), (t + 2, 2.0 * v, y)], vec![vec![f, 1.1, 0.2]])
        };
        scenario_from(
            vec![a("a0", 10.0, 100, 1.0, 0.0), a("a1", 11.0, 101, 1.4, 2.0), a("a2", 14.0, 104, 1.8, -2.0)],
            vec![b("b0", 5.0, 140, 1.1, 0.1), b("b1", 6.0, 142, 1.3, 2.1), b("b2", 9.0, 146, 1.9, -1.8)],
        )
    }

    #[test]
    fn every_entry_matches_component_recomputation() {
        let s = three_by_three();
        let opts = AssemblyOptions {
            tau: 200,
            weights: Weights {
                app: 5.0,
                disc: 0.0,
                tr: 0.0,
                ..Weights::default()
            },
            ..Default::default()
        };
        let cm = assemble_cost_model(&s, &ComponentModels::default(), &opts).unwrap();
        assert_eq!(cm.len(), 9);

        let med = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v[v.len() / 2]
        };
        let sd = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let lg = |x: f64| 1.0 / (1.0 + (-x).exp());

        let app: Vec<f64> = cm
            .hypotheses
            .iter()
            .map(|m| -appearance_similarity(&s.tracks_a[m.i_a], &s.tracks_b[m.j_b]).unwrap())
            .collect();
        let sa = camera_speed_stats(&s.tracks_a);
        let sb = camera_speed_stats(&s.tracks_b);
        let spd: Vec<f64> = cm
            .hypotheses
            .iter()
            .map(|m| speed_cost(&s.tracks_a[m.i_a], &s.tracks_b[m.j_b], &sa, &sb).unwrap())
            .collect();
        let (ca, ba) = (med(app.clone()), 1.0 / sd(&app));
        let (cs, bs) = (med(spd.clone()), 1.0 / sd(&spd));
        for k in 0..9 {
            let expect = 5.0 * (lg(ba * (app[k] - ca)) - 0.5) + 5.0 * (lg(bs * (spd[k] - cs)) - 0.5);
            assert!((cm.linear[k] - expect).abs() < 1e-12, "L[{k}]");
        }

        let mut spt = Vec::new();
        let mut grp = Vec::new();
        for k1 in 0..9 {
            for k2 in k1 + 1..9 {
                let (m1, m2) = (cm.hypotheses[k1], cm.hypotheses[k2]);
                if m1.conflicts(&m2) {
                    continue;
                }
                let (x, y) = (spatial_grouping_cost(m1, m2, &s), social_grouping_cost(m1, m2, &s));
                if x >= PAIR_CUTOFF || y >= PAIR_CUTOFF {
                    spt.push((k1, k2, x));
                    grp.push(y);
                }
            }
        }
        let kept = |v: Vec<f64>| v.into_iter().filter(|x| *x >= PAIR_CUTOFF).collect::<Vec<_>>();
        let b_spt = 1.0 / sd(&kept(spt.iter().map(|e| e.2).collect()));
        let b_grp = 1.0 / sd(&kept(grp.clone()));
        assert_eq!(cm.quadratic.nnz(), spt.len());
        for (&(k1, k2, x), &y) in spt.iter().zip(&grp) {
            let expect = 0.2 * (lg(b_spt * x) - 0.5) - 5.0 * (lg(b_grp * y) - 0.5);
            assert!((cm.quadratic.get(k1, k2) - expect).abs() < 1e-12, "Q[{k1}][{k2}] {} vs {expect} ({x}, {y})", cm.quadratic.get(k1, k2));
            assert_eq!(cm.quadratic.get(k1, k2), cm.quadratic.get(k2, k1));
        }
        for k in 0..9 {
            assert_eq!(cm.quadratic.get(k, k), 0.0);
            for &(j, _) in cm.quadratic.row(k) {
                assert!(!cm.hypotheses[k].conflicts(&cm.hypotheses[j]));
            }
        }
    }

    #[test]
    fn convexified_model_of_assembly_is_symmetric() {
        let s = three_by_three();
        let opts = AssemblyOptions {
            tau: 200,
            weights: Weights {
                disc: 0.0,
                tr: 0.0,
                ..Weights::default()
            },
            ..Default::default()
        };
        let hat = convexify(&assemble_cost_model(&s, &ComponentModels::default(), &opts).unwrap());
        let d = hat.quadratic.to_dense();
        for i in 0..d.len() {
            assert_eq!(d[i][i], 1.0);
            for j in 0..d.len() {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }

    proptest! {
        #[test]
        fn adding_a_match_changes_loss_by_its_marginal(
            l in prop::collection::vec(-3.0f64..3.0, 4),
            q03 in -2.0f64..2.0,
            q12 in -2.0f64..2.0,
            first in 0usize..4,
        ) {
            let cm = toy(l, &[(0, 3, q03), (1, 2, q12)]);
            let partner = 3 - first;
            let base = Assignment::from_indices(4, [first]);
            let both = Assignment::from_indices(4, [first, partner]);
            let marginal = cm.linear[partner] + 2.0 * cm.quadratic.get(first, partner);
            let diff = loss(&cm, &both).unwrap() - loss(&cm, &base).unwrap();
            prop_assert!((diff - marginal).abs() < 1e-12);
        }

        #[test]
        fn relaxed_loss_agrees_on_vertices(
            l in prop::collection::vec(-3.0f64..3.0, 4),
            q03 in -2.0f64..2.0,
            pick in 0usize..4,
        ) {
            let cm = toy(l, &[(0, 3, q03)]);
            let z = Assignment::from_indices(4, [pick, 3 - pick]);
            prop_assert!((cm.relaxed_loss(&z.as_f64()) - loss(&cm, &z).unwrap()).abs() < 1e-12);
        }
    }
}

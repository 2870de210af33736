//! Appearance similarity between tracks and per-person discriminative models.
//!
//! The similarity of two tracks is the median over all cross pairs of up to
//! five evenly spaced snapshots per track. The discriminative model is a
//! linear soft-margin SVM trained for one person in camera a, where the
//! positive instance in camera b is unknown: the candidates form a bag of
//! which exactly one is labelled positive, imputed alternately with the SVM
//! solve.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trackdata::{Hypothesis, Scenario, Track};

/// Snapshots sampled per track when comparing appearance.
pub const SNAPSHOTS_PER_TRACK: usize = 5;

/// Pairwise similarity between two feature vectors.
pub trait Similarity {
    fn similarity(&self, x: &[f64], y: &[f64]) -> f64;
}

/// Inner product of unit-normalized vectors. Zero vectors score 0.
#[derive(Clone, Copy, Debug, Default)]
pub struct Cosine;

impl Similarity for Cosine {
    fn similarity(&self, x: &[f64], y: &[f64]) -> f64 {
        let nx = norm(x);
        let ny = norm(y);
        if nx == 0.0 || ny == 0.0 {
            return 0.0;
        }
        (dot(x, y) / (nx * ny)).clamp(-1.0, 1.0)
    }
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `min(k, n)` indices spread evenly over `0..n`, including both ends.
pub fn sample_indices(n: usize, k: usize) -> Vec<usize> {
    if n <= k {
        return (0..n).collect();
    }
    if k == 1 {
        return vec![0];
    }
    (0..k)
        .map(|i| ((i * (n - 1)) as f64 / (k - 1) as f64).round() as usize)
        .collect()
}

pub fn sampled_snapshots(t: &Track) -> Vec<&[f64]> {
    sample_indices(t.snapshots.len(), SNAPSHOTS_PER_TRACK)
        .into_iter()
        .map(|i| t.snapshots[i].as_slice())
        .collect()
}

/// Median of a non-empty slice; even lengths average the two middle values.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

pub fn appearance_similarity(a: &Track, b: &Track) -> Result<f64> {
    appearance_similarity_with(a, b, &Cosine)
}

pub fn appearance_similarity_with(a: &Track, b: &Track, sim: &impl Similarity) -> Result<f64> {
    let sa = sampled_snapshots(a);
    let sb = sampled_snapshots(b);
    if sa.is_empty() || sb.is_empty() {
        return Err(Error::track(
            if sa.is_empty() { &a.id } else { &b.id },
            "no appearance snapshots",
        ));
    }
    let dim = sa[0].len();
    if let Some(bad) = sa.iter().chain(&sb).find(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    let mut values = Vec::with_capacity(sa.len() * sb.len());
    for x in &sa {
        for y in &sb {
            values.push(sim.similarity(x, y));
        }
    }
    Ok(median(&mut values))
}

/// Linear scoring model `<w, x> + v` for one person in camera a.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminativeModel {
    pub w: Vec<f64>,
    pub v: f64,
}

impl DiscriminativeModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.v
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingSets {
    pub pos_a: Vec<Vec<f64>>,
    pub neg_a: Vec<Vec<f64>>,
    pub neg_b: Vec<Vec<f64>>,
    /// In-window candidates in camera b, best cost first: `(j_b, snapshots)`.
    pub pos_bag_b: Vec<(usize, Vec<Vec<f64>>)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiningParams {
    /// Size of the single-positive bag.
    pub bag_size: usize,
    /// Above this many tracks, a negative pool keeps only its hardest
    /// members (highest appearance similarity to the query).
    pub hard_negative_limit: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            bag_size: 5,
            hard_negative_limit: 100,
        }
    }
}

/// Collects positives, negatives and the positive bag for person `i_a`.
///
/// `candidates` and `costs` run in parallel; only entries for `i_a` are read.
/// A camera-b track is an out-of-window negative when its entry gap to `i_a`
/// falls outside `[0, tau]`. In-window candidates in the worst cost quartile
/// (and outside the bag) are negatives as well.
pub fn mine_training_sets(
    s: &Scenario,
    i_a: usize,
    candidates: &[Hypothesis],
    costs: &[f64],
    tau: i64,
    params: &MiningParams,
) -> Result<TrainingSets> {
    assert_eq!(candidates.len(), costs.len(), "costs must align with candidates");
    let query = &s.tracks_a[i_a];

    let mut in_window: Vec<(usize, f64)> = candidates
        .iter()
        .zip(costs)
        .filter(|(m, _)| m.i_a == i_a && (0..=tau).contains(&s.gap(**m)))
        .map(|(m, &c)| (m.j_b, c))
        .collect();
    if in_window.is_empty() {
        return Err(Error::EmptyBag(i_a));
    }
    in_window.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));

    let bag_len = params.bag_size.max(1).min(in_window.len());
    let worst = in_window.len() / 4;
    let poor_start = (in_window.len() - worst).max(bag_len);

    let pos_bag_b = in_window[..bag_len]
        .iter()
        .map(|&(j, _)| (j, s.tracks_b[j].snapshots.clone()))
        .collect();

    let outside: Vec<usize> = (0..s.tracks_b.len())
        .filter(|&j| !(0..=tau).contains(&s.gap(Hypothesis::new(i_a, j))))
        .collect();
    let outside = hardest(query, &s.tracks_b, outside, params.hard_negative_limit)?;

    let mut neg_b: Vec<Vec<f64>> = Vec::new();
    for j in outside {
        neg_b.extend(s.tracks_b[j].snapshots.iter().cloned());
    }
    for &(j, _) in &in_window[poor_start..] {
        neg_b.extend(s.tracks_b[j].snapshots.iter().cloned());
    }

    let others: Vec<usize> = (0..s.tracks_a.len()).filter(|&i| i != i_a).collect();
    let others = hardest(query, &s.tracks_a, others, params.hard_negative_limit)?;
    let neg_a = others
        .into_iter()
        .flat_map(|i| s.tracks_a[i].snapshots.iter().cloned())
        .collect();

    Ok(TrainingSets {
        pos_a: query.snapshots.clone(),
        neg_a,
        neg_b,
        pos_bag_b,
    })
}

/// Keeps the `limit` tracks most similar to `query` when the pool is larger
/// than `limit`; otherwise returns the pool unchanged. Order is by index.
fn hardest(query: &Track, tracks: &[Track], pool: Vec<usize>, limit: usize) -> Result<Vec<usize>> {
    if pool.len() <= limit {
        return Ok(pool);
    }
    let mut scored = pool
        .into_iter()
        .map(|k| Ok((k, appearance_similarity(query, &tracks[k])?)))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut keep: Vec<usize> = scored[..limit].iter().map(|&(k, _)| k).collect();
    keep.sort_unstable();
    Ok(keep)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvmParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// Full-batch subgradient iterations per solve.
    pub epochs: usize,
    /// Imputation rounds before giving up on a fixed point.
    pub max_rounds: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            epochs: 200,
            max_rounds: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MilFit {
    pub model: DiscriminativeModel,
    /// Index into `pos_bag_b` of the instance labelled positive last.
    pub positive: Option<usize>,
    pub rounds: usize,
    /// False when the imputation never reached a fixed point.
    pub converged: bool,
}

/// Alternates bag-label imputation with a supervised soft-margin solve.
pub fn train_discriminative(ts: &TrainingSets, params: &SvmParams) -> Result<MilFit> {
    if ts.pos_a.is_empty() {
        return Err(Error::Config("training needs at least one positive".into()));
    }
    if ts.neg_a.is_empty() && ts.neg_b.is_empty() && ts.pos_bag_b.len() < 2 {
        return Err(Error::Config("training needs at least one negative".into()));
    }
    let dim = ts.pos_a[0].len();
    let all = ts
        .pos_a
        .iter()
        .chain(&ts.neg_a)
        .chain(&ts.neg_b)
        .chain(ts.pos_bag_b.iter().flat_map(|(_, xs)| xs));
    for x in all {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
    }

    let mut model = DiscriminativeModel {
        w: vec![0.0; dim],
        v: 0.0,
    };
    if ts.pos_bag_b.is_empty() {
        let data = labelled(ts, None);
        model = solve_svm(&data, dim, params);
        return Ok(MilFit {
            model,
            positive: None,
            rounds: 1,
            converged: true,
        });
    }

    let mut positive: Option<usize> = None;
    let mut rounds = 0;
    let mut converged = false;
    while rounds < params.max_rounds {
        let pick = impute(&model, &ts.pos_bag_b);
        if positive == Some(pick) {
            converged = true;
            break;
        }
        positive = Some(pick);
        let data = labelled(ts, positive);
        model = solve_svm(&data, dim, params);
        rounds += 1;
    }
    if !converged && impute(&model, &ts.pos_bag_b) == positive.unwrap_or(usize::MAX) {
        converged = true;
    }
    if !converged {
        log::warn!("bag imputation did not reach a fixed point in {rounds} rounds");
    }
    Ok(MilFit {
        model,
        positive,
        rounds,
        converged,
    })
}

/// Bag member with the highest mean score; ties go to the earlier (cheaper)
/// candidate.
fn impute(model: &DiscriminativeModel, bag: &[(usize, Vec<Vec<f64>>)]) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, (_, xs)) in bag.iter().enumerate() {
        let score = xs.iter().map(|x| model.score(x)).sum::<f64>() / xs.len().max(1) as f64;
        if score > best_score {
            best = k;
            best_score = score;
        }
    }
    best
}

fn labelled(ts: &TrainingSets, positive: Option<usize>) -> Vec<(&[f64], f64)> {
    let mut data: Vec<(&[f64], f64)> = Vec::new();
    data.extend(ts.pos_a.iter().map(|x| (x.as_slice(), 1.0)));
    data.extend(ts.neg_a.iter().map(|x| (x.as_slice(), -1.0)));
    data.extend(ts.neg_b.iter().map(|x| (x.as_slice(), -1.0)));
    for (k, (_, xs)) in ts.pos_bag_b.iter().enumerate() {
        let y = if Some(k) == positive { 1.0 } else { -1.0 };
        data.extend(xs.iter().map(|x| (x.as_slice(), y)));
    }
    data
}

/// Minimizes `0.5 |w|^2 + c * sum r_y hinge(y (<w,x> + v))` by full-batch
/// subgradient descent. `r_y = n / (2 n_y)` balances the two classes.
/// Descent runs from `w = 0` with step `1/k`, returning the average
/// of the second half of the iterates.
fn solve_svm(data: &[(&[f64], f64)], dim: usize, params: &SvmParams) -> DiscriminativeModel {
    let mut w = vec![0.0; dim];
    let mut v = 0.0;
    let mut w_avg = vec![0.0; dim];
    let mut v_avg = 0.0;
    let mut n_avg = 0usize;
    let mut push = vec![0.0; dim];
    let start_avg = params.epochs / 2;
    let n_pos = data.iter().filter(|d| d.1 > 0.0).count().max(1) as f64;
    let n_neg = (data.len() as f64 - n_pos).max(1.0);
    let half = data.len() as f64 / 2.0;
    let (w_pos, w_neg) = (half / n_pos, half / n_neg);
    for k in 1..=params.epochs {
        push.iter_mut().for_each(|p| *p = 0.0);
        let mut push_v = 0.0;
        for &(x, y) in data {
            let margin = y * (dot(&w, x) + v);
            if margin < 1.0 {
                let yw = y * if y > 0.0 { w_pos } else { w_neg };
                for (p, xi) in push.iter_mut().zip(x) {
                    *p += yw * xi;
                }
                push_v += yw;
            }
        }
        let eta = 1.0 / k as f64;
        for (wi, p) in w.iter_mut().zip(&push) {
            *wi -= eta * (*wi - params.c * p);
        }
        v += eta * params.c * push_v;
        if k > start_avg {
            n_avg += 1;
            for (a, wi) in w_avg.iter_mut().zip(&w) {
                *a += wi;
            }
            v_avg += v;
        }
    }
    let n = n_avg.max(1) as f64;
    if n_avg == 0 {
        return DiscriminativeModel { w, v };
    }
    DiscriminativeModel {
        w: w_avg.into_iter().map(|a| a / n).collect(),
        v: v_avg / n,
    }
}

/// Mean of `<w, x> + v` over the sampled snapshots of `b`; higher means more
/// similar.
pub fn discriminative_cost(model: &DiscriminativeModel, b: &Track) -> Result<f64> {
    let xs = sampled_snapshots(b);
    if xs.is_empty() {
        return Err(Error::track(&b.id, "no appearance snapshots"));
    }
    let mut total = 0.0;
    for x in &xs {
        if x.len() != model.w.len() {
            return Err(Error::DimensionMismatch {
                expected: model.w.len(),
                found: x.len(),
            });
        }
        total += model.score(x);
    }
    Ok(total / xs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::track_with_snapshots;

    #[test]
    fn identical_single_snapshots_are_fully_similar() {
        let a = track_with_snapshots("a0", "a", vec![vec![0.3, -1.2, 2.0]]);
        let b = track_with_snapshots("b0", "b", vec![vec![0.3, -1.2, 2.0]]);
        assert!((appearance_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_snapshots_score_zero() {
        let a = track_with_snapshots("a0", "a", vec![vec![1.0, 0.0]]);
        let b = track_with_snapshots("b0", "b", vec![vec![0.0, 2.0]]);
        assert_eq!(appearance_similarity(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn five_by_five_median_matches_double_loop() {
        let snaps = |seed: f64| -> Vec<Vec<f64>> {
            (0..5)
                .map(|k| {
                    let t = seed + k as f64;
                    vec![t.sin(), (1.7 * t).cos(), (0.3 * t).sin() + 0.2]
                })
                .collect()
        };
        let a = track_with_snapshots("a0", "a", snaps(0.4));
        let b = track_with_snapshots("b0", "b", snaps(2.9));
        let mut all = Vec::new();
        for x in &a.snapshots {
            for y in &b.snapshots {
                let c = dot(x, y) / (dot(x, x).sqrt() * dot(y, y).sqrt());
                all.push(c);
            }
        }
        assert_eq!(all.len(), 25);
        all.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let expected = all[12];
        assert!((appearance_similarity(&a, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn even_count_median_averages_middle() {
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
        assert_eq!(median(&mut [5.0]), 5.0);
    }

    #[test]
    fn sampling_is_even_and_inclusive() {
        assert_eq!(sample_indices(3, 5), vec![0, 1, 2]);
        assert_eq!(sample_indices(9, 5), vec![0, 2, 4, 6, 8]);
        assert_eq!(sample_indices(11, 5), vec![0, 3, 5, 8, 10]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = track_with_snapshots("a0", "a", vec![vec![1.0, 0.0]]);
        let b = track_with_snapshots("b0", "b", vec![vec![1.0, 0.0, 0.0]]);
        assert!(matches!(
            appearance_similarity(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constant_model_scores_its_bias() {
        let m = DiscriminativeModel {
            w: vec![0.0; 3],
            v: 0.3,
        };
        let b = track_with_snapshots("b0", "b", vec![vec![1.0, 2.0, 3.0], vec![-4.0, 0.0, 9.0]]);
        assert!((discriminative_cost(&m, &b).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn single_snapshot_scores_exactly() {
        let m = DiscriminativeModel {
            w: vec![0.5, -1.0, 2.0],
            v: -0.25,
        };
        let b = track_with_snapshots("b0", "b", vec![vec![1.0, 2.0, 3.0]]);
        assert_eq!(discriminative_cost(&m, &b).unwrap(), 0.5 - 2.0 + 6.0 - 0.25);
    }

    #[test]
    fn five_snapshots_average_individual_scores() {
        let m = DiscriminativeModel {
            w: vec![0.2, 0.7],
            v: 0.1,
        };
        let snaps: Vec<Vec<f64>> = (0..5).map(|k| vec![k as f64, 1.0 - k as f64 * 0.5]).collect();
        let expected = snaps.iter().map(|x| 0.2 * x[0] + 0.7 * x[1] + 0.1).sum::<f64>() / 5.0;
        let b = track_with_snapshots("b0", "b", snaps);
        assert!((discriminative_cost(&m, &b).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn separable_toy_set_is_classified() {
        let e1 = vec![1.0, 0.0];
        let ts = TrainingSets {
            pos_a: vec![e1.clone(), vec![0.9, 0.1]],
            neg_a: vec![vec![-1.0, 0.0], vec![-0.9, 0.2]],
            neg_b: vec![vec![-1.0, -0.1]],
            pos_bag_b: vec![(0, vec![e1.clone()]), (1, vec![vec![-0.8, 0.0]])],
        };
        let fit = train_discriminative(&ts, &SvmParams::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.positive, Some(0));
        for x in ts.pos_a.iter().chain(&ts.pos_bag_b[0].1) {
            assert!(fit.model.score(x) > 0.0);
        }
        for x in ts.neg_a.iter().chain(&ts.neg_b).chain(&ts.pos_bag_b[1].1) {
            assert!(fit.model.score(x) < 0.0);
        }
    }

    #[test]
    fn zero_penalty_on_zero_data_stays_at_origin() {
        let z = vec![0.0; 3];
        let ts = TrainingSets {
            pos_a: vec![z.clone()],
            neg_a: vec![z.clone()],
            neg_b: vec![],
            pos_bag_b: vec![(0, vec![z.clone()])],
        };
        let params = SvmParams {
            c: 0.0,
            ..SvmParams::default()
        };
        let fit = train_discriminative(&ts, &params).unwrap();
        assert_eq!(fit.model.w, vec![0.0; 3]);
        assert_eq!(fit.model.v, 0.0);
    }

    #[test]
    fn exactly_one_bag_member_is_positive() {
        let ts = TrainingSets {
            pos_a: vec![vec![1.0, 0.0, 0.0]],
            neg_a: vec![vec![0.0, 1.0, 0.0]],
            neg_b: vec![vec![0.0, 0.0, 1.0]],
            pos_bag_b: vec![
                (3, vec![vec![0.2, 0.9, 0.0]]),
                (7, vec![vec![0.95, 0.05, 0.0]]),
                (9, vec![vec![0.0, 0.1, 0.9]]),
            ],
        };
        let fit = train_discriminative(&ts, &SvmParams::default()).unwrap();
        // The first round imputes the cheapest member; the model then prefers
        // the instance that looks like the query.
        assert_eq!(fit.positive, Some(1));
        let data = labelled(&ts, fit.positive);
        let bag_pos = data[3..].iter().filter(|(_, y)| *y > 0.0).count();
        assert_eq!(bag_pos, 1);
    }

    #[test]
    fn training_is_deterministic() {
        let ts = TrainingSets {
            pos_a: vec![vec![1.0, 0.2], vec![0.8, 0.1]],
            neg_a: vec![vec![-0.3, 1.0]],
            neg_b: vec![vec![0.1, -1.0]],
            pos_bag_b: vec![(0, vec![vec![0.9, 0.0]]), (1, vec![vec![0.0, 0.9]])],
        };
        let p = SvmParams::default();
        assert_eq!(train_discriminative(&ts, &p).unwrap(), train_discriminative(&ts, &p).unwrap());
    }

    mod mining {
        use super::*;
        use crate::testutil::track_at;
        use crate::trackdata::{candidate_matches, Camera};

        fn scenario() -> Scenario {
            let cam = |id: &str| Camera {
                id: id.into(),
                gates: vec![[0.0, 0.0]],
            };
            // a0 exits at 100; b tracks enter at 20 (acausal), then 110..190.
            let mut tracks_b = vec![track_at("b0", "b", 20, 1.0)];
            for k in 1..=10 {
                tracks_b.push(track_at(&format!("b{k}"), "b", 100 + 10 * k, k as f64 + 1.0));
            }
            Scenario {
                camera_a: cam("a"),
                camera_b: cam("b"),
                tracks_a: vec![track_at("a0", "a", 90, 0.5), track_at("a1", "a", 50, 7.0)],
                tracks_b,
                topology: None,
                ground_truth: None,
            }
        }

        fn costs_for(c: &[Hypothesis]) -> Vec<f64> {
            // Deliberately scrambled so the bag differs from index order.
            c.iter().map(|m| ((m.j_b * 7) % 11) as f64 + 0.01 * m.i_a as f64).collect()
        }

        #[test]
        fn acausal_track_is_a_negative() {
            let s = scenario();
            let c = candidate_matches(&s, 1000);
            let ts = mine_training_sets(&s, 0, &c, &costs_for(&c), 1000, &MiningParams::default())
                .unwrap();
            assert!(ts.neg_b.contains(&s.tracks_b[0].snapshots[0]));
            assert!(ts.pos_bag_b.iter().all(|(j, _)| *j != 0));
        }

        #[test]
        fn own_snapshots_never_negative() {
            let s = scenario();
            let c = candidate_matches(&s, 1000);
            let ts = mine_training_sets(&s, 0, &c, &costs_for(&c), 1000, &MiningParams::default())
                .unwrap();
            for x in &s.tracks_a[0].snapshots {
                assert!(!ts.neg_a.contains(x) && !ts.neg_b.contains(x));
            }
            assert_eq!(ts.pos_a, s.tracks_a[0].snapshots);
        }

        #[test]
        fn bag_holds_the_cheapest_candidates() {
            let s = scenario();
            let c = candidate_matches(&s, 1000);
            let costs = costs_for(&c);
            let ts = mine_training_sets(&s, 0, &c, &costs, 1000, &MiningParams::default()).unwrap();
            let mut oracle: Vec<(f64, usize)> = c
                .iter()
                .zip(&costs)
                .filter(|(m, _)| m.i_a == 0)
                .map(|(m, &k)| (k, m.j_b))
                .collect();
            assert_eq!(oracle.len(), 10);
            oracle.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let expected: Vec<usize> = oracle[..5].iter().map(|&(_, j)| j).collect();
            let got: Vec<usize> = ts.pos_bag_b.iter().map(|(j, _)| *j).collect();
            assert_eq!(got, expected);
            // Worst quartile (2 of 10) joins the negatives.
            for &(_, j) in &oracle[8..] {
                assert!(ts.neg_b.contains(&s.tracks_b[j].snapshots[0]));
            }
        }

        #[test]
        fn no_window_candidate_is_an_empty_bag() {
            let s = scenario();
            let c = candidate_matches(&s, 5);
            let err = mine_training_sets(&s, 0, &c, &costs_for(&c), 5, &MiningParams::default())
                .unwrap_err();
            assert!(matches!(err, Error::EmptyBag(0)));
        }
    }
}

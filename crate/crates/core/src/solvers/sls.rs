use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::objective::{loss_unchecked, Assignment, CostModel};

use super::{munkres_linear, step_record, SolverResult};

/// Improvements smaller than this are ignored.
const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlsParams {
    /// Largest number of matches removed in one move.
    pub r_max: usize,
    pub max_sweeps: usize,
    /// Consecutive sweeps without improvement before stopping.
    pub patience: usize,
    /// Smallest loss decrease that counts as an improvement.
    pub tolerance: f64,
    /// Cap on combinations scored per add step.
    pub max_combinations: usize,
    pub seed: u64,
}

impl Default for SlsParams {
    fn default() -> Self {
        SlsParams {
            r_max: 8,
            max_sweeps: 2000,
            patience: 100,
            tolerance: 1e-9,
            max_combinations: 10_000,
            seed: 0,
        }
    }
}

/// Current solution with per-hypothesis coupling to the selected set.
#[derive(Clone)]
struct State<'a> {
    cm: &'a CostModel,
    selected: Vec<bool>,
    row_used: Vec<bool>,
    col_used: Vec<bool>,
    /// `coupling[k] = sum over selected j != k of Q[k][j]`.
    coupling: Vec<f64>,
    members: Vec<usize>,
    loss: f64,
}

impl<'a> State<'a> {
    fn new(cm: &'a CostModel, z: &Assignment) -> Self {
        let mut s = State {
            cm,
            selected: vec![false; cm.len()],
            row_used: vec![false; cm.n_a],
            col_used: vec![false; cm.n_b],
            coupling: vec![0.0; cm.len()],
            members: Vec::new(),
            loss: 0.0,
        };
        for k in z.selected() {
            s.add(k);
        }
        s
    }

    /// Loss change from adding `k` alone.
    fn marginal(&self, k: usize) -> f64 {
        self.cm.linear[k] + self.cm.quadratic.diagonal()[k] + 2.0 * self.coupling[k]
    }

    fn free(&self, k: usize) -> bool {
        let m = self.cm.hypotheses[k];
        !self.row_used[m.i_a] && !self.col_used[m.j_b]
    }

    fn add(&mut self, k: usize) {
        let m = self.cm.hypotheses[k];
        self.loss += self.marginal(k);
        self.selected[k] = true;
        self.row_used[m.i_a] = true;
        self.col_used[m.j_b] = true;
        self.members.push(k);
        for &(j, v) in self.cm.quadratic.row(k) {
            self.coupling[j] += v;
        }
    }

    fn remove(&mut self, k: usize) {
        let m = self.cm.hypotheses[k];
        self.selected[k] = false;
        self.row_used[m.i_a] = false;
        self.col_used[m.j_b] = false;
        self.members.retain(|&x| x != k);
        for &(j, v) in self.cm.quadratic.row(k) {
            self.coupling[j] -= v;
        }
        self.loss -= self.marginal(k);
    }

    fn assignment(&self) -> Assignment {
        Assignment {
            z: self.selected.clone(),
        }
    }
}

/// Removes `r` selected matches, drawn without replacement with probability
/// proportional to the softmax of their loss contribution, so worse matches
/// go first but every match can go.
fn remove_matches(state: &mut State, r: usize, rng: &mut ChaCha8Rng) {
    for _ in 0..r.min(state.members.len()) {
        let contrib: Vec<f64> = state.members.iter().map(|&k| state.marginal(k)).collect();
        let high = contrib.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = contrib.iter().map(|c| (c - high).exp()).collect();
        let mut target = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut pick = weights.len() - 1;
        for (idx, w) in weights.iter().enumerate() {
            if target < *w {
                pick = idx;
                break;
            }
            target -= w;
        }
        let k = state.members[pick];
        state.remove(k);
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

/// Best mutually compatible set of `s` addable matches and its loss change.
fn best_addition(state: &State, s: usize, cap: usize) -> Option<(Vec<usize>, f64)> {
    let mut pool: Vec<(usize, f64)> = (0..state.cm.len())
        .filter(|&k| state.free(k))
        .map(|k| (k, state.marginal(k)))
        .collect();
    if pool.len() < s {
        return None;
    }
    pool.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
    if s == 1 {
        return Some((vec![pool[0].0], pool[0].1));
    }
    let mut p = pool.len();
    while p > s && binomial(p, s) > cap as f64 {
        p -= 1;
    }
    pool.truncate(p);

    let q = &state.cm.quadratic;
    let hyps = &state.cm.hypotheses;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut stack: Vec<usize> = Vec::with_capacity(s);
    let mut partial: Vec<f64> = vec![0.0; s + 1];
    // Depth-first over index combinations in lexicographic order.
    fn recurse(
        start: usize,
        pool: &[(usize, f64)],
        s: usize,
        stack: &mut Vec<usize>,
        partial: &mut Vec<f64>,
        best: &mut Option<(Vec<usize>, f64)>,
        q: &crate::objective::SparseSym,
        hyps: &[crate::trackdata::Hypothesis],
    ) {
        let depth = stack.len();
        if depth == s {
            let total = partial[depth];
            if best.as_ref().is_none_or(|b| total < b.1) {
                *best = Some((stack.iter().map(|&i| pool[i].0).collect(), total));
            }
            return;
        }
        for i in start..pool.len() {
            let (k, dk) = pool[i];
            if stack.iter().any(|&o| hyps[pool[o].0].conflicts(&hyps[k])) {
                continue;
            }
            let pair: f64 = stack.iter().map(|&o| q.get(pool[o].0, k)).sum();
            partial[depth + 1] = partial[depth] + dk + 2.0 * pair;
            stack.push(i);
            recurse(i + 1, pool, s, stack, partial, best, q, hyps);
            stack.pop();
        }
    }
    recurse(0, &pool, s, &mut stack, &mut partial, &mut best, q, hyps);
    best
}

/// Randomized remove-then-add local search started from Munkres on the
/// linear costs. Only strict improvements are kept, so the result never
/// loses to the start.
pub fn stochastic_local_search(cm: &CostModel, p: &SlsParams, gt: Option<&[(usize, usize)]>) -> SolverResult {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut best = State::new(cm, &munkres_linear(cm));
    let mut trace = vec![step_record(cm, 0, best.loss, &best.assignment(), gt)];
    let mut stale = 0;
    let mut sweeps = 0;
    while sweeps < p.max_sweeps && stale < p.patience {
        sweeps += 1;
        let before = best.loss;
        for r in 0..=p.r_max {
            let mut cur = best.clone();
            remove_matches(&mut cur, r, &mut rng);
            for s in (1..=r + 1).rev() {
                if let Some((set, delta)) = best_addition(&cur, s, p.max_combinations) {
                    if delta < -EPS {
                        for k in set {
                            cur.add(k);
                        }
                    }
                }
            }
            if cur.loss < best.loss - EPS {
                best = cur;
            }
        }
        if best.loss < before - p.tolerance {
            stale = 0;
        } else {
            stale += 1;
        }
        trace.push(step_record(cm, sweeps, best.loss, &best.assignment(), gt));
    }
    let z = best.assignment();
    SolverResult {
        loss: loss_unchecked(cm, &z),
        z,
        iterations: sweeps,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        duality_gap: None,
    }
}

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::objective::{convexify, loss_unchecked, Assignment, CostModel, SparseSym};

use super::{munkres_hypotheses, munkres_linear, step_record, SolverResult, TraceStep};

/// Relaxed coordinates at or below this are treated as zero when rounding.
const SUPPORT_EPS: f64 = 1e-9;
/// Away-step vertices whose weight falls below this are dropped.
const WEIGHT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FwParams {
    pub max_iters: usize,
    /// Stop once the duality gap is at most this.
    pub gap_threshold: f64,
    pub seed: u64,
}

impl Default for FwParams {
    fn default() -> Self {
        FwParams {
            max_iters: 1000,
            gap_threshold: 1e-4,
            seed: 0,
        }
    }
}

/// Minimizer of `f(z + t d)` over `t in [0, max_step]` for
/// `f(z) = z'Qz + L'z`, given `g = grad f(z)`. A non-positive curvature
/// takes the whole step.
pub fn exact_step(q: &SparseSym, g: &[f64], d: &[f64], max_step: f64) -> f64 {
    let slope: f64 = g.iter().zip(d).map(|(a, b)| a * b).sum();
    let curvature = q.quad_form(d);
    if curvature <= 0.0 {
        return if slope < 0.0 { max_step } else { 0.0 };
    }
    (-slope / (2.0 * curvature)).clamp(0.0, max_step)
}

fn dot_vertex(g: &[f64], v: &[usize]) -> f64 {
    v.iter().map(|&k| g[k]).sum()
}

/// Vertex of the matching polytope minimizing `<g, h>`.
fn linear_oracle(cm: &CostModel, g: &[f64]) -> Vec<usize> {
    munkres_hypotheses(cm.n_a, cm.n_b, &cm.hypotheses, g, true)
}

/// Nearest matching: maximum total relaxed weight over the support of `z`.
fn round(cm: &CostModel, z: &[f64]) -> Assignment {
    let cost: Vec<f64> = z
        .iter()
        .map(|&x| if x > SUPPORT_EPS { -x } else { f64::INFINITY })
        .collect();
    Assignment::from_indices(cm.len(), munkres_hypotheses(cm.n_a, cm.n_b, &cm.hypotheses, &cost, true))
}

/// Away-step Frank-Wolfe on the convexified objective over the relaxed
/// matching polytope. Every iterate is rounded to a matching and the
/// matching with the lowest original loss is returned.
pub fn frank_wolfe(cm: &CostModel, p: &FwParams, gt: Option<&[(usize, usize)]>) -> SolverResult {
    let start = Instant::now();
    let n = cm.len();
    if cm.quadratic.nnz() == 0 && cm.quadratic.diagonal().iter().all(|&d| d == 0.0) {
        // Linear objective: the first oracle call from the origin is optimal.
        let z = munkres_linear(cm);
        let loss = loss_unchecked(cm, &z);
        return SolverResult {
            trace: vec![TraceStep {
                gap: Some(0.0),
                ..step_record(cm, 1, loss, &z, gt)
            }],
            z,
            loss,
            iterations: 1,
            wall_time: start.elapsed().as_secs_f64(),
            duality_gap: Some(0.0),
        };
    }
    let hat = convexify(cm);
    let q = &hat.quadratic;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let noise: Vec<f64> = (0..n).map(|_| -rng.random::<f64>()).collect();
    let v0 = linear_oracle(cm, &noise);
    let mut active: Vec<(Vec<usize>, f64)> = vec![(v0.clone(), 1.0)];
    let mut z = vec![0.0; n];
    for &k in &v0 {
        z[k] = 1.0;
    }

    let mut best = Assignment {
        z: z.iter().map(|&x| x > 0.5).collect(),
    };
    let mut best_loss = loss_unchecked(cm, &best);
    let mut trace = Vec::new();
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    for it in 0..p.max_iters {
        iterations = it + 1;
        let g = hat.gradient(&z);
        let h = linear_oracle(cm, &g);
        let gz: f64 = g.iter().zip(&z).map(|(a, b)| a * b).sum();
        gap = gz - dot_vertex(&g, &h);
        let relaxed = hat.relaxed_loss(&z);
        trace.push(TraceStep {
            relaxed: Some(relaxed),
            gap: Some(gap),
            ..step_record(cm, it, best_loss, &best, gt)
        });
        if gap <= p.gap_threshold {
            break;
        }

        let (away_idx, away_val) = active
            .iter()
            .enumerate()
            .map(|(i, (v, _))| (i, dot_vertex(&g, v)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("active set is never empty");
        let away_gain = away_val - gz;
        let toward = gap >= away_gain;

        let mut d = vec![0.0; n];
        let max_step;
        if toward {
            d.iter_mut().zip(&z).for_each(|(di, zi)| *di = -zi);
            for &k in &h {
                d[k] += 1.0;
            }
            max_step = 1.0;
        } else {
            d.copy_from_slice(&z);
            for &k in &active[away_idx].0 {
                d[k] -= 1.0;
            }
            let alpha = active[away_idx].1;
            max_step = alpha / (1.0 - alpha);
        }
        let step = exact_step(q, &g, &d, max_step);
        if step <= 0.0 {
            break;
        }
        for (zi, di) in z.iter_mut().zip(&d) {
            *zi += step * di;
        }

        if toward {
            if step >= 1.0 {
                active.clear();
            }
            for entry in active.iter_mut() {
                entry.1 *= 1.0 - step;
            }
            match active.iter_mut().find(|(v, _)| *v == h) {
                Some(entry) => entry.1 += step,
                None => active.push((h, step)),
            }
        } else {
            for entry in active.iter_mut() {
                entry.1 *= 1.0 + step;
            }
            active[away_idx].1 -= step;
            if active[away_idx].1 <= WEIGHT_EPS || step >= max_step {
                active.swap_remove(away_idx);
            }
        }

        let rounded = round(cm, &z);
        let l = loss_unchecked(cm, &rounded);
        if l < best_loss {
            best_loss = l;
            best = rounded;
        }
    }
    if let Some(last) = trace.last_mut() {
        last.loss = best_loss;
        last.fscore = step_record(cm, 0, best_loss, &best, gt).fscore;
    }
    SolverResult {
        z: best,
        loss: best_loss,
        iterations,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        duality_gap: Some(gap),
    }
}

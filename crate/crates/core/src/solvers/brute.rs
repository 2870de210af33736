use std::time::Instant;

use crate::error::{Error, Result};
use crate::objective::{Assignment, CostModel};

use super::SolverResult;

/// Largest camera size accepted by [`brute_force_optimum`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

struct Search<'a> {
    cm: &'a CostModel,
    by_row: Vec<Vec<usize>>,
    col_used: Vec<bool>,
    chosen: Vec<usize>,
    best: f64,
    best_set: Vec<usize>,
    visited: usize,
}

impl Search<'_> {
    fn visit(&mut self, row: usize, value: f64) {
        if row == self.by_row.len() {
            self.visited += 1;
            if value < self.best {
                self.best = value;
                self.best_set = self.chosen.clone();
            }
            return;
        }
        self.visit(row + 1, value);
        for idx in 0..self.by_row[row].len() {
            let k = self.by_row[row][idx];
            let j = self.cm.hypotheses[k].j_b;
            if self.col_used[j] {
                continue;
            }
            let q = &self.cm.quadratic;
            let delta = self.cm.linear[k]
                + q.get(k, k)
                + 2.0 * self.chosen.iter().map(|&c| q.get(k, c)).sum::<f64>();
            self.col_used[j] = true;
            self.chosen.push(k);
            self.visit(row + 1, value + delta);
            self.chosen.pop();
            self.col_used[j] = false;
        }
    }
}

/// Exact minimum over every feasible assignment, the empty one included.
pub fn brute_force_optimum(cm: &CostModel) -> Result<SolverResult> {
    if cm.n_a > BRUTE_FORCE_LIMIT || cm.n_b > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n_a: cm.n_a,
            n_b: cm.n_b,
        });
    }
    let start = Instant::now();
    let mut by_row = vec![Vec::new(); cm.n_a];
    for (k, m) in cm.hypotheses.iter().enumerate() {
        by_row[m.i_a].push(k);
    }
    let mut search = Search {
        cm,
        by_row,
        col_used: vec![false; cm.n_b],
        chosen: Vec::new(),
        best: f64::INFINITY,
        best_set: Vec::new(),
        visited: 0,
    };
    search.visit(0, 0.0);
    let z = Assignment::from_indices(cm.len(), search.best_set);
    Ok(SolverResult {
        loss: crate::objective::loss_unchecked(cm, &z),
        z,
        iterations: search.visited,
        wall_time: start.elapsed().as_secs_f64(),
        trace: Vec::new(),
        duality_gap: None,
    })
}

//! Cumulative matching characteristic (CMC) curves, their area, and
//! precision/recall of one-to-one assignments.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Assignment, CostModel};
use crate::trackdata::Hypothesis;

/// The curve always extends at least this far.
pub const MIN_RANKS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FScore {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// `cmc[r - 1]`: share of queries whose true match ranks `r` or better.
    pub cmc: Vec<f64>,
    /// Mean of the first 50 CMC values.
    pub auc_50: f64,
    /// Mean of the first 100 CMC values.
    pub auc_100: f64,
    /// 1-based rank of each query's true match; `None` when it is not a
    /// candidate.
    pub ranks: Vec<Option<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<FScore>,
}

impl EvaluationReport {
    pub fn with_assignment(mut self, f: FScore) -> Self {
        self.assignment = Some(f);
        self
    }
}

fn by_query(hyps: &[Hypothesis]) -> Vec<Vec<usize>> {
    let n = hyps.iter().map(|m| m.i_a + 1).max().unwrap_or(0);
    let mut out = vec![Vec::new(); n];
    for (k, m) in hyps.iter().enumerate() {
        out[m.i_a].push(k);
    }
    out
}

/// Ranks each query's candidates by `score` (ascending, ties by `j_b`) and
/// accumulates the curve.
fn rank_queries(
    hyps: &[Hypothesis],
    gt: &[(usize, usize)],
    mut score: impl FnMut(usize, usize) -> f64,
) -> EvaluationReport {
    let groups = by_query(hyps);
    let widest = groups.iter().map(Vec::len).max().unwrap_or(0);
    let r_max = MIN_RANKS.max(widest);
    let mut ranks = Vec::with_capacity(gt.len());
    for (q, &(i, j)) in gt.iter().enumerate() {
        let cands = groups.get(i).map(Vec::as_slice).unwrap_or(&[]);
        let truth = cands.iter().copied().find(|&k| hyps[k].j_b == j);
        let rank = truth.map(|t| {
            let st = score(q, t);
            1 + cands
                .iter()
                .filter(|&&k| {
                    let sk = score(q, k);
                    sk < st || (sk == st && hyps[k].j_b < j)
                })
                .count()
        });
        ranks.push(rank);
    }
    let mut hits = vec![0usize; r_max + 1];
    for r in ranks.iter().flatten() {
        hits[*r] += 1;
    }
    let total = gt.len().max(1) as f64;
    let mut cmc = Vec::with_capacity(r_max);
    let mut acc = 0;
    for h in &hits[1..] {
        acc += h;
        cmc.push(acc as f64 / total);
    }
    let mean = |n: usize| cmc[..n].iter().sum::<f64>() / n as f64;
    EvaluationReport {
        auc_50: mean(50),
        auc_100: mean(100),
        cmc,
        ranks,
        assignment: None,
    }
}

/// CMC of per-hypothesis costs (lower is better) against true pairs
/// `(i_a, j_b)`, one query per pair.
pub fn cmc_linear(hyps: &[Hypothesis], costs: &[f64], gt: &[(usize, usize)]) -> EvaluationReport {
    assert_eq!(hyps.len(), costs.len());
    rank_queries(hyps, gt, |_, k| costs[k])
}

/// CMC where each candidate also pays its pairwise couplings to every other
/// query's true match, those being held fixed: `L[m] + 2 * sum Q[m][f]`.
pub fn cmc_quadratic(cm: &CostModel, gt: &[(usize, usize)]) -> EvaluationReport {
    let fixed: Vec<Option<usize>> = gt
        .iter()
        .map(|&(i, j)| cm.index_of(Hypothesis::new(i, j)))
        .collect();
    let mut is_fixed = vec![false; cm.len()];
    for k in fixed.iter().flatten() {
        is_fixed[*k] = true;
    }
    rank_queries(&cm.hypotheses, gt, |q, k| {
        let own = fixed[q];
        let coupling: f64 = cm
            .quadratic
            .row(k)
            .iter()
            .filter(|(f, _)| is_fixed[*f] && Some(*f) != own)
            .map(|(_, v)| v)
            .sum();
        cm.linear[k] + 2.0 * coupling
    })
}

/// Precision, recall and their harmonic mean; an empty selection scores 0.
pub fn fscore(selected: &[Hypothesis], gt: &[(usize, usize)]) -> FScore {
    let correct = selected
        .iter()
        .filter(|m| gt.contains(&(m.i_a, m.j_b)))
        .count() as f64;
    let precision = if selected.is_empty() { 0.0 } else { correct / selected.len() as f64 };
    let recall = if gt.is_empty() { 0.0 } else { correct / gt.len() as f64 };
    let fscore = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    FScore {
        precision,
        recall,
        fscore,
    }
}

pub fn fscore_of(cm: &CostModel, z: &Assignment, gt: &[(usize, usize)]) -> FScore {
    fscore(&z.pairs(cm), gt)
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct CsvRow {
    row: String,
    rank: Option<usize>,
    cmc: Option<f64>,
    auc_1_50: Option<f64>,
    auc_1_100: Option<f64>,
    precision: Option<f64>,
    recall: Option<f64>,
    fscore: Option<f64>,
}

/// Writes `path` as CSV (one row per rank, then a summary row) and a JSON
/// mirror next to it. Returns the JSON path.
pub fn emit_report(r: &EvaluationReport, path: impl AsRef<Path>) -> Result<PathBuf> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for (k, c) in r.cmc.iter().enumerate() {
        w.serialize(CsvRow {
            row: "rank".into(),
            rank: Some(k + 1),
            cmc: Some(*c),
            ..Default::default()
        })
        .map_err(|e| csv_error(path, e))?;
    }
    let f = r.assignment;
    w.serialize(CsvRow {
        row: "summary".into(),
        auc_1_50: Some(r.auc_50),
        auc_1_100: Some(r.auc_100),
        precision: f.map(|f| f.precision),
        recall: f.map(|f| f.recall),
        fscore: f.map(|f| f.fscore),
        ..Default::default()
    })
    .map_err(|e| csv_error(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))?;

    let json_path = path.with_extension("json");
    let text = serde_json::to_string_pretty(r).expect("report serializes");
    fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok(json_path)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

//! Optimizers for the matching objective.
//!
//! [`munkres_assign`] solves the linear part exactly. [`stochastic_local_search`]
//! improves a Munkres start by randomized remove/add moves on the full
//! quadratic objective. [`frank_wolfe`] minimizes a convexified relaxation
//! and rounds its iterates back to matchings. [`brute_force_optimum`]
//! enumerates every partial matching of a small instance.

mod brute;
mod fw;
mod munkres;
mod sls;

use serde::{Deserialize, Serialize};

use crate::evaluation::fscore_of;
use crate::objective::{Assignment, CostModel};

pub use brute::{brute_force_optimum, BRUTE_FORCE_LIMIT};
pub use fw::{exact_step, frank_wolfe, FwParams};
pub use munkres::{munkres_assign, munkres_hypotheses, CostMatrix};
pub use sls::{stochastic_local_search, SlsParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub step: usize,
    /// Best objective value found so far.
    pub loss: f64,
    /// Convexified objective at the current relaxed iterate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relaxed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fscore: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub z: Assignment,
    pub loss: f64,
    pub iterations: usize,
    /// Seconds.
    pub wall_time: f64,
    pub trace: Vec<TraceStep>,
    /// Final duality gap, for Frank-Wolfe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality_gap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Munkres,
    Sls,
    Fw,
}

impl std::str::FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "munkres" => Ok(SolverKind::Munkres),
            "sls" => Ok(SolverKind::Sls),
            "fw" => Ok(SolverKind::Fw),
            other => Err(format!("unknown solver `{other}` (expected munkres, sls or fw)")),
        }
    }
}

/// Munkres with skipping on the linear costs alone.
pub fn munkres_linear(cm: &CostModel) -> Assignment {
    let picked = munkres_hypotheses(cm.n_a, cm.n_b, &cm.hypotheses, &cm.linear, true);
    Assignment::from_indices(cm.len(), picked)
}

/// Munkres on the linear costs, scored under the full objective.
pub fn munkres_solve(cm: &CostModel, gt: Option<&[(usize, usize)]>) -> SolverResult {
    let start = std::time::Instant::now();
    let z = munkres_linear(cm);
    let loss = crate::objective::loss_unchecked(cm, &z);
    let trace = vec![step_record(cm, 0, loss, &z, gt)];
    SolverResult {
        z,
        loss,
        iterations: 1,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
        duality_gap: None,
    }
}

pub(crate) fn step_record(
    cm: &CostModel,
    step: usize,
    loss: f64,
    z: &Assignment,
    gt: Option<&[(usize, usize)]>,
) -> TraceStep {
    TraceStep {
        step,
        loss,
        relaxed: None,
        gap: None,
        fscore: gt.map(|gt| fscore_of(cm, z, gt).fscore),
    }
}

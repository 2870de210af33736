//! End-to-end run: load, linear costs, EM over gate transitions,
//! per-person discriminative models, quadratic costs, final solve, report.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::appearance::{mine_training_sets, train_discriminative, DiscriminativeModel, MiningParams, SvmParams};
use crate::error::{Error, Result};
use crate::evaluation::{cmc_quadratic, emit_report, fscore_of, EvaluationReport};
use crate::objective::{
    assemble_cost_model, check_feasible, AssemblyOptions, ComponentModels, CostModel, Term, TermCalibration, Weights,
};
use crate::solvers::{frank_wolfe, munkres_linear, munkres_solve, stochastic_local_search, FwParams, SlsParams, SolverKind, SolverResult, TraceStep};
use crate::trackdata::{load_scenario, Scenario};
use crate::transitions::{em_refine, EmOutcome, EmParams, GateTransitionModel, RoundDiagnostics, MAX_COMPONENTS, MOMENTUM};

/// Hypotheses kept per track in the final objective.
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmSettings {
    pub rounds: usize,
    pub momentum: f64,
    pub confidence_quantile: f64,
    pub max_components: usize,
}

impl Default for EmSettings {
    fn default() -> Self {
        EmSettings {
            rounds: 5,
            momentum: MOMENTUM,
            confidence_quantile: 0.5,
            max_components: MAX_COMPONENTS,
        }
    }
}

/// Everything a run needs. `seed` drives both stochastic solvers; the
/// `seed` fields inside `sls` and `fw` are overwritten with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: PathBuf,
    pub out_dir: PathBuf,
    pub tau: i64,
    pub weights: Weights,
    pub beta: BTreeMap<Term, f64>,
    pub path_step: f64,
    /// Hypotheses kept per track for the final objective; all when unset.
    pub top_k: Option<usize>,
    pub solver: SolverKind,
    pub sls: SlsParams,
    pub fw: FwParams,
    pub em: EmSettings,
    /// Train per-person discriminative appearance models.
    pub discriminative: bool,
    pub disc_c: f64,
    pub bag_size: usize,
    /// Use the scenario's topology when it has one.
    pub topology: bool,
    pub seed: u64,
    /// Worker threads; all cores when unset.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: PathBuf::from("scenario.json"),
            out_dir: PathBuf::from("out"),
            tau: 1000,
            weights: Weights::default(),
            beta: BTreeMap::new(),
            path_step: 1.0,
            top_k: Some(DEFAULT_TOP_K),
            solver: SolverKind::Sls,
            sls: SlsParams::default(),
            fw: FwParams::default(),
            em: EmSettings::default(),
            discriminative: true,
            disc_c: SvmParams::default().c,
            bag_size: MiningParams::default().bag_size,
            topology: true,
            seed: 0,
            jobs: None,
        }
    }
}

impl RunConfig {
    /// Parses JSON, or TOML when `path` ends in `.toml`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parsed = if path.extension().is_some_and(|e| e == "toml") {
            toml_parse(&text)
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.tau < 0 {
            return bad(format!("tau must be non-negative, got {}", self.tau));
        }
        if !self.weights.is_finite() || self.beta.values().any(|b| !b.is_finite()) {
            return bad("weights and beta must be finite".into());
        }
        if !(self.path_step > 0.0) {
            return bad("path_step must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.em.momentum) {
            return bad("em.momentum must lie in [0, 1]".into());
        }
        if !(self.em.confidence_quantile > 0.0 && self.em.confidence_quantile <= 1.0) {
            return bad("em.confidence_quantile must lie in (0, 1]".into());
        }
        if self.em.max_components == 0 {
            return bad("em.max_components must be at least 1".into());
        }
        if !(self.disc_c > 0.0) || self.bag_size == 0 {
            return bad("disc_c must be positive and bag_size at least 1".into());
        }
        if self.top_k == Some(0) {
            return bad("top_k must be at least 1".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        if !self.scenario.is_file() {
            return bad(format!("scenario file {} does not exist", self.scenario.display()));
        }
        Ok(())
    }

    /// Options for linear-only stages, which see every candidate.
    pub fn assembly_options(&self, weights: Weights) -> AssemblyOptions {
        AssemblyOptions {
            tau: self.tau,
            weights,
            beta: self.beta.clone(),
            path_step: self.path_step,
            top_k: None,
        }
    }

    pub fn em_params(&self) -> EmParams {
        EmParams {
            rounds: self.em.rounds,
            momentum: self.em.momentum,
            confidence_quantile: self.em.confidence_quantile,
            max_components: self.em.max_components,
            tau: self.tau,
        }
    }

    /// Weights used while learning transitions: linear terms only, and no
    /// discriminative term since those models do not exist yet.
    pub fn em_weights(&self) -> Weights {
        Weights { disc: 0.0, ..self.weights.linear_only() }
    }

    pub fn wants_discriminative(&self) -> bool {
        self.discriminative && self.weights.disc != 0.0
    }
}

fn toml_parse(text: &str) -> std::result::Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Transitions,
    Discriminative,
    Costs,
    Solve,
    Evaluate,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Transitions => "transitions",
            Stage::Discriminative => "discriminative",
            Stage::Costs => "costs",
            Stage::Solve => "solve",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> AtStage<T> for Result<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Loads the scenario, dropping its topology when the run disables it.
pub fn load(rc: &RunConfig) -> Result<Scenario> {
    let mut s = load_scenario(&rc.scenario)?;
    if !rc.topology {
        s.topology = None;
    }
    Ok(s)
}

/// Runs transition refinement with Munkres as the inner matcher.
pub fn learn_transitions(s: &Scenario, rc: &RunConfig) -> Result<EmOutcome> {
    let opts = rc.assembly_options(rc.em_weights());
    em_refine(
        s,
        |model| {
            let models = ComponentModels { transitions: Some(model), discriminative: None };
            assemble_cost_model(s, &models, &opts)
        },
        |cm| Ok(munkres_linear(cm)),
        &rc.em_params(),
    )
}

/// Linear costs under the learned transitions, as used for mining.
pub fn linear_costs(s: &Scenario, transitions: &GateTransitionModel, rc: &RunConfig) -> Result<CostModel> {
    let models = ComponentModels { transitions: Some(transitions), discriminative: None };
    assemble_cost_model(s, &models, &rc.assembly_options(rc.em_weights()))
}

/// One model per camera-a track; `None` where no candidate is in window.
pub fn train_models(s: &Scenario, linear: &CostModel, rc: &RunConfig) -> Result<Vec<Option<DiscriminativeModel>>> {
    let mining = MiningParams { bag_size: rc.bag_size, ..MiningParams::default() };
    let svm = SvmParams { c: rc.disc_c, ..SvmParams::default() };
    (0..s.tracks_a.len())
        .into_par_iter()
        .map(|i| match mine_training_sets(s, i, &linear.hypotheses, &linear.linear, rc.tau, &mining) {
            Ok(ts) => Ok(Some(train_discriminative(&ts, &svm)?.model)),
            Err(Error::EmptyBag(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

pub fn full_costs(
    s: &Scenario,
    transitions: &GateTransitionModel,
    discriminative: Option<&[Option<DiscriminativeModel>]>,
    rc: &RunConfig,
) -> Result<CostModel> {
    let mut weights = rc.weights;
    if discriminative.is_none() {
        weights.disc = 0.0;
    }
    let models = ComponentModels { transitions: Some(transitions), discriminative };
    let opts = AssemblyOptions { top_k: rc.top_k, ..rc.assembly_options(weights) };
    assemble_cost_model(s, &models, &opts)
}

pub fn solve(cm: &CostModel, rc: &RunConfig, gt: Option<&[(usize, usize)]>) -> Result<SolverResult> {
    let result = match rc.solver {
        SolverKind::Munkres => munkres_solve(cm, gt),
        SolverKind::Sls => stochastic_local_search(cm, &SlsParams { seed: rc.seed, ..rc.sls }, gt),
        SolverKind::Fw => frank_wolfe(cm, &FwParams { seed: rc.seed, ..rc.fw }, gt),
    };
    check_feasible(cm, &result.z)?;
    if !result.loss.is_finite() {
        return Err(Error::Infeasible(format!("solver returned loss {}", result.loss)));
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub a: String,
    pub b: String,
    /// Linear cost of the match.
    pub cost: f64,
}

/// Solver output with everything nondeterministic (timing) left out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub solver: SolverKind,
    pub seed: u64,
    pub loss: f64,
    pub iterations: usize,
    pub matches: Vec<MatchRecord>,
}

impl SolutionFile {
    pub fn new(s: &Scenario, cm: &CostModel, r: &SolverResult, solver: SolverKind, seed: u64) -> Self {
        let matches = r
            .z
            .selected()
            .map(|k| {
                let m = cm.hypotheses[k];
                MatchRecord {
                    a: s.tracks_a[m.i_a].id.clone(),
                    b: s.tracks_b[m.j_b].id.clone(),
                    cost: cm.linear[k],
                }
            })
            .collect();
        SolutionFile { solver, seed, loss: r.loss, iterations: r.iterations, matches }
    }

    /// Matches as `(i_a, j_b)` indices into `s`.
    pub fn pairs(&self, s: &Scenario) -> Result<Vec<(usize, usize)>> {
        let find = |tracks: &[crate::Track], id: &str| {
            tracks
                .iter()
                .position(|t| t.id == id)
                .ok_or_else(|| Error::Parse(format!("solution names unknown track `{id}`")))
        };
        self.matches
            .iter()
            .map(|m| Ok((find(&s.tracks_a, &m.a)?, find(&s.tracks_b, &m.b)?)))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

/// Learned parameters of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub transitions: GateTransitionModel,
    #[serde(default)]
    pub em: Vec<RoundDiagnostics>,
    #[serde(default)]
    pub calibration: Vec<TermCalibration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discriminative: Option<Vec<Option<DiscriminativeModel>>>,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("artifact serializes") + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_trace(trace: &[TraceStep], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let io = |e: csv::Error| Error::Parse(format!("{}: {e}", path.display()));
    w.write_record(["step", "loss", "relaxed", "gap", "fscore"]).map_err(io)?;
    for t in trace {
        w.write_record([t.step.to_string(), t.loss.to_string(), opt(t.relaxed), opt(t.gap), opt(t.fscore)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    /// Against ground truth, when the scenario has one.
    pub fscore: Option<f64>,
    pub report: Option<EvaluationReport>,
    pub loss: f64,
    pub matched: usize,
    pub solver_seconds: f64,
    pub em: Vec<RoundDiagnostics>,
    pub artifacts: Vec<PathBuf>,
}

/// Runs every stage and writes `solution.json`, `model.json`, `trace.csv`
/// and, with ground truth, `report.csv` / `report.json` into `out_dir`.
pub fn run_pipeline(rc: &RunConfig) -> std::result::Result<RunSummary, StageError> {
    rc.validate().at(Stage::Config)?;
    match rc.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))
            .at(Stage::Config)?
            .install(|| run_stages(rc)),
        None => run_stages(rc),
    }
}

fn run_stages(rc: &RunConfig) -> std::result::Result<RunSummary, StageError> {
    let started = Instant::now();
    let s = load(rc).at(Stage::Load)?;
    info!("loaded {} + {} tracks", s.tracks_a.len(), s.tracks_b.len());
    let gt = s.ground_truth.as_deref();

    let em = learn_transitions(&s, rc).at(Stage::Transitions)?;
    info!("transitions learned in {} rounds", rc.em.rounds);

    let discriminative = if rc.wants_discriminative() {
        let linear = linear_costs(&s, &em.model, rc).at(Stage::Discriminative)?;
        let models = train_models(&s, &linear, rc).at(Stage::Discriminative)?;
        info!("trained {} discriminative models", models.iter().flatten().count());
        Some(models)
    } else {
        None
    };

    let cm = full_costs(&s, &em.model, discriminative.as_deref(), rc).at(Stage::Costs)?;
    info!("{} hypotheses, {} pairwise entries", cm.len(), cm.quadratic.nnz());

    let result = solve(&cm, rc, gt).at(Stage::Solve)?;
    info!("{:?} finished: loss {:.6}, {} matches", rc.solver, result.loss, result.z.count());

    let report = gt.map(|gt| cmc_quadratic(&cm, gt).with_assignment(fscore_of(&cm, &result.z, gt)));

    fs::create_dir_all(&rc.out_dir).map_err(|e| Error::io(&rc.out_dir, e)).at(Stage::Write)?;
    let mut artifacts = Vec::new();
    let solution = rc.out_dir.join("solution.json");
    write_json(&SolutionFile::new(&s, &cm, &result, rc.solver, rc.seed), &solution).at(Stage::Write)?;
    artifacts.push(solution);
    let model = rc.out_dir.join("model.json");
    let model_file = ModelFile {
        transitions: em.model.clone(),
        em: em.diagnostics.clone(),
        calibration: cm.calibration.clone(),
        discriminative,
    };
    write_json(&model_file, &model).at(Stage::Write)?;
    artifacts.push(model);
    let trace = rc.out_dir.join("trace.csv");
    write_trace(&result.trace, &trace).at(Stage::Write)?;
    artifacts.push(trace);
    if let Some(r) = &report {
        let csv_path = rc.out_dir.join("report.csv");
        let json_path = emit_report(r, &csv_path).at(Stage::Evaluate)?;
        artifacts.push(csv_path);
        artifacts.push(json_path);
    }
    info!("run finished in {:.2}s", started.elapsed().as_secs_f64());

    Ok(RunSummary {
        fscore: report.as_ref().and_then(|r| r.assignment.map(|f| f.fscore)),
        report,
        loss: result.loss,
        matched: result.z.count(),
        solver_seconds: result.wall_time,
        em: em.diagnostics,
        artifacts,
    })
}

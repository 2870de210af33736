use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;

use pse_reid::evaluation::{cmc_quadratic, emit_report, fscore, fscore_of};
use pse_reid::pipeline::{
    full_costs, learn_transitions, linear_costs, load, run_pipeline, solve as solve_stage, train_models, write_json,
    write_trace, ModelFile, RunConfig, SolutionFile, Stage,
};
use pse_reid::synth::{generate_scenario, save_output, SynthConfig};
use pse_reid::trackdata::load_scenario;
use pse_reid::transitions::GateTransitionModel;
use pse_reid::{CostModel, Error, Hypothesis, Scenario};

use crate::Failure;

/// JSON, or TOML when the extension says so.
pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn with_pool(rc: &RunConfig, f: impl FnOnce() -> Result<(), Failure> + Send) -> Result<(), Failure> {
    match rc.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::config(e.to_string()))?
            .install(f),
        None => f(),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::at(Stage::Write, Error::Io { path: dir.into(), source: e }))
}

fn ensure_parent(path: &Path) -> Result<(), Failure> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

pub fn synth(c: &SynthConfig, out: &Path) -> Result<(), Failure> {
    let generated = generate_scenario(c).map_err(|e| match e {
        Error::Config(m) => Failure::config(m),
        e => Failure::at(Stage::Load, e),
    })?;
    ensure_parent(out)?;
    let truth = save_output(&generated, out).map_err(|e| Failure::at(Stage::Write, e))?;
    println!(
        "wrote {} ({} + {} tracks) and {}",
        out.display(),
        generated.scenario.tracks_a.len(),
        generated.scenario.tracks_b.len(),
        truth.display()
    );
    Ok(())
}

/// Transitions and discriminative models from a model file, or uniform
/// transitions and none.
fn fixed_models(s: &Scenario, rc: &RunConfig, path: Option<&Path>) -> Result<ModelFile, Failure> {
    match path {
        Some(p) => {
            let mut m = ModelFile::load(p).map_err(|e| Failure::at(Stage::Load, e))?;
            let u = (s.camera_a.gates.len(), s.camera_b.gates.len());
            if m.transitions.dest.len() != u.0 || m.transitions.dest.iter().any(|r| r.len() != u.1) {
                return Err(Failure::at(
                    Stage::Load,
                    Error::InvalidScenario(format!("{} does not match the scenario's {}x{} gates", p.display(), u.0, u.1)),
                ));
            }
            if !rc.wants_discriminative() {
                m.discriminative = None;
            }
            Ok(m)
        }
        None => Ok(ModelFile {
            transitions: GateTransitionModel::for_scenario(s, rc.tau),
            em: Vec::new(),
            calibration: Vec::new(),
            discriminative: None,
        }),
    }
}

fn assemble(s: &Scenario, rc: &RunConfig, models: &ModelFile) -> Result<CostModel, Failure> {
    full_costs(s, &models.transitions, models.discriminative.as_deref(), rc).map_err(|e| Failure::at(Stage::Costs, e))
}

pub fn costs(rc: &RunConfig, transitions: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let s = load(rc).map_err(|e| Failure::at(Stage::Load, e))?;
    let models = fixed_models(&s, rc, transitions)?;
    let cm = assemble(&s, rc, &models)?;
    ensure_parent(out)?;
    write_json(&cm, out).map_err(|e| Failure::at(Stage::Write, e))?;
    println!("{} hypotheses, {} pairwise entries -> {}", cm.len(), cm.quadratic.nnz(), out.display());
    Ok(())
}

pub fn em_learn(rc: &RunConfig) -> Result<(), Failure> {
    let s = load(rc).map_err(|e| Failure::at(Stage::Load, e))?;
    let em = learn_transitions(&s, rc).map_err(|e| Failure::at(Stage::Transitions, e))?;
    for d in &em.diagnostics {
        let auc = d.cmc_auc_50.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".into());
        let sel = d.selected.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
        println!("round {}: auc50 {auc}, matched {sel}", d.round);
    }
    let linear = linear_costs(&s, &em.model, rc).map_err(|e| Failure::at(Stage::Discriminative, e))?;
    let discriminative = if rc.wants_discriminative() {
        Some(train_models(&s, &linear, rc).map_err(|e| Failure::at(Stage::Discriminative, e))?)
    } else {
        None
    };
    ensure_dir(&rc.out_dir)?;
    let path = rc.out_dir.join("model.json");
    let file = ModelFile {
        transitions: em.model,
        em: em.diagnostics,
        calibration: linear.calibration,
        discriminative,
    };
    write_json(&file, &path).map_err(|e| Failure::at(Stage::Write, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn solve(rc: &RunConfig, transitions: Option<&Path>, trace: bool) -> Result<(), Failure> {
    let s = load(rc).map_err(|e| Failure::at(Stage::Load, e))?;
    let models = fixed_models(&s, rc, transitions)?;
    let cm = assemble(&s, rc, &models)?;
    let gt = s.ground_truth.as_deref();
    let result = solve_stage(&cm, rc, gt).map_err(|e| Failure::at(Stage::Solve, e))?;
    ensure_dir(&rc.out_dir)?;
    let path = rc.out_dir.join("solution.json");
    write_json(&SolutionFile::new(&s, &cm, &result, rc.solver, rc.seed), &path).map_err(|e| Failure::at(Stage::Write, e))?;
    if trace {
        write_trace(&result.trace, &rc.out_dir.join("trace.csv")).map_err(|e| Failure::at(Stage::Write, e))?;
    }
    print!("{} matches, loss {:.6}", result.z.count(), result.loss);
    match gt {
        Some(gt) => println!(", F {:.4}", fscore_of(&cm, &result.z, gt).fscore),
        None => println!(),
    }
    Ok(())
}

pub fn eval(scenario: &Path, solution: &Path, costs: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let s = load_scenario(scenario).map_err(|e| Failure::at(Stage::Load, e))?;
    let gt = s.ground_truth.clone().ok_or_else(|| {
        Failure::at(Stage::Evaluate, Error::InvalidScenario(format!("{} has no ground truth", scenario.display())))
    })?;
    let sol = SolutionFile::load(solution).map_err(|e| Failure::at(Stage::Load, e))?;
    let pairs = sol.pairs(&s).map_err(|e| Failure::at(Stage::Load, e))?;
    let selected: Vec<Hypothesis> = pairs.iter().map(|&(a, b)| Hypothesis::new(a, b)).collect();
    let f = fscore(&selected, &gt);
    println!("precision {:.4}, recall {:.4}, F {:.4}", f.precision, f.recall, f.fscore);
    ensure_dir(out)?;
    let Some(p) = costs else {
        return write_json(&f, &out.join("fscore.json")).map_err(|e| Failure::at(Stage::Write, e));
    };
    let text = fs::read_to_string(p).map_err(|e| Failure::at(Stage::Load, Error::Io { path: p.into(), source: e }))?;
    let cm: CostModel =
        serde_json::from_str(&text).map_err(|e| Failure::at(Stage::Load, Error::Parse(format!("{}: {e}", p.display()))))?;
    let report = cmc_quadratic(&cm, &gt).with_assignment(f);
    println!("CMC rank-1 {:.4}, AUC50 {:.4}", report.cmc.first().copied().unwrap_or(0.0), report.auc_50);
    emit_report(&report, out.join("report.csv")).map_err(|e| Failure::at(Stage::Write, e))?;
    Ok(())
}

pub fn run(rc: &RunConfig) -> Result<(), Failure> {
    let summary = run_pipeline(rc)?;
    print!("{} matches, loss {:.6}", summary.matched, summary.loss);
    match summary.fscore {
        Some(f) => println!(", F {f:.4}"),
        None => println!(),
    }
    for p in &summary.artifacts {
        println!("wrote {}", p.display());
    }
    Ok(())
}

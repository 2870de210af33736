use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pse_reid::pipeline::{RunConfig, StageError, Stage};
use pse_reid::solvers::SolverKind;
use pse_reid::synth::SynthConfig;
use pse_reid::Error;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "pse-reid", version, about = "Match people across two non-overlapping cameras")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scenario and write its planted truth beside it.
    Synth(SynthArgs),
    /// Assemble linear and pairwise costs and dump them as JSON.
    Costs {
        #[command(flatten)]
        run: RunArgs,
        /// Learned models from `em-learn` or `run`; uniform transitions otherwise.
        #[arg(long, value_name = "MODEL_JSON")]
        transitions: Option<PathBuf>,
        /// Where to write the cost model [default: <out>/costs.json].
        #[arg(long, value_name = "PATH")]
        dump_costs: Option<PathBuf>,
    },
    /// Learn gate transitions (and discriminative models) and write model.json.
    EmLearn {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve with fixed models and write solution.json.
    Solve {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_name = "MODEL_JSON")]
        transitions: Option<PathBuf>,
        /// Also write the per-iteration trace to <out>/trace.csv.
        #[arg(long)]
        trace: bool,
    },
    /// Score a solution against the scenario's ground truth.
    Eval {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Cost model from `costs`; adds the CMC curve to the report.
        #[arg(long)]
        costs: Option<PathBuf>,
        /// Report directory [default: next to the solution].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage: EM, discriminative models, full costs, solve, report.
    Run {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args, Debug, Default, Clone)]
struct SynthArgs {
    /// Generator configuration (JSON, or TOML by extension).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Scenario path; the truth goes to <stem>.truth.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// People walking from camera a to camera b.
    #[arg(long)]
    people: Option<usize>,
    /// Share of people walking in groups.
    #[arg(long)]
    group_fraction: Option<f64>,
    /// Per-snapshot appearance noise.
    #[arg(long)]
    noise: Option<f64>,
    /// Include the camera topology.
    #[arg(long)]
    topology: bool,
}

#[derive(Args, Debug, Default, Clone)]
struct RunArgs {
    /// Run configuration (JSON, or TOML by extension). Relative paths inside
    /// it resolve against its directory.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Scenario JSON with both cameras' tracks.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Largest gap in frames between exit and entry.
    #[arg(long)]
    tau: Option<i64>,
    /// Final solver.
    #[arg(long, value_name = "munkres|sls|fw")]
    solver: Option<SolverKind>,
    /// Seed for the stochastic solvers.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long)]
    jobs: Option<usize>,
    /// Hypotheses kept per track; 0 keeps all.
    #[arg(long)]
    top_k: Option<usize>,
    /// Transition refinement rounds.
    #[arg(long)]
    em_rounds: Option<usize>,
    /// SVM regularization of the discriminative models.
    #[arg(long)]
    disc_c: Option<f64>,
    /// Positive bag size for the discriminative models.
    #[arg(long)]
    bag_size: Option<usize>,
    /// Term weight override, e.g. `--weight grp=-3`.
    #[arg(long = "weight", value_name = "TERM=VALUE")]
    weights: Vec<String>,
    /// Skip the discriminative appearance models.
    #[arg(long)]
    no_disc: bool,
    /// Ignore the scenario topology.
    #[arg(long)]
    no_topology: bool,
}

/// Process exit status with its message.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn at(stage: Stage, e: Error) -> Self {
        Failure::from(StageError { stage, source: e })
    }
}

fn code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 1,
        Error::Infeasible(_) | Error::TooLarge { .. } => 3,
        _ => 2,
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        let code = match e.stage {
            Stage::Config => 1,
            Stage::Solve => 3,
            _ => code_for(&e.source),
        };
        Failure { code, message: e.to_string() }
    }
}

fn resolve_against(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunArgs {
    /// Defaults, then the config file, then explicit flags.
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut rc = match &self.config {
            Some(path) => {
                let mut rc = RunConfig::from_file(path).map_err(|e| Failure::at(Stage::Config, e))?;
                let base = path.parent().unwrap_or(Path::new(""));
                resolve_against(base, &mut rc.scenario);
                resolve_against(base, &mut rc.out_dir);
                rc
            }
            None => RunConfig::default(),
        };
        if let Some(p) = &self.scenario {
            rc.scenario = p.clone();
        }
        if let Some(p) = &self.out {
            rc.out_dir = p.clone();
        }
        if let Some(v) = self.tau {
            rc.tau = v;
        }
        if let Some(v) = self.solver {
            rc.solver = v;
        }
        if let Some(v) = self.seed {
            rc.seed = v;
        }
        if let Some(v) = self.jobs {
            rc.jobs = Some(v);
        }
        if let Some(v) = self.top_k {
            rc.top_k = (v > 0).then_some(v);
        }
        if let Some(v) = self.em_rounds {
            rc.em.rounds = v;
        }
        if let Some(v) = self.disc_c {
            rc.disc_c = v;
        }
        if let Some(v) = self.bag_size {
            rc.bag_size = v;
        }
        if self.no_disc {
            rc.discriminative = false;
        }
        if self.no_topology {
            rc.topology = false;
        }
        if !self.weights.is_empty() {
            let mut table = serde_json::to_value(rc.weights).expect("weights serialize");
            for spec in &self.weights {
                let (name, value) = spec
                    .split_once('=')
                    .ok_or_else(|| Failure::config(format!("--weight expects TERM=VALUE, got `{spec}`")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| Failure::config(format!("--weight {name}: `{value}` is not a number")))?;
                match table.get_mut(name.trim()) {
                    Some(slot) => *slot = serde_json::json!(value),
                    None => return Err(Failure::config(format!("--weight: unknown term `{name}`"))),
                }
            }
            rc.weights = serde_json::from_value(table).map_err(|e| Failure::config(e.to_string()))?;
        }
        rc.validate().map_err(|e| Failure::at(Stage::Config, e))?;
        Ok(rc)
    }
}

impl SynthArgs {
    fn resolve(&self) -> Result<SynthConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => commands::read_config::<SynthConfig>(path)?,
            None => SynthConfig::default(),
        };
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.people {
            c.n_people = v;
        }
        if let Some(v) = self.group_fraction {
            c.group_fraction = v;
        }
        if let Some(v) = self.noise {
            c.feature_noise = v;
        }
        if self.topology {
            c.topology = true;
        }
        Ok(c)
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(args) => commands::synth(&args.resolve()?, &args.out),
        Command::Costs { run, transitions, dump_costs } => {
            let rc = run.resolve()?;
            let path = dump_costs.unwrap_or_else(|| rc.out_dir.join("costs.json"));
            commands::with_pool(&rc, || commands::costs(&rc, transitions.as_deref(), &path))
        }
        Command::EmLearn { run } => {
            let rc = run.resolve()?;
            commands::with_pool(&rc, || commands::em_learn(&rc))
        }
        Command::Solve { run, transitions, trace } => {
            let rc = run.resolve()?;
            commands::with_pool(&rc, || commands::solve(&rc, transitions.as_deref(), trace))
        }
        Command::Eval { scenario, solution, costs, out } => {
            let out = out.unwrap_or_else(|| solution.parent().unwrap_or(Path::new(".")).to_path_buf());
            commands::eval(&scenario, &solution, costs.as_deref(), &out)
        }
        Command::Run { run } => commands::run(&run.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

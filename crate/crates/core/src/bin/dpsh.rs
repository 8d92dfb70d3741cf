use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpsh::exec::Execution;
use dpsh::harness::{
    density_study, nmad_report, policy_compare, space_summary, DensityMode, Experiment, ExperimentConfig, HarnessError,
};
use dpsh::metaopt::{Optimizer, OptimizerKind};
use dpsh::rng::derive_seed;
use dpsh::twostage::{BudgetMode, Policy};

#[derive(Parser)]
#[command(
    name = "dpsh",
    version,
    about = "Data pipeline selection and hyperparameter optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the experiment's budget mode.
    #[arg(long, global = true, value_parser = parse_mode)]
    budget_mode: Option<BudgetMode>,
    /// Overrides the experiment's budget total (evaluations or seconds).
    #[arg(long, global = true)]
    budget_total: Option<f64>,
    /// Overrides the experiment's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Disable data-parallel execution.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// One two-stage run with the experiment's policy.
    Run {
        experiment: PathBuf,
        #[arg(long)]
        policy: Option<Policy>,
    },
    /// Score pipeline configurations with the learner at its default.
    Density(DensityArgs),
    /// Run several policies over several seeds.
    Compare {
        experiment: PathBuf,
        #[arg(long, value_delimiter = ',')]
        policies: Vec<Policy>,
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
    },
    /// Rank the optimal points of a fixture (`echr`, `newsgroup` or a path).
    Nmad { fixture: String },
    /// Print search-space cardinalities.
    Space { experiment: PathBuf },
}

#[derive(Args)]
struct DensityArgs {
    experiment: PathBuf,
    #[arg(long, conflicts_with = "budget")]
    exhaustive: bool,
    /// Evaluations beyond the baseline.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value = "tpe", value_parser = parse_optimizer)]
    optimizer: OptimizerKind,
    #[arg(long, default_value_t = 20)]
    bins: usize,
}

fn parse_mode(s: &str) -> Result<BudgetMode, String> {
    match s {
        "wall" => Ok(BudgetMode::Wall),
        "evals" => Ok(BudgetMode::Evals),
        _ => Err(format!("expected `wall` or `evals`, got `{s}`")),
    }
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "tpe" => Ok(OptimizerKind::Tpe),
        "random" => Ok(OptimizerKind::Random),
        _ => Err(format!("expected `tpe` or `random`, got `{s}`")),
    }
}

impl Cli {
    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn experiment(&self, path: &Path) -> Result<Experiment, HarnessError> {
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(m) = self.budget_mode {
            cfg.budget.mode = m;
        }
        if let Some(t) = self.budget_total {
            cfg.budget.total = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.build()
    }
}

fn write(path: &Path, body: &str) -> Result<(), HarnessError> {
    std::fs::write(path, body).map_err(|e| HarnessError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json") + "\n"
}

fn main_inner(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Run { experiment, policy } => {
            let exp = cli.experiment(experiment)?;
            let policy = policy.unwrap_or(exp.config.policy);
            let cmp = policy_compare(&exp, &[policy], &[exp.config.seed], cli.exec())?;
            let run = &cmp.runs[0];
            ensure_dir(&cli.out)?;
            write(&cli.out.join("trace.jsonl"), &cmp.jsonl(run))?;
            let summary = cmp.summary_json(run);
            write(&cli.out.join("summary.json"), &summary)?;
            print!("{summary}");
        }
        Command::Density(args) => {
            let exp = cli.experiment(&args.experiment)?;
            let mode = match (args.exhaustive, args.budget) {
                (true, _) => DensityMode::Exhaustive,
                (false, Some(n)) => DensityMode::Budget(n),
                (false, None) => DensityMode::Budget(exp.config.budget.total as usize),
            };
            let seed = exp.config.seed;
            let obj = exp.objective(seed, cli.exec())?;
            let optimizer = Optimizer {
                kind: args.optimizer,
                tpe: exp.config.optimizer.tpe.clone(),
                seed: derive_seed(seed, "optimizer/pipeline"),
            };
            let result = density_study(&obj, mode, &optimizer, cli.exec())?;
            let space = obj.pipelines().space();
            ensure_dir(&cli.out)?;
            write(&cli.out.join("density.csv"), &result.to_csv(space)?)?;
            write(&cli.out.join("histogram.csv"), &result.histogram_csv(args.bins)?)?;
            let summary = pretty(&result.summary(space));
            write(&cli.out.join("density_summary.json"), &summary)?;
            print!("{summary}");
        }
        Command::Compare {
            experiment,
            policies,
            seeds,
        } => {
            let exp = cli.experiment(experiment)?;
            let policies = if policies.is_empty() {
                vec![exp.config.policy]
            } else {
                policies.clone()
            };
            let seeds = if seeds.is_empty() {
                vec![exp.config.seed]
            } else {
                seeds.clone()
            };
            let cmp = policy_compare(&exp, &policies, &seeds, cli.exec())?;
            for path in cmp.write(&cli.out)? {
                println!("{}", path.display());
            }
        }
        Command::Nmad { fixture } => {
            let (set, report) = nmad_report(fixture)?;
            print!("{}", report.render(set.space()));
            ensure_dir(&cli.out)?;
            write(
                &cli.out.join(format!("nmad_{}.csv", set.name)),
                &report.to_csv(set.space())?,
            )?;
        }
        Command::Space { experiment } => {
            let exp = cli.experiment(experiment)?;
            print!("{}", pretty(&space_summary(&exp)));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

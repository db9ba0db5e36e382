use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use spml::dataio::{write_collection, SplitSpec};
use spml::experiment::{
    cmd_diagnostics, cmd_evaluate, cmd_sweep, cmd_train, Algorithm, ExperimentConfig, TrainOptions,
    DEFAULT_FRACTIONS, DEFAULT_GAMMA0_GRID, DEFAULT_GRID,
};
use spml::gplus::{convert_to_dataset, GplusOptions};
use spml::metric::MetricShape;
use spml::synthgen::{generate, SynthSpec};

#[derive(Parser)]
#[command(name = "spml", version, about = "Structure preserving metric learning on attributed networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train metrics on the training split and write them with their reports.
    Train {
        #[arg(long, default_value = "st-spml")]
        algo: Algorithm,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Score held-out nodes with previously trained metrics.
    Evaluate {
        #[arg(long, default_value = "st-spml")]
        algo: Algorithm,
        /// Directory holding the metric files; defaults to --out.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Train and evaluate every algorithm at every training fraction.
    Sweep {
        /// Algorithms to run (repeatable); all four by default.
        #[arg(long = "algo")]
        algos: Vec<Algorithm>,
        /// Training fractions (repeatable); 0.2 to 1.0 by default.
        #[arg(long = "fraction")]
        fractions: Vec<f64>,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Export the violated-constraint series of a training report.
    Diagnostics {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a Google+ ego network into a dataset, one task per circle.
    ConvertGplus {
        /// Directory with the `<ego>.feat`, `.egofeat`, `.circles`, `.edges` files.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        ego: String,
        #[arg(long)]
        out: PathBuf,
        /// Also link circle members that are friends.
        #[arg(long)]
        member_links: bool,
        #[arg(long, default_value_t = 2)]
        min_members: usize,
    },
    /// Generate a synthetic multi-task dataset with known metrics.
    Synth {
        #[arg(long, default_value_t = 3)]
        tasks: usize,
        #[arg(long, default_value_t = 60)]
        nodes: usize,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 0.5)]
        relatedness: f64,
        #[arg(long, default_value_t = 4)]
        mean_degree: usize,
        #[arg(long, default_value_t = 0.5)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value = "diag")]
    shape: MetricShape,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
    #[arg(long, default_value_t = 1.0)]
    train_frac: f64,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    batch: usize,
    /// Common-metric weight (repeatable: selection grid).
    #[arg(long)]
    gamma0: Vec<f64>,
    /// Per-task weight shared by all tasks (repeatable: selection grid).
    #[arg(long)]
    gamma: Vec<f64>,
    /// Single-task or pooled weight (repeatable: selection grid).
    #[arg(long)]
    lambda: Vec<f64>,
    #[arg(long)]
    project_every_step: bool,
    /// Rank only training nodes as candidates for a test node.
    #[arg(long)]
    train_candidates_only: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

fn grid_or(values: Vec<f64>, default: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        default.to_vec()
    } else {
        values
    }
}

impl ExperimentArgs {
    fn into_config(self, algorithm: Algorithm) -> ExperimentConfig {
        ExperimentConfig {
            manifest: self.manifest,
            algorithm,
            split: SplitSpec {
                test_fraction: self.test_frac,
                train_fraction: self.train_frac,
                folds: self.folds,
                seed: self.seed,
            },
            train: TrainOptions {
                shape: self.shape,
                iterations: self.iters,
                batch_size: self.batch,
                project_every_step: self.project_every_step,
                lambda_grid: grid_or(self.lambda, &DEFAULT_GRID),
                gamma0_grid: grid_or(self.gamma0, &DEFAULT_GAMMA0_GRID),
                gamma_grid: grid_or(self.gamma, &DEFAULT_GRID),
                seed: self.seed,
                ..TrainOptions::default()
            },
            out_dir: self.out,
            train_only_candidates: self.train_candidates_only,
            workers: self.workers,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train { algo, exp } => {
            let written = cmd_train(&exp.into_config(algo))?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Evaluate { algo, metrics, exp } => {
            let cfg = exp.into_config(algo);
            let dir = metrics.unwrap_or_else(|| cfg.out_dir.clone());
            for r in cmd_evaluate(&cfg, &dir)? {
                println!("task {}\tmean_auc {}\tevaluated {}\tskipped {}", r.task + 1, r.mean_auc, r.evaluated, r.skipped());
            }
        }
        Command::Sweep { algos, fractions, exp } => {
            let algos = if algos.is_empty() { Algorithm::ALL.to_vec() } else { algos };
            let fractions = if fractions.is_empty() { DEFAULT_FRACTIONS.to_vec() } else { fractions };
            let cfg = exp.into_config(algos[0]);
            let rows = cmd_sweep(&cfg, &algos, &fractions)?;
            println!("{} rows written to {}", rows.len(), cfg.out_dir.join("sweep.tsv").display());
        }
        Command::Diagnostics { report, out } => {
            let series = cmd_diagnostics(&report, &out)?;
            println!("{} series of length {}", series.len(), series.first().map_or(0, Vec::len));
        }
        Command::ConvertGplus { dir, ego, out, member_links, min_members } => {
            let manifest = convert_to_dataset(&dir, &ego, &out, &GplusOptions { member_links, min_members })?;
            println!("{}", manifest.display());
        }
        Command::Synth { tasks, nodes, dim, relatedness, mean_degree, density, seed, out } => {
            let spec = SynthSpec { tasks, nodes, dim, relatedness, mean_degree, density, seed, ..SynthSpec::default() };
            let inst = generate::<f64>(&spec).context("generating synthetic dataset")?;
            let manifest = write_collection(&inst.tasks, &out)?;
            for (q, m) in inst.truth.iter().enumerate() {
                m.write_file(&out.join(format!("truth_{}.txt", q + 1)))?;
            }
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

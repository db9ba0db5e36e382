//! End-to-end experiment driver behind the CLI: node-level splits, model
//! selection by cross-validation, training, evaluation, sweeps, and
//! diagnostics export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::dataio::{cv_folds, induced_training_graph, split_nodes, DatasetManifest, NodeSplit, SplitSpec};
use crate::error::{Result, SpmlError};
use crate::evaluation::{euclidean_metric, evaluate_task, CandidatePolicy, EvalResult};
use crate::graph::{AttributedGraph, TaskCollection};
use crate::metric::{MahalanobisMetric, MetricPair, MetricShape};
use crate::optimizer::{train_mtspml, train_spml, train_uspml, MtSpmlConfig, SpmlConfig, TrainReport};
use crate::sampler::{derive_seed, SamplingScheme};
use crate::scalar::Scalar;

pub const DEFAULT_GRID: [f64; 4] = [1e-3, 1e-2, 1e-1, 1.0];
/// The common-metric grid reaches past the per-task grid so that the
/// multi-task family contains near single-task fits for every per-task weight.
pub const DEFAULT_GAMMA0_GRID: [f64; 7] = [1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3];
pub const DEFAULT_ITERATIONS: usize = 5000;
pub const DEFAULT_BATCH: usize = 10;
pub const DEFAULT_FRACTIONS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    StSpml,
    USpml,
    MtSpml,
    Euclidean,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::StSpml, Algorithm::USpml, Algorithm::MtSpml, Algorithm::Euclidean];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::StSpml => "st-spml",
            Algorithm::USpml => "u-spml",
            Algorithm::MtSpml => "mt-spml",
            Algorithm::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = SpmlError;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| SpmlError::InvalidConfig(format!("unknown algorithm `{s}`")))
    }
}

/// Regularization weights for one fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    /// Single-task and pooled weight.
    pub lambda: f64,
    /// Common-metric weight (multi-task).
    pub gamma0: f64,
    /// Per-task weight shared by every task (multi-task).
    pub gamma: f64,
}

/// Optimizer and selection settings common to every algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub shape: MetricShape,
    pub iterations: usize,
    pub batch_size: usize,
    pub project_every_step: bool,
    pub sampling: SamplingScheme,
    pub lambda_grid: Vec<f64>,
    pub gamma0_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            shape: MetricShape::Diagonal,
            iterations: DEFAULT_ITERATIONS,
            batch_size: DEFAULT_BATCH,
            project_every_step: false,
            sampling: SamplingScheme::EdgeFirst,
            lambda_grid: DEFAULT_GRID.to_vec(),
            gamma0_grid: DEFAULT_GAMMA0_GRID.to_vec(),
            gamma_grid: DEFAULT_GRID.to_vec(),
            seed: 0,
        }
    }
}

impl TrainOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, grid) in [("lambda", &self.lambda_grid), ("gamma0", &self.gamma0_grid), ("gamma", &self.gamma_grid)]
        {
            if grid.is_empty() || grid.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(SpmlError::InvalidConfig(format!("{name} grid must be non-empty and positive")));
            }
        }
        if self.iterations == 0 || self.batch_size == 0 {
            return Err(SpmlError::InvalidConfig("iterations and batch size must be at least 1".into()));
        }
        Ok(())
    }

    fn candidates(&self, algorithm: Algorithm) -> Vec<Hyper> {
        let base = Hyper { lambda: self.lambda_grid[0], gamma0: self.gamma0_grid[0], gamma: self.gamma_grid[0] };
        match algorithm {
            Algorithm::Euclidean => vec![base],
            Algorithm::StSpml | Algorithm::USpml => {
                self.lambda_grid.iter().map(|&lambda| Hyper { lambda, ..base }).collect()
            }
            Algorithm::MtSpml => self
                .gamma0_grid
                .iter()
                .flat_map(|&gamma0| self.gamma_grid.iter().map(move |&gamma| Hyper { gamma0, gamma, ..base }))
                .collect(),
        }
    }

    fn spml_config<T: Scalar>(&self, lambda: f64, seed: u64) -> SpmlConfig<T> {
        SpmlConfig {
            lambda: T::from_f64_lossy(lambda),
            iterations: self.iterations,
            batch_size: self.batch_size,
            project_every_step: self.project_every_step,
            shape: self.shape,
            seed,
            sampling: self.sampling,
        }
    }
}

/// A fitted model able to score any task of the collection it was fit on.
#[derive(Debug, Clone)]
pub enum TrainedModel<T> {
    PerTask(Vec<MahalanobisMetric<T>>),
    Pooled(MahalanobisMetric<T>),
    MultiTask { common: MahalanobisMetric<T>, tasks: Vec<MahalanobisMetric<T>> },
    Euclidean { dim: usize },
}

impl<T: Scalar> TrainedModel<T> {
    pub fn evaluate(
        &self,
        q: usize,
        test: &[usize],
        g: &AttributedGraph<T>,
        policy: &CandidatePolicy,
    ) -> Result<EvalResult> {
        match self {
            TrainedModel::PerTask(ms) => evaluate_task(q, test, g, &ms[q], policy),
            TrainedModel::Pooled(m) => evaluate_task(q, test, g, m, policy),
            TrainedModel::MultiTask { common, tasks } => {
                evaluate_task(q, test, g, &MetricPair::new(common, &tasks[q])?, policy)
            }
            TrainedModel::Euclidean { dim } => evaluate_task(q, test, g, &euclidean_metric::<T>(*dim), policy),
        }
    }

    /// Metric files this model serializes to, as `(file name, metric)`.
    pub fn files(&self) -> Vec<(String, &MahalanobisMetric<T>)> {
        match self {
            TrainedModel::PerTask(ms) => ms.iter().enumerate().map(|(q, m)| (metric_file(q + 1), m)).collect(),
            TrainedModel::Pooled(m) => vec![("metric_pooled.txt".to_string(), m)],
            TrainedModel::MultiTask { common, tasks } => std::iter::once((metric_file(0), common))
                .chain(tasks.iter().enumerate().map(|(q, m)| (metric_file(q + 1), m)))
                .collect(),
            TrainedModel::Euclidean { .. } => Vec::new(),
        }
    }

    /// Reads back the files written by [`TrainedModel::files`].
    pub fn load(algorithm: Algorithm, dir: &Path, task_count: usize, dim: usize) -> Result<Self> {
        let read = |name: String| MahalanobisMetric::<T>::read_file(&dir.join(name));
        let model = match algorithm {
            Algorithm::Euclidean => return Ok(TrainedModel::Euclidean { dim }),
            Algorithm::StSpml => TrainedModel::PerTask((1..=task_count).map(|q| read(metric_file(q))).collect::<Result<_>>()?),
            Algorithm::USpml => TrainedModel::Pooled(read("metric_pooled.txt".into())?),
            Algorithm::MtSpml => TrainedModel::MultiTask {
                common: read(metric_file(0))?,
                tasks: (1..=task_count).map(|q| read(metric_file(q))).collect::<Result<_>>()?,
            },
        };
        let shape = model.files().first().map(|(_, m)| m.shape());
        for (name, m) in model.files() {
            if m.dim() != dim {
                return Err(SpmlError::DimensionMismatch { expected: dim, found: m.dim() });
            }
            if Some(m.shape()) != shape {
                return Err(SpmlError::ShapeMismatch(format!("{name} differs in shape from its siblings")));
            }
        }
        Ok(model)
    }
}

fn metric_file(q: usize) -> String {
    format!("metric_{q}.txt")
}

/// Training output: the model plus the reports it produced and the
/// hyperparameters used.
#[derive(Debug, Clone)]
pub struct Fit<T> {
    pub model: TrainedModel<T>,
    /// `(file stem, report)`.
    pub reports: Vec<(String, TrainReport<T>)>,
    pub hyper: Hyper,
    /// Tasks whose training graph had no triplets; they fall back to the
    /// Euclidean metric (single-task) or to the common metric alone.
    pub fallback_tasks: Vec<usize>,
}

fn is_sampleable<T: Scalar>(g: &AttributedGraph<T>) -> bool {
    let n = g.node_count();
    g.edges().iter().any(|&(a, b)| g.neighbors(a).len() + 2 <= n || g.neighbors(b).len() + 2 <= n)
}

/// Trains `algorithm` on one training graph per task.
pub fn fit<T: Scalar>(
    algorithm: Algorithm,
    train_graphs: &[AttributedGraph<T>],
    dim: usize,
    hyper: Hyper,
    opts: &TrainOptions,
) -> Result<Fit<T>> {
    let sampleable: Vec<usize> = (0..train_graphs.len()).filter(|&q| is_sampleable(&train_graphs[q])).collect();
    let fallback_tasks: Vec<usize> = (0..train_graphs.len()).filter(|q| !sampleable.contains(q)).collect();
    let mut reports = Vec::new();
    let model = match algorithm {
        Algorithm::Euclidean => TrainedModel::Euclidean { dim },
        Algorithm::StSpml => {
            let mut ms = Vec::with_capacity(train_graphs.len());
            for (q, g) in train_graphs.iter().enumerate() {
                if sampleable.contains(&q) {
                    let (m, rep) = train_spml(g, &opts.spml_config(hyper.lambda, derive_seed(opts.seed, q as u64)))?;
                    reports.push((format!("report_{}", q + 1), rep));
                    ms.push(m);
                } else {
                    ms.push(MahalanobisMetric::identity(opts.shape, dim));
                }
            }
            TrainedModel::PerTask(ms)
        }
        Algorithm::USpml => {
            let pooled = TaskCollection::new(sampleable.iter().map(|&q| train_graphs[q].clone()).collect())?;
            let (m, rep) = train_uspml(&pooled, &opts.spml_config(hyper.lambda, opts.seed))?;
            reports.push(("report_pooled".into(), rep));
            TrainedModel::Pooled(m)
        }
        Algorithm::MtSpml => {
            let active = TaskCollection::new(sampleable.iter().map(|&q| train_graphs[q].clone()).collect())?;
            let mut cfg = MtSpmlConfig::new(
                T::from_f64_lossy(hyper.gamma0),
                vec![T::from_f64_lossy(hyper.gamma); active.len()],
                opts.iterations,
                opts.batch_size,
            );
            cfg.project_every_step = opts.project_every_step;
            cfg.shape = opts.shape;
            cfg.seed = opts.seed;
            cfg.sampling = opts.sampling;
            cfg.task_seeds = Some(sampleable.iter().map(|&q| derive_seed(opts.seed, q as u64)).collect());
            let model = train_mtspml(&active, &cfg)?;
            let mut tasks = vec![MahalanobisMetric::zeros(opts.shape, dim); train_graphs.len()];
            for (k, &q) in sampleable.iter().enumerate() {
                tasks[q] = model.tasks[k].clone();
            }
            reports.push(("report_mt".into(), model.report));
            TrainedModel::MultiTask { common: model.common, tasks }
        }
    };
    Ok(Fit { model, reports, hyper, fallback_tasks })
}

/// Per-task node splits; task `q` uses a seed derived from the split seed.
pub fn split_tasks<T: Scalar>(tasks: &TaskCollection<T>, spec: &SplitSpec) -> Result<Vec<NodeSplit>> {
    tasks
        .tasks()
        .iter()
        .enumerate()
        .map(|(q, g)| split_nodes(g.node_count(), &SplitSpec { seed: derive_seed(spec.seed, q as u64), ..*spec }))
        .collect()
}

/// Short stable fingerprint of a node set, echoed in sweep tables.
pub fn node_set_hash(nodes: &[usize]) -> String {
    let mut h = Sha256::new();
    for v in nodes {
        h.update((*v as u64).to_le_bytes());
    }
    h.finalize().iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn mean_ignoring_nan(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values.into_iter().filter(|v| !v.is_nan()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

/// Picks the grid point with the best mean validation AUC over `folds`
/// folds of every task's training nodes. Validation nodes are ranked within
/// the training graph only. Ties keep the earliest grid point.
pub fn select_hyper<T: Scalar>(
    algorithm: Algorithm,
    train_graphs: &[AttributedGraph<T>],
    dim: usize,
    folds: usize,
    opts: &TrainOptions,
) -> Result<Hyper> {
    let candidates = opts.candidates(algorithm);
    if candidates.len() == 1 {
        return Ok(candidates[0]);
    }
    let all: Vec<usize> = (0..train_graphs.len()).collect();
    let per_task_folds = all
        .iter()
        .map(|&q| {
            let nodes: Vec<usize> = (0..train_graphs[q].node_count()).collect();
            cv_folds(&nodes, folds, derive_seed(opts.seed, q as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    let scores = candidates
        .par_iter()
        .map(|&hyper| {
            let mut fold_scores = Vec::with_capacity(folds);
            for f in 0..folds {
                let fit_graphs = all
                    .iter()
                    .map(|&q| induced_training_graph(&train_graphs[q], &per_task_folds[q][f].0).map(|(g, _)| g))
                    .collect::<Result<Vec<_>>>()?;
                let fitted = fit(algorithm, &fit_graphs, dim, hyper, opts)?;
                let mut task_scores = Vec::new();
                for &q in &all {
                    let res = fitted.model.evaluate(
                        q,
                        &per_task_folds[q][f].1,
                        &train_graphs[q],
                        &CandidatePolicy::AllOthers,
                    )?;
                    task_scores.push(res.mean_auc);
                }
                fold_scores.push(mean_ignoring_nan(task_scores));
            }
            Ok(mean_ignoring_nan(fold_scores))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] || (scores[best].is_nan() && !s.is_nan()) {
            best = k;
        }
    }
    Ok(candidates[best])
}

/// Everything one (algorithm, training fraction) run produces.
#[derive(Debug, Clone)]
pub struct CellResult<T> {
    pub algorithm: Algorithm,
    pub train_fraction: f64,
    pub fit: Fit<T>,
    pub splits: Vec<NodeSplit>,
    pub results: Vec<EvalResult>,
}

/// Splits every task, selects hyperparameters (when a grid has several
/// values), trains on the induced training graphs and evaluates the held
/// out nodes against the full ground-truth graphs.
pub fn run_cell<T: Scalar>(
    tasks: &TaskCollection<T>,
    algorithm: Algorithm,
    split: &SplitSpec,
    opts: &TrainOptions,
    policy_train_only: bool,
) -> Result<CellResult<T>> {
    opts.validate()?;
    let splits = split_tasks(tasks, split)?;
    let train_graphs = tasks
        .tasks()
        .iter()
        .zip(&splits)
        .map(|(g, s)| induced_training_graph(g, &s.train).map(|(sub, _)| sub))
        .collect::<Result<Vec<_>>>()?;
    let hyper = select_hyper(algorithm, &train_graphs, tasks.dim(), split.folds, opts)?;
    let fit = fit(algorithm, &train_graphs, tasks.dim(), hyper, opts)?;
    let results = evaluate_splits(&fit.model, tasks, &splits, policy_train_only)?;
    Ok(CellResult { algorithm, train_fraction: split.train_fraction, fit, splits, results })
}

pub fn evaluate_splits<T: Scalar>(
    model: &TrainedModel<T>,
    tasks: &TaskCollection<T>,
    splits: &[NodeSplit],
    train_only: bool,
) -> Result<Vec<EvalResult>> {
    tasks
        .tasks()
        .iter()
        .zip(splits)
        .enumerate()
        .map(|(q, (g, s))| {
            let policy =
                if train_only { CandidatePolicy::Restricted(s.train.clone()) } else { CandidatePolicy::AllOthers };
            model.evaluate(q, &s.test, g, &policy)
        })
        .collect()
}

/// Mean of the per-task mean AUCs.
pub fn overall_auc(results: &[EvalResult]) -> f64 {
    mean_ignoring_nan(results.iter().map(|r| r.mean_auc))
}

/// Full experiment configuration as assembled by the CLI.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub algorithm: Algorithm,
    pub split: SplitSpec,
    pub train: TrainOptions,
    pub out_dir: PathBuf,
    pub train_only_candidates: bool,
    pub workers: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.train.validate()?;
        let gammas_set = self.train.gamma0_grid != DEFAULT_GAMMA0_GRID || self.train.gamma_grid != DEFAULT_GRID;
        if gammas_set && self.algorithm != Algorithm::MtSpml {
            return Err(SpmlError::InvalidConfig(format!(
                "gamma weights only apply to mt-spml, not {}",
                self.algorithm.as_str()
            )));
        }
        if self.train.lambda_grid != DEFAULT_GRID && self.algorithm == Algorithm::MtSpml {
            return Err(SpmlError::InvalidConfig("mt-spml takes gamma weights, not lambda".into()));
        }
        if self.workers == 0 {
            return Err(SpmlError::InvalidConfig("worker count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn load_tasks<T: Scalar>(&self) -> Result<TaskCollection<T>> {
        DatasetManifest::read_file(&self.manifest)?.load()
    }
}

/// Writes a batch of files, removing the ones already written if any write
/// fails.
fn write_all(files: &[(PathBuf, String)]) -> Result<()> {
    for (k, (path, body)) in files.iter().enumerate() {
        if let Err(e) = std::fs::write(path, body) {
            for (done, _) in &files[..k] {
                let _ = std::fs::remove_file(done);
            }
            return Err(SpmlError::io(path, e));
        }
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| SpmlError::io(dir, e))
}

fn hyper_table(algorithm: Algorithm, fit_hyper: &Hyper, splits: &[NodeSplit], fallback: &[usize]) -> String {
    let mut out = String::from("algorithm\tlambda\tgamma0\tgamma\ttask\ttest_hash\tfallback\n");
    for (q, s) in splits.iter().enumerate() {
        let _ = writeln!(
            out,
            "{}\t{:e}\t{:e}\t{:e}\t{}\t{}\t{}",
            algorithm.as_str(),
            fit_hyper.lambda,
            fit_hyper.gamma0,
            fit_hyper.gamma,
            q + 1,
            node_set_hash(&s.test),
            u8::from(fallback.contains(&q))
        );
    }
    out
}

/// Trains on the configured split and writes metric files, training
/// reports and a `train_summary.tsv`. Returns the written paths.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    if cfg.algorithm == Algorithm::Euclidean {
        return Err(SpmlError::InvalidConfig("the euclidean baseline has nothing to train".into()));
    }
    let tasks = cfg.load_tasks::<f64>()?;
    let splits = split_tasks(&tasks, &cfg.split)?;
    let train_graphs = tasks
        .tasks()
        .iter()
        .zip(&splits)
        .map(|(g, s)| induced_training_graph(g, &s.train).map(|(sub, _)| sub))
        .collect::<Result<Vec<_>>>()?;
    let hyper = select_hyper(cfg.algorithm, &train_graphs, tasks.dim(), cfg.split.folds, &cfg.train)?;
    let fitted = fit(cfg.algorithm, &train_graphs, tasks.dim(), hyper, &cfg.train)?;

    let mut files: Vec<(PathBuf, String)> = fitted
        .model
        .files()
        .into_iter()
        .map(|(name, m)| (cfg.out_dir.join(name), m.to_text()))
        .collect();
    files.extend(fitted.reports.iter().map(|(stem, r)| (cfg.out_dir.join(format!("{stem}.tsv")), r.to_tsv())));
    files.push((
        cfg.out_dir.join("train_summary.tsv"),
        hyper_table(cfg.algorithm, &fitted.hyper, &splits, &fitted.fallback_tasks),
    ));
    ensure_dir(&cfg.out_dir)?;
    write_all(&files)?;
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Evaluates the held-out nodes with the metrics in `metrics_dir` (none
/// needed for the Euclidean baseline) and writes one `eval_<q>.tsv` per
/// task plus `eval_summary.tsv`.
pub fn cmd_evaluate(cfg: &ExperimentConfig, metrics_dir: &Path) -> Result<Vec<EvalResult>> {
    cfg.validate()?;
    let tasks = cfg.load_tasks::<f64>()?;
    let model = TrainedModel::<f64>::load(cfg.algorithm, metrics_dir, tasks.len(), tasks.dim())?;
    let splits = split_tasks(&tasks, &cfg.split)?;
    let results = evaluate_splits(&model, &tasks, &splits, cfg.train_only_candidates)?;

    let mut files: Vec<(PathBuf, String)> =
        results.iter().map(|r| (cfg.out_dir.join(format!("eval_{}.tsv", r.task + 1)), r.to_tsv())).collect();
    let mut summary = String::from("algorithm\ttask\tmean_auc\tevaluated\tskipped\ttest_hash\n");
    for (r, s) in results.iter().zip(&splits) {
        let _ = writeln!(
            summary,
            "{}\t{}\t{}\t{}\t{}\t{}",
            cfg.algorithm.as_str(),
            r.task + 1,
            r.mean_auc,
            r.evaluated,
            r.skipped(),
            node_set_hash(&s.test)
        );
    }
    files.push((cfg.out_dir.join("eval_summary.tsv"), summary));
    ensure_dir(&cfg.out_dir)?;
    write_all(&files)?;
    Ok(results)
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub algorithm: Algorithm,
    pub train_fraction: f64,
    pub task: usize,
    pub mean_auc: f64,
    pub evaluated: usize,
    pub skipped: usize,
    pub test_hash: String,
}

pub fn sweep_to_tsv(rows: &[SweepRow]) -> String {
    let mut out = String::from("algorithm\ttrain_frac\ttask\tmean_auc\tevaluated\tskipped\ttest_hash\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.algorithm.as_str(),
            r.train_fraction,
            r.task + 1,
            r.mean_auc,
            r.evaluated,
            r.skipped,
            r.test_hash
        );
    }
    out
}

/// Runs every (algorithm, fraction) cell as an independent job on a pool of
/// `workers` threads and collects one row per task. Row order follows the
/// input order regardless of scheduling.
pub fn run_sweep<T: Scalar>(
    tasks: &TaskCollection<T>,
    algorithms: &[Algorithm],
    fractions: &[f64],
    split: &SplitSpec,
    opts: &TrainOptions,
    train_only: bool,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    let cells: Vec<(Algorithm, f64)> =
        algorithms.iter().flat_map(|&a| fractions.iter().map(move |&f| (a, f))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SpmlError::InvalidConfig(e.to_string()))?;
    let per_cell = pool.install(|| {
        cells
            .par_iter()
            .map(|&(algorithm, fraction)| {
                let spec = SplitSpec { train_fraction: fraction, ..*split };
                let cell = run_cell(tasks, algorithm, &spec, opts, train_only)?;
                Ok(cell
                    .results
                    .iter()
                    .zip(&cell.splits)
                    .map(|(r, s)| SweepRow {
                        algorithm,
                        train_fraction: fraction,
                        task: r.task,
                        mean_auc: r.mean_auc,
                        evaluated: r.evaluated,
                        skipped: r.skipped(),
                        test_hash: node_set_hash(&s.test),
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(per_cell.into_iter().flatten().collect())
}

/// Sweep over training fractions and algorithms; writes `sweep.tsv`.
pub fn cmd_sweep(cfg: &ExperimentConfig, algorithms: &[Algorithm], fractions: &[f64]) -> Result<Vec<SweepRow>> {
    cfg.split.validate()?;
    cfg.train.validate()?;
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(SpmlError::InvalidConfig("sweep fractions must lie in (0, 1]".into()));
    }
    if algorithms.is_empty() {
        return Err(SpmlError::InvalidConfig("no algorithms to sweep".into()));
    }
    let tasks = cfg.load_tasks::<f64>()?;
    let rows = run_sweep(&tasks, algorithms, fractions, &cfg.split, &cfg.train, cfg.train_only_candidates, cfg.workers)?;
    ensure_dir(&cfg.out_dir)?;
    write_all(&[(cfg.out_dir.join("sweep.tsv"), sweep_to_tsv(&rows))])?;
    Ok(rows)
}

/// Violated-count series per tracked stream of a training report.
pub fn diagnostics_table(report: &TrainReport<f64>) -> String {
    let mut out = String::from("iteration");
    for q in 1..=report.streams() {
        let _ = write!(out, "\tviolated_{q}");
    }
    out.push('\n');
    for r in &report.records {
        let _ = write!(out, "{}", r.iteration);
        for v in &r.violated {
            let _ = write!(out, "\t{v}");
        }
        out.push('\n');
    }
    out
}

/// Reads a training report and writes `violations.tsv` into `out_dir`.
pub fn cmd_diagnostics(report_path: &Path, out_dir: &Path) -> Result<Vec<Vec<usize>>> {
    let report = TrainReport::<f64>::read_file(report_path)?;
    let series = (0..report.streams()).map(|q| report.violated_series(q)).collect();
    ensure_dir(out_dir)?;
    write_all(&[(out_dir.join("violations.tsv"), diagnostics_table(&report))])?;
    Ok(series)
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{batch_data_term, descend, finalize, step_size, IterationRecord, SpmlConfig, TrainReport};
use crate::error::{Result, SpmlError};
use crate::graph::{AttributedGraph, TaskCollection};
use crate::metric::MahalanobisMetric;
use crate::sampler::{derive_seed, SampleBatch, TripletSampler};
use crate::scalar::Scalar;

/// Stream index reserved for the pooled trainer's task chooser.
const TASK_CHOOSER_STREAM: u64 = u64::MAX;

/// Single-task stochastic subgradient descent. Starts from the identity,
/// uses `eta_t = 1/(lambda t)`, and projects onto the PSD cone either after
/// every step or once at the end.
pub fn train_spml<T: Scalar>(
    g: &AttributedGraph<T>,
    cfg: &SpmlConfig<T>,
) -> Result<(MahalanobisMetric<T>, TrainReport<T>)> {
    train_spml_with(g, cfg, |_, _| {})
}

/// [`train_spml`] with an observer called after every update with the
/// iteration index and the current metric.
pub fn train_spml_with<T: Scalar>(
    g: &AttributedGraph<T>,
    cfg: &SpmlConfig<T>,
    observer: impl FnMut(usize, &MahalanobisMetric<T>),
) -> Result<(MahalanobisMetric<T>, TrainReport<T>)> {
    cfg.validate()?;
    let mut sampler = TripletSampler::new(g, derive_seed(cfg.seed, 0), cfg.sampling)?;
    run(g.dim(), cfg, observer, |b| (g, sampler.sample_batch(0, b)))
}

/// Pooled baseline: one metric, each iteration's batch drawn from a task
/// picked uniformly at random. Triplets never mix tasks.
pub fn train_uspml<T: Scalar>(
    tasks: &TaskCollection<T>,
    cfg: &SpmlConfig<T>,
) -> Result<(MahalanobisMetric<T>, TrainReport<T>)> {
    train_uspml_with(tasks, cfg, |_, _| {})
}

pub fn train_uspml_with<T: Scalar>(
    tasks: &TaskCollection<T>,
    cfg: &SpmlConfig<T>,
    observer: impl FnMut(usize, &MahalanobisMetric<T>),
) -> Result<(MahalanobisMetric<T>, TrainReport<T>)> {
    cfg.validate()?;
    let mut samplers = Vec::new();
    for (q, g) in tasks.tasks().iter().enumerate() {
        match TripletSampler::new(g, derive_seed(cfg.seed, q as u64), cfg.sampling) {
            Ok(s) => samplers.push((q, s)),
            Err(SpmlError::Unsampleable) => {}
            Err(e) => return Err(e),
        }
    }
    if samplers.is_empty() {
        return Err(SpmlError::Unsampleable);
    }
    let mut chooser = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TASK_CHOOSER_STREAM));
    run(tasks.dim(), cfg, observer, |b| {
        // a single sampleable task draws nothing from the chooser, which keeps
        // Q = 1 identical to the single-task trainer
        let k = if samplers.len() == 1 { 0 } else { chooser.random_range(0..samplers.len()) };
        let (q, sampler) = &mut samplers[k];
        let g = sampler.graph();
        (g, sampler.sample_batch(*q, b))
    })
}

fn run<'g, T: Scalar + 'g>(
    dim: usize,
    cfg: &SpmlConfig<T>,
    mut observer: impl FnMut(usize, &MahalanobisMetric<T>),
    mut next_batch: impl FnMut(usize) -> (&'g AttributedGraph<T>, SampleBatch),
) -> Result<(MahalanobisMetric<T>, TrainReport<T>)> {
    let mut m = MahalanobisMetric::identity(cfg.shape, dim);
    let mut report = TrainReport::with_capacity(cfg.iterations);
    let mut hinge_total = T::zero();
    for t in 1..=cfg.iterations {
        let eta = step_size(cfg.lambda, t);
        let (g, batch) = next_batch(cfg.batch_size);
        let term = batch_data_term(g, &batch.triplets, &m, cfg.shape)?;
        let mut grad = term.gradient;
        grad.add_scaled(&m, cfg.lambda)?;
        descend(&mut m, &grad, eta, cfg.project_every_step, t)?;
        observer(t, &m);

        hinge_total = hinge_total + term.hinge_mean;
        report.records.push(IterationRecord {
            iteration: t,
            eta,
            violated: vec![term.violated],
            hinge_running: hinge_total / T::from_usize_lossy(t),
        });
    }
    if !cfg.project_every_step {
        finalize(&mut m, cfg.iterations)?;
        report.final_projection = true;
    }
    Ok((m, report))
}

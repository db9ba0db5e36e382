use rayon::prelude::*;

use super::{
    batch_data_term, descend, finalize, step_size, BatchTerm, IterationRecord, MtSpmlConfig, StepSchedule,
    TrainReport,
};
use crate::error::Result;
use crate::graph::TaskCollection;
use crate::metric::{MahalanobisMetric, MetricPair};
use crate::sampler::{derive_seed, SampleBatch, TripletSampler};
use crate::scalar::Scalar;

/// Learned common metric, per-task metrics and the training trace.
#[derive(Debug, Clone)]
pub struct MtSpmlModel<T> {
    pub common: MahalanobisMetric<T>,
    pub tasks: Vec<MahalanobisMetric<T>>,
    pub report: TrainReport<T>,
}

impl<T: Scalar> MtSpmlModel<T> {
    pub fn pair(&self, q: usize) -> MetricPair<'_, T> {
        MetricPair { common: &self.common, specific: &self.tasks[q] }
    }
}

/// Multi-task stochastic subgradient descent.
///
/// Each iteration draws `B` triplets per task, judges violations under
/// `M_0 + M_q` with the previous iterate, steps every `M_q` with its partial
/// subgradient, then steps `M_0` using the same `Q x B` triplets.
pub fn train_mtspml<T: Scalar>(tasks: &TaskCollection<T>, cfg: &MtSpmlConfig<T>) -> Result<MtSpmlModel<T>> {
    train_mtspml_with(tasks, cfg, |_, _, _| {})
}

pub fn train_mtspml_with<T: Scalar>(
    tasks: &TaskCollection<T>,
    cfg: &MtSpmlConfig<T>,
    mut observer: impl FnMut(usize, &MahalanobisMetric<T>, &[MahalanobisMetric<T>]),
) -> Result<MtSpmlModel<T>> {
    let q_count = tasks.len();
    cfg.validate(q_count)?;
    let mut samplers = tasks
        .tasks()
        .iter()
        .enumerate()
        .map(|(q, g)| {
            let seed = match &cfg.task_seeds {
                Some(seeds) => seeds[q],
                None => derive_seed(cfg.seed, q as u64),
            };
            TripletSampler::new(g, seed, cfg.sampling)
        })
        .collect::<Result<Vec<_>>>()?;

    let dim = tasks.dim();
    let mut common = MahalanobisMetric::identity(cfg.shape, dim);
    let mut specific = vec![MahalanobisMetric::identity(cfg.shape, dim); q_count];
    let mut report = TrainReport::with_capacity(cfg.iterations);
    let mut hinge_total = T::zero();

    for t in 1..=cfg.iterations {
        let batches: Vec<SampleBatch> = samplers
            .iter_mut()
            .enumerate()
            .map(|(q, s)| s.sample_batch(q, cfg.batch_size))
            .collect();

        let term_for = |batch: &SampleBatch| -> Result<BatchTerm<T>> {
            let pair = MetricPair { common: &common, specific: &specific[batch.task] };
            batch_data_term(&tasks.tasks()[batch.task], &batch.triplets, &pair, cfg.shape)
        };
        let terms: Vec<BatchTerm<T>> = if cfg.parallel {
            batches.par_iter().map(term_for).collect::<Result<_>>()?
        } else {
            batches.iter().map(term_for).collect::<Result<_>>()?
        };

        for (q, (mq, term)) in specific.iter_mut().zip(&terms).enumerate() {
            let eta = match cfg.schedule {
                StepSchedule::PerWeight => step_size(cfg.gammas[q], t),
                StepSchedule::Shared(l) => step_size(l, t),
            };
            let mut grad = term.gradient.clone();
            grad.add_scaled(mq, cfg.gammas[q])?;
            descend(mq, &grad, eta, cfg.project_every_step, t)?;
        }

        let eta0 = match cfg.schedule {
            StepSchedule::PerWeight => step_size(cfg.gamma0, t),
            StepSchedule::Shared(l) => step_size(l, t),
        };
        if !cfg.freeze_common {
            let mut grad = common.clone();
            grad.add_identity(-T::one());
            grad.scale(cfg.gamma0);
            for term in &terms {
                grad.add_scaled(&term.gradient, T::one())?;
            }
            descend(&mut common, &grad, eta0, cfg.project_every_step, t)?;
        }
        observer(t, &common, &specific);

        let batch_hinge = terms.iter().map(|term| term.hinge_mean).sum::<T>() / T::from_usize_lossy(q_count);
        hinge_total = hinge_total + batch_hinge;
        report.records.push(IterationRecord {
            iteration: t,
            eta: eta0,
            violated: terms.iter().map(|term| term.violated).collect(),
            hinge_running: hinge_total / T::from_usize_lossy(t),
        });
    }

    if !cfg.project_every_step {
        finalize(&mut common, cfg.iterations)?;
        for m in &mut specific {
            finalize(m, cfg.iterations)?;
        }
        report.final_projection = true;
    }
    Ok(MtSpmlModel { common, tasks: specific, report })
}

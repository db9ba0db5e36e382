//! Hinge objectives and their subgradients, single-task and multi-task.

use crate::error::{Result, SpmlError};
use crate::graph::{AttributedGraph, TaskCollection};
use crate::metric::{MahalanobisMetric, MetricPair, MetricShape, PairDistance};
use crate::sampler::{SampleBatch, Triplet};
use crate::scalar::Scalar;

/// Hinge data term of one batch: the averaged outer-product differences of
/// its violated triplets, plus bookkeeping for reports.
#[derive(Debug, Clone)]
pub struct BatchTerm<T> {
    pub gradient: MahalanobisMetric<T>,
    pub violated: usize,
    pub hinge_mean: T,
}

/// Averages `(x_i - x_l)(x_i - x_l)^T - (x_i - x_j)(x_i - x_j)^T` over the
/// violated triplets of `triplets`, dividing by the batch size.
pub fn batch_data_term<T: Scalar, D: PairDistance<T> + ?Sized>(
    g: &AttributedGraph<T>,
    triplets: &[Triplet],
    dist: &D,
    shape: MetricShape,
) -> Result<BatchTerm<T>> {
    let mut gradient = MahalanobisMetric::zeros(shape, dist.dim());
    if triplets.is_empty() {
        return Ok(BatchTerm { gradient, violated: 0, hinge_mean: T::zero() });
    }
    let mut violated = 0;
    let mut hinge_sum = T::zero();
    for t in triplets {
        let xi = g.attribute(t.i);
        let diff_il = xi.difference(g.attribute(t.l))?;
        let diff_ij = xi.difference(g.attribute(t.j))?;
        let arg = dist.form(&diff_il) - dist.form(&diff_ij) + T::one();
        if arg > T::zero() {
            violated += 1;
            hinge_sum = hinge_sum + arg;
            gradient.add_outer(&diff_il, T::one());
            gradient.add_outer(&diff_ij, -T::one());
        }
    }
    let inv_b = T::one() / T::from_usize_lossy(triplets.len());
    gradient.scale(inv_b);
    Ok(BatchTerm { gradient, violated, hinge_mean: hinge_sum * inv_b })
}

fn mean_hinge<T: Scalar, D: PairDistance<T> + ?Sized>(
    g: &AttributedGraph<T>,
    triplets: &[Triplet],
    dist: &D,
) -> Result<T> {
    let mut sum = T::zero();
    for t in triplets {
        let xi = g.attribute(t.i);
        let d_il = dist.distance(xi, g.attribute(t.l))?;
        let d_ij = dist.distance(xi, g.attribute(t.j))?;
        sum = sum + (d_il - d_ij + T::one()).max(T::zero());
    }
    Ok(sum / T::from_usize_lossy(triplets.len()))
}

/// `lambda/2 ||M||_F^2 + mean_{S} max(d(x_i,x_l) - d(x_i,x_j) + 1, 0)`.
pub fn spml_objective<T: Scalar>(
    m: &MahalanobisMetric<T>,
    g: &AttributedGraph<T>,
    triplets: &[Triplet],
    lambda: T,
) -> Result<T> {
    if triplets.is_empty() {
        return Err(SpmlError::EmptyTriplets(String::new()));
    }
    Ok(lambda * T::half() * m.frobenius_sq() + mean_hinge(g, triplets, m)?)
}

/// Stochastic subgradient `lambda M + (1/B) sum_{violated} (...)` on a batch.
pub fn spml_subgradient<T: Scalar>(
    m: &MahalanobisMetric<T>,
    g: &AttributedGraph<T>,
    batch: &SampleBatch,
    lambda: T,
) -> Result<MahalanobisMetric<T>> {
    let term = batch_data_term(g, &batch.triplets, m, m.shape())?;
    let mut grad = term.gradient;
    grad.add_scaled(m, lambda)?;
    Ok(grad)
}

fn check_task_metrics<T: Scalar>(
    m0: &MahalanobisMetric<T>,
    task_metrics: &[MahalanobisMetric<T>],
    tasks: &TaskCollection<T>,
) -> Result<()> {
    if task_metrics.len() != tasks.len() {
        return Err(SpmlError::InvalidConfig(format!(
            "{} task metrics for {} tasks",
            task_metrics.len(),
            tasks.len()
        )));
    }
    for m in task_metrics {
        m0.check_compatible(m)?;
    }
    if m0.dim() != tasks.dim() {
        return Err(SpmlError::DimensionMismatch { expected: tasks.dim(), found: m0.dim() });
    }
    Ok(())
}

/// Multi-task objective: `gamma0/2 ||M_0 - I||^2 + sum_q gamma_q/2 ||M_q||^2`
/// plus, for every task, its mean hinge under `M_0 + M_q`.
pub fn mtspml_objective<T: Scalar>(
    m0: &MahalanobisMetric<T>,
    task_metrics: &[MahalanobisMetric<T>],
    tasks: &TaskCollection<T>,
    triplet_sets: &[Vec<Triplet>],
    gamma0: T,
    gammas: &[T],
) -> Result<T> {
    check_task_metrics(m0, task_metrics, tasks)?;
    if triplet_sets.len() != tasks.len() || gammas.len() != tasks.len() {
        return Err(SpmlError::InvalidConfig("need one triplet set and one gamma per task".into()));
    }
    let mut total = gamma0 * T::half() * m0.frobenius_sq_from_identity();
    for (q, (mq, set)) in task_metrics.iter().zip(triplet_sets).enumerate() {
        if set.is_empty() {
            return Err(SpmlError::EmptyTriplets(format!(" for task {}", q + 1)));
        }
        let pair = MetricPair::new(m0, mq)?;
        total = total + gammas[q] * T::half() * mq.frobenius_sq() + mean_hinge(tasks.task(q)?, set, &pair)?;
    }
    Ok(total)
}

/// Partial subgradient with respect to the common metric: `gamma0 (M_0 - I)`
/// plus the summed per-task data terms, violations judged under `M_0 + M_q`.
pub fn mtspml_subgradient_common<T: Scalar>(
    m0: &MahalanobisMetric<T>,
    task_metrics: &[MahalanobisMetric<T>],
    tasks: &TaskCollection<T>,
    batches: &[SampleBatch],
    gamma0: T,
) -> Result<MahalanobisMetric<T>> {
    check_task_metrics(m0, task_metrics, tasks)?;
    let mut grad = m0.clone();
    grad.add_identity(-T::one());
    grad.scale(gamma0);
    for batch in batches {
        let mq = task_metrics
            .get(batch.task)
            .ok_or(SpmlError::TaskOutOfRange { index: batch.task, count: tasks.len() })?;
        let pair = MetricPair::new(m0, mq)?;
        let term = batch_data_term(tasks.task(batch.task)?, &batch.triplets, &pair, m0.shape())?;
        grad.add_scaled(&term.gradient, T::one())?;
    }
    Ok(grad)
}

/// Partial subgradient with respect to task metric `M_q`: `gamma_q M_q` plus
/// the task-`q` data term (identical to its summand in the common gradient).
pub fn mtspml_subgradient_task<T: Scalar>(
    m0: &MahalanobisMetric<T>,
    mq: &MahalanobisMetric<T>,
    task: &AttributedGraph<T>,
    batch: &SampleBatch,
    gamma_q: T,
) -> Result<MahalanobisMetric<T>> {
    let pair = MetricPair::new(m0, mq)?;
    let term = batch_data_term(task, &batch.triplets, &pair, mq.shape())?;
    let mut grad = term.gradient;
    grad.add_scaled(mq, gamma_q)?;
    Ok(grad)
}

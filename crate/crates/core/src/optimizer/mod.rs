//! Stochastic subgradient training: single-task, pooled, and multi-task.

mod mtspml;
mod objective;
mod report;
mod spml;

pub use mtspml::{train_mtspml, train_mtspml_with, MtSpmlModel};
pub use objective::{
    batch_data_term, mtspml_objective, mtspml_subgradient_common, mtspml_subgradient_task, spml_objective,
    spml_subgradient, BatchTerm,
};
pub use report::{IterationRecord, TrainReport};
pub use spml::{train_spml, train_spml_with, train_uspml, train_uspml_with};

use crate::error::{Result, SpmlError};
use crate::metric::{psd_project, symmetrize_in_place, MahalanobisMetric, MetricShape};
use crate::sampler::SamplingScheme;
use crate::scalar::Scalar;

/// Settings for single-task (and pooled) training.
#[derive(Debug, Clone, PartialEq)]
pub struct SpmlConfig<T> {
    pub lambda: T,
    pub iterations: usize,
    pub batch_size: usize,
    pub project_every_step: bool,
    pub shape: MetricShape,
    pub seed: u64,
    pub sampling: SamplingScheme,
}

impl<T: Scalar> SpmlConfig<T> {
    pub fn new(lambda: T, iterations: usize, batch_size: usize) -> Self {
        Self {
            lambda,
            iterations,
            batch_size,
            project_every_step: false,
            shape: MetricShape::Diagonal,
            seed: 0,
            sampling: SamplingScheme::EdgeFirst,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(SpmlError::InvalidConfig(format!("lambda must be positive, got {}", self.lambda)));
        }
        check_counts(self.iterations, self.batch_size)
    }
}

/// How the multi-task step sizes are derived.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum StepSchedule<T> {
    /// `eta_q = 1/(gamma_q t)`, `eta_0 = 1/(gamma_0 t)`.
    #[default]
    PerWeight,
    /// One `1/(lambda t)` for every metric.
    Shared(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtSpmlConfig<T> {
    pub gamma0: T,
    pub gammas: Vec<T>,
    pub iterations: usize,
    pub batch_size: usize,
    pub project_every_step: bool,
    pub shape: MetricShape,
    pub seed: u64,
    pub sampling: SamplingScheme,
    pub schedule: StepSchedule<T>,
    /// Keep `M_0` pinned at its initial identity value.
    pub freeze_common: bool,
    /// Per-task sampler seeds; derived from `seed` when absent.
    pub task_seeds: Option<Vec<u64>>,
    /// Compute the per-task data terms on the rayon pool. Results are
    /// bit-identical to the sequential path.
    pub parallel: bool,
}

impl<T: Scalar> MtSpmlConfig<T> {
    pub fn new(gamma0: T, gammas: Vec<T>, iterations: usize, batch_size: usize) -> Self {
        Self {
            gamma0,
            gammas,
            iterations,
            batch_size,
            project_every_step: false,
            shape: MetricShape::Diagonal,
            seed: 0,
            sampling: SamplingScheme::EdgeFirst,
            schedule: StepSchedule::PerWeight,
            freeze_common: false,
            task_seeds: None,
            parallel: false,
        }
    }

    pub fn validate(&self, task_count: usize) -> Result<()> {
        if self.gammas.len() != task_count {
            return Err(SpmlError::InvalidConfig(format!(
                "{} per-task gammas for {} tasks",
                self.gammas.len(),
                task_count
            )));
        }
        let positive = |v: T| v > T::zero() && v.is_finite();
        if !self.freeze_common && !positive(self.gamma0) {
            return Err(SpmlError::InvalidConfig(format!("gamma0 must be positive, got {}", self.gamma0)));
        }
        if let Some(bad) = self.gammas.iter().find(|&&g| !positive(g)) {
            return Err(SpmlError::InvalidConfig(format!("per-task gamma must be positive, got {bad}")));
        }
        if let StepSchedule::Shared(l) = self.schedule {
            if !positive(l) {
                return Err(SpmlError::InvalidConfig(format!("shared step lambda must be positive, got {l}")));
            }
        }
        if let Some(seeds) = &self.task_seeds {
            if seeds.len() != task_count {
                return Err(SpmlError::InvalidConfig("one sampler seed per task required".into()));
            }
        }
        check_counts(self.iterations, self.batch_size)
    }
}

fn check_counts(iterations: usize, batch_size: usize) -> Result<()> {
    if iterations == 0 {
        return Err(SpmlError::InvalidConfig("iteration count must be at least 1".into()));
    }
    if batch_size == 0 {
        return Err(SpmlError::InvalidConfig("batch size must be at least 1".into()));
    }
    Ok(())
}

/// `1 / (weight * t)`.
pub fn step_size<T: Scalar>(weight: T, t: usize) -> T {
    T::one() / (weight * T::from_usize_lossy(t))
}

/// `m -= eta * grad`, then re-symmetrize and optionally project.
fn descend<T: Scalar>(
    m: &mut MahalanobisMetric<T>,
    grad: &MahalanobisMetric<T>,
    eta: T,
    project: bool,
    iteration: usize,
) -> Result<()> {
    m.add_scaled(grad, -eta)?;
    symmetrize_in_place(m);
    if !m.is_finite() {
        return Err(SpmlError::NonFinite { iteration });
    }
    if project {
        *m = psd_project(m)?;
    }
    Ok(())
}

fn finalize<T: Scalar>(m: &mut MahalanobisMetric<T>, iteration: usize) -> Result<()> {
    symmetrize_in_place(m);
    if !m.is_finite() {
        return Err(SpmlError::NonFinite { iteration });
    }
    *m = psd_project(m)?;
    Ok(())
}

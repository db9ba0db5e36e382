//! Structure preserving metric learning on attributed networks.
//!
//! Learns Mahalanobis metrics over node attributes such that connecting each
//! node to its nearest neighbors reproduces the network, for one network
//! ([`train_spml`]), a pooled set of networks ([`train_uspml`]), or jointly
//! over related networks through a shared common metric ([`train_mtspml`]).
//!
//! Numeric code is generic over [`Scalar`] (`f64` and `f32`); the aliases
//! below fix the precision for the common case.

pub mod dataio;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod gplus;
pub mod graph;
pub mod linalg;
pub mod metric;
pub mod optimizer;
pub mod sampler;
pub mod scalar;
pub mod sparse;
pub mod synthgen;

pub use error::{Result, SpmlError};
pub use evaluation::{
    auc_for_node, evaluate_task, knn_connect, rank_candidates, structure_preserved, CandidatePolicy, EvalResult,
};
pub use graph::{build_graph, degree, AttributedGraph, NodeRef, TaskCollection};
pub use metric::{
    distance, distance_mt, psd_project, symmetrize, MahalanobisMetric, MetricPair, MetricShape, PairDistance,
};
pub use optimizer::{
    mtspml_objective, mtspml_subgradient_common, mtspml_subgradient_task, spml_objective, spml_subgradient,
    train_mtspml, train_spml, train_uspml, MtSpmlConfig, MtSpmlModel, SpmlConfig, StepSchedule, TrainReport,
};
pub use sampler::{enumerate_triplets, is_violated, sample_triplet, SampleBatch, SamplingScheme, Triplet, TripletSampler};
pub use scalar::Scalar;
pub use sparse::SparseVec;

pub type Metric = MahalanobisMetric<f64>;
pub type MetricF32 = MahalanobisMetric<f32>;
pub type Graph = AttributedGraph<f64>;
pub type GraphF32 = AttributedGraph<f32>;
pub type Tasks = TaskCollection<f64>;
pub type Attributes = SparseVec<f64>;
pub type Report = TrainReport<f64>;

//! Structure recovery with the k-NN connector and per-node link-prediction
//! AUC computed from attributes alone.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Result, SpmlError};
use crate::graph::AttributedGraph;
use crate::metric::{MahalanobisMetric, MetricShape, PairDistance};
use crate::scalar::Scalar;
use crate::sparse::SparseVec;

/// A candidate with its distance to the query node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ranked<T> {
    pub node: usize,
    pub distance: T,
}

/// Ascending distance, ties (and NaN) broken by node index.
fn by_distance_then_index<T: Scalar>(a: &Ranked<T>, b: &Ranked<T>) -> Ordering {
    a.distance
        .partial_cmp(&b.distance)
        .unwrap_or_else(|| a.distance.is_nan().cmp(&b.distance.is_nan()))
        .then(a.node.cmp(&b.node))
}

/// Sorts `candidates` by distance to `query`.
pub fn rank_candidates<T: Scalar, D: PairDistance<T> + ?Sized>(
    query: &SparseVec<T>,
    candidates: &[usize],
    attributes: &[SparseVec<T>],
    dist: &D,
) -> Result<Vec<Ranked<T>>> {
    let mut ranked = candidates
        .iter()
        .map(|&node| {
            let x = attributes
                .get(node)
                .ok_or(SpmlError::NodeOutOfRange { index: node, n: attributes.len() })?;
            Ok(Ranked { node, distance: dist.distance(query, x)? })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(by_distance_then_index);
    Ok(ranked)
}

fn top_k<T: Scalar, D: PairDistance<T> + ?Sized>(
    points: &[SparseVec<T>],
    dist: &D,
    i: usize,
    k: usize,
) -> Result<Vec<usize>> {
    let others: Vec<usize> = (0..points.len()).filter(|&j| j != i).collect();
    let ranked = rank_candidates(&points[i], &others, points, dist)?;
    Ok(ranked.into_iter().take(k).map(|r| r.node).collect())
}

fn union_symmetrize(n: usize, picks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for (i, list) in picks.into_iter().enumerate() {
        for j in list {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Links every node to its `k` nearest neighbors and symmetrizes by union.
pub fn knn_connect<T: Scalar, D: PairDistance<T> + ?Sized>(
    points: &[SparseVec<T>],
    dist: &D,
    k: usize,
) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if k >= n {
        return Err(SpmlError::InvalidK { k, n });
    }
    knn_connect_per_node(points, dist, &vec![k; n])
}

/// [`knn_connect`] with an individual `k` per node.
pub fn knn_connect_per_node<T: Scalar, D: PairDistance<T> + ?Sized>(
    points: &[SparseVec<T>],
    dist: &D,
    ks: &[usize],
) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if ks.len() != n {
        return Err(SpmlError::DimensionMismatch { expected: n, found: ks.len() });
    }
    if let Some(&k) = ks.iter().find(|&&k| k >= n.max(1)) {
        return Err(SpmlError::InvalidK { k, n });
    }
    let picks = (0..n)
        .into_par_iter()
        .map(|i| if ks[i] == 0 { Ok(Vec::new()) } else { top_k(points, dist, i, ks[i]) })
        .collect::<Result<Vec<_>>>()?;
    Ok(union_symmetrize(n, picks))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureCheck {
    pub preserved: bool,
    /// Size of the symmetric difference between predicted and true
    /// neighbor lists, per node.
    pub per_node: Vec<usize>,
    pub mismatched_nodes: usize,
}

/// Reconnects the graph with each node's `k` set to its true degree and
/// compares against the real adjacency.
pub fn structure_preserved<T: Scalar, D: PairDistance<T> + ?Sized>(
    g: &AttributedGraph<T>,
    dist: &D,
) -> Result<StructureCheck> {
    let n = g.node_count();
    let ks: Vec<usize> = (0..n).map(|i| g.neighbors(i).len()).collect();
    let predicted = knn_connect_per_node(g.attributes(), dist, &ks)?;
    let per_node: Vec<usize> = predicted
        .iter()
        .enumerate()
        .map(|(i, p)| symmetric_difference_len(p, g.neighbors(i)))
        .collect();
    let mismatched_nodes = per_node.iter().filter(|&&c| c > 0).count();
    Ok(StructureCheck { preserved: mismatched_nodes == 0, per_node, mismatched_nodes })
}

fn symmetric_difference_len(a: &[usize], b: &[usize]) -> usize {
    let (mut p, mut q, mut count) = (0, 0, 0);
    while p < a.len() && q < b.len() {
        match a[p].cmp(&b[q]) {
            Ordering::Less => {
                count += 1;
                p += 1;
            }
            Ordering::Greater => {
                count += 1;
                q += 1;
            }
            Ordering::Equal => {
                p += 1;
                q += 1;
            }
        }
    }
    count + (a.len() - p) + (b.len() - q)
}

/// Mann-Whitney AUC of one ranking: the fraction of (positive, negative)
/// pairs with the positive closer, equal distances counting one half.
/// `None` when the ranking lacks positives or negatives.
pub fn auc_for_node<T: Scalar>(ranking: &[Ranked<T>], positives: &[usize]) -> Option<f64> {
    let mut sorted = positives.to_vec();
    sorted.sort_unstable();
    let is_pos = |node: usize| sorted.binary_search(&node).is_ok();
    let total_pos = ranking.iter().filter(|r| is_pos(r.node)).count();
    let total_neg = ranking.len() - total_pos;
    if total_pos == 0 || total_neg == 0 {
        return None;
    }
    let mut negatives_seen = 0usize;
    let mut score = 0.0f64;
    let mut start = 0;
    while start < ranking.len() {
        let mut end = start + 1;
        while end < ranking.len() && ranking[end].distance == ranking[start].distance {
            end += 1;
        }
        let group_pos = ranking[start..end].iter().filter(|r| is_pos(r.node)).count();
        let group_neg = (end - start) - group_pos;
        // positives beat every negative after their tie group
        let after = total_neg - negatives_seen - group_neg;
        score += group_pos as f64 * (after as f64 + 0.5 * group_neg as f64);
        negatives_seen += group_neg;
        start = end;
    }
    Some(score / (total_pos as f64 * total_neg as f64))
}

/// Which nodes a test node's ranking may contain.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CandidatePolicy {
    /// Every other node of the task.
    #[default]
    AllOthers,
    /// Only the listed nodes (e.g. the training set), minus the test node.
    Restricted(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAuc {
    pub node: usize,
    /// `None` when the node had no positive or no negative candidate.
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub task: usize,
    pub per_node: Vec<NodeAuc>,
    /// Mean over evaluated nodes; NaN when every node was skipped.
    pub mean_auc: f64,
    pub evaluated: usize,
    pub skipped_no_positives: usize,
    pub skipped_no_negatives: usize,
}

impl EvalResult {
    pub fn skipped(&self) -> usize {
        self.skipped_no_positives + self.skipped_no_negatives
    }

    /// Tab-delimited `node auc` table over the evaluated nodes; skipped
    /// nodes only show up in the counts.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("node\tauc\n");
        for r in &self.per_node {
            if let Some(a) = r.auc {
                let _ = writeln!(out, "{}\t{a}", r.node);
            }
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| SpmlError::io(path, e))
    }
}

/// Ranks, for every test node, the candidate nodes by distance from its
/// attributes and scores the ranking against its true neighbors. Only the
/// test node's attributes are used; its links serve solely as labels.
pub fn evaluate_task<T: Scalar, D: PairDistance<T> + ?Sized>(
    task: usize,
    test_nodes: &[usize],
    g: &AttributedGraph<T>,
    dist: &D,
    policy: &CandidatePolicy,
) -> Result<EvalResult> {
    if test_nodes.is_empty() {
        return Err(SpmlError::Degenerate("evaluation needs at least one test node".into()));
    }
    for &v in test_nodes {
        g.check_node(v)?;
    }
    let n = g.node_count();
    let per_node = test_nodes
        .par_iter()
        .map(|&v| {
            let candidates: Vec<usize> = match policy {
                CandidatePolicy::AllOthers => (0..n).filter(|&u| u != v).collect(),
                CandidatePolicy::Restricted(set) => set.iter().copied().filter(|&u| u != v).collect(),
            };
            let ranking = rank_candidates(g.attribute(v), &candidates, g.attributes(), dist)?;
            let auc = auc_for_node(&ranking, g.neighbors(v));
            let has_pos = candidates.iter().any(|&u| g.is_linked(v, u));
            Ok((NodeAuc { node: v, auc }, has_pos))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut result = EvalResult {
        task,
        per_node: Vec::with_capacity(per_node.len()),
        mean_auc: f64::NAN,
        evaluated: 0,
        skipped_no_positives: 0,
        skipped_no_negatives: 0,
    };
    let mut sum = 0.0;
    for (r, has_pos) in per_node {
        match r.auc {
            Some(a) => {
                sum += a;
                result.evaluated += 1;
            }
            None if !has_pos => result.skipped_no_positives += 1,
            None => result.skipped_no_negatives += 1,
        }
        result.per_node.push(r);
    }
    if result.evaluated > 0 {
        result.mean_auc = sum / result.evaluated as f64;
    }
    Ok(result)
}

/// Baseline that uses the raw attributes: the identity metric.
pub fn euclidean_metric<T: Scalar>(dim: usize) -> MahalanobisMetric<T> {
    MahalanobisMetric::identity(MetricShape::Diagonal, dim)
}

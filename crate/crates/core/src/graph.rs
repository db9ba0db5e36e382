//! Attributed networks and multi-task collections.

use crate::error::{Result, SpmlError};
use crate::scalar::Scalar;
use crate::sparse::SparseVec;

/// Node attributes plus a symmetric, loop-free binary adjacency.
///
/// Immutable once built; neighbor lists are sorted and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributedGraph<T> {
    dim: usize,
    attributes: Vec<SparseVec<T>>,
    neighbors: Vec<Vec<usize>>,
    /// Undirected edges as `(lo, hi)`, lexicographically sorted.
    edges: Vec<(usize, usize)>,
}

/// Builds a graph from an edge list. Edges are symmetrized and deduplicated
/// and self-loops are dropped.
pub fn build_graph<T: Scalar>(
    edges: &[(usize, usize)],
    attributes: Vec<SparseVec<T>>,
    n: usize,
    d: usize,
) -> Result<AttributedGraph<T>> {
    if attributes.len() != n {
        return Err(SpmlError::AttributeCount { expected: n, found: attributes.len() });
    }
    for x in &attributes {
        if x.dim() != d {
            return Err(SpmlError::DimensionMismatch { expected: d, found: x.dim() });
        }
    }
    let mut canonical = Vec::with_capacity(edges.len());
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(SpmlError::EdgeOutOfRange(a, b, n));
        }
        if a != b {
            canonical.push((a.min(b), a.max(b)));
        }
    }
    canonical.sort_unstable();
    canonical.dedup();

    let mut neighbors = vec![Vec::new(); n];
    for &(a, b) in &canonical {
        neighbors[a].push(b);
        neighbors[b].push(a);
    }
    for list in &mut neighbors {
        list.sort_unstable();
    }
    Ok(AttributedGraph { dim: d, attributes, neighbors, edges: canonical })
}

impl<T: Scalar> AttributedGraph<T> {
    pub fn node_count(&self) -> usize {
        self.attributes.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn attributes(&self) -> &[SparseVec<T>] {
        &self.attributes
    }

    pub fn attribute(&self, i: usize) -> &SparseVec<T> {
        &self.attributes[i]
    }

    /// Total number of stored attribute entries.
    pub fn nnz(&self) -> usize {
        self.attributes.iter().map(SparseVec::nnz).sum()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> Result<usize> {
        self.check_node(i)?;
        Ok(self.neighbors[i].len())
    }

    pub fn is_linked(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.node_count() {
            return Err(SpmlError::NodeOutOfRange { index: i, n: self.node_count() });
        }
        Ok(())
    }
}

/// Free-function form of [`AttributedGraph::degree`].
pub fn degree<T: Scalar>(g: &AttributedGraph<T>, i: usize) -> Result<usize> {
    g.degree(i)
}

/// Addresses node `node` of task `task` inside a [`TaskCollection`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef {
    pub task: usize,
    pub node: usize,
}

/// Ordered set of graphs over one shared feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskCollection<T> {
    dim: usize,
    tasks: Vec<AttributedGraph<T>>,
    names: Vec<String>,
}

impl<T: Scalar> TaskCollection<T> {
    pub fn new(tasks: Vec<AttributedGraph<T>>) -> Result<Self> {
        let names = (1..=tasks.len()).map(|q| format!("task{q}")).collect();
        Self::with_names(tasks, names)
    }

    pub fn with_names(tasks: Vec<AttributedGraph<T>>, names: Vec<String>) -> Result<Self> {
        let first = tasks
            .first()
            .ok_or_else(|| SpmlError::InvalidConfig("a task collection needs at least one task".into()))?;
        let dim = first.dim();
        if let Some(bad) = tasks.iter().find(|g| g.dim() != dim) {
            return Err(SpmlError::DimensionMismatch { expected: dim, found: bad.dim() });
        }
        if names.len() != tasks.len() {
            return Err(SpmlError::InvalidConfig(format!(
                "{} task names for {} tasks",
                names.len(),
                tasks.len()
            )));
        }
        Ok(Self { dim, tasks, names })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn tasks(&self) -> &[AttributedGraph<T>] {
        &self.tasks
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn task(&self, q: usize) -> Result<&AttributedGraph<T>> {
        self.tasks
            .get(q)
            .ok_or(SpmlError::TaskOutOfRange { index: q, count: self.tasks.len() })
    }

    pub fn attribute(&self, node: NodeRef) -> Result<&SparseVec<T>> {
        let g = self.task(node.task)?;
        g.check_node(node.node)?;
        Ok(g.attribute(node.node))
    }
}

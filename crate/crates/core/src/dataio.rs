//! Plain-text dataset formats, manifests, node-level splits and CV folds.
//!
//! Attribute file: one line per node, `node_id feature:value feature:value`,
//! feature ids strictly increasing. Edge file: `node_id node_id` per line.
//! Blank lines and lines starting with `#` are ignored in both.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpmlError};
use crate::graph::{build_graph, AttributedGraph, TaskCollection};
use crate::sampler::derive_seed;
use crate::scalar::Scalar;
use crate::sparse::SparseVec;

pub const MANIFEST_VERSION: u32 = 1;

const SPLIT_STREAM: u64 = 0x5e11_7000;
const FOLD_STREAM: u64 = 0xf01d_0000;

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| SpmlError::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses an attribute file into one sparse row per node. Node ids must be
/// exactly `0..n`, each listed once.
pub fn parse_attributes<T: Scalar>(text: &str, d: usize, origin: &Path) -> Result<Vec<SparseVec<T>>> {
    let mut rows: BTreeMap<usize, SparseVec<T>> = BTreeMap::new();
    for (no, line) in content_lines(text) {
        let mut fields = line.split_whitespace();
        let node: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| SpmlError::parse(origin, no, "expected a node id"))?;
        let mut entries = Vec::new();
        for field in fields {
            let (idx, val) = field
                .split_once(':')
                .ok_or_else(|| SpmlError::parse(origin, no, format!("expected feature:value, got `{field}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| SpmlError::parse(origin, no, format!("invalid feature id `{idx}`")))?;
            let val: T = val
                .parse()
                .map_err(|_| SpmlError::parse(origin, no, format!("invalid value `{val}`")))?;
            entries.push((idx, val));
        }
        let row = SparseVec::new(d, entries).map_err(|e| match e {
            SpmlError::FeatureOutOfRange { index, dim, .. } => SpmlError::FeatureOutOfRange { node, index, dim },
            SpmlError::UnsortedFeatures { .. } => SpmlError::UnsortedFeatures { node },
            other => other,
        })?;
        if rows.insert(node, row).is_some() {
            return Err(SpmlError::DuplicateAttributeRow(node));
        }
    }
    let n = rows.len();
    if let Some((&last, _)) = rows.iter().next_back() {
        if last != n - 1 {
            let missing = (0..n).find(|k| !rows.contains_key(k)).unwrap_or(n);
            return Err(SpmlError::parse(origin, 0, format!("node ids must be 0..{n}; node {missing} is missing")));
        }
    }
    Ok(rows.into_values().collect())
}

pub fn parse_edges(text: &str, origin: &Path) -> Result<Vec<(usize, usize)>> {
    content_lines(text)
        .map(|(no, line)| {
            let mut f = line.split_whitespace();
            let mut id = || -> Result<usize> {
                f.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| SpmlError::parse(origin, no, "expected `node_id node_id`"))
            };
            let edge = (id()?, id()?);
            if f.next().is_some() {
                return Err(SpmlError::parse(origin, no, "trailing fields after edge"));
            }
            Ok(edge)
        })
        .collect()
}

/// Loads one task graph from its attribute and edge files.
pub fn load_task<T: Scalar>(attr_path: &Path, edge_path: &Path, d: usize) -> Result<AttributedGraph<T>> {
    let attributes = parse_attributes(&read(attr_path)?, d, attr_path)?;
    let edges = parse_edges(&read(edge_path)?, edge_path)?;
    let n = attributes.len();
    build_graph(&edges, attributes, n, d)
}

/// Canonical attribute-file text for `g`.
pub fn attributes_to_text<T: Scalar>(g: &AttributedGraph<T>) -> String {
    let mut out = String::new();
    for (i, x) in g.attributes().iter().enumerate() {
        let _ = write!(out, "{i}");
        for (k, v) in x.iter() {
            let _ = write!(out, " {k}:{v}");
        }
        out.push('\n');
    }
    out
}

pub fn edges_to_text<T: Scalar>(g: &AttributedGraph<T>) -> String {
    let mut out = String::new();
    for &(a, b) in g.edges() {
        let _ = writeln!(out, "{a} {b}");
    }
    out
}

/// Writes `g` in canonical form (node order, sorted undirected edges).
pub fn write_graph<T: Scalar>(g: &AttributedGraph<T>, attr_path: &Path, edge_path: &Path) -> Result<()> {
    std::fs::write(attr_path, attributes_to_text(g)).map_err(|e| SpmlError::io(attr_path, e))?;
    std::fs::write(edge_path, edges_to_text(g)).map_err(|e| SpmlError::io(edge_path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub name: String,
    pub attributes: PathBuf,
    pub edges: PathBuf,
}

/// Dataset description. Relative paths resolve against the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub dimension: usize,
    #[serde(rename = "task")]
    pub tasks: Vec<TaskEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut m: DatasetManifest =
            toml::from_str(text).map_err(|e| SpmlError::parse(origin, 0, e.to_string()))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(SpmlError::parse(origin, 0, format!("unsupported format_version {}", m.format_version)));
        }
        if m.tasks.is_empty() {
            return Err(SpmlError::parse(origin, 0, "manifest lists no tasks"));
        }
        m.base_dir = origin.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| SpmlError::io(path, e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads every task (in parallel) into a collection.
    pub fn load<T: Scalar>(&self) -> Result<TaskCollection<T>> {
        let graphs = self
            .tasks
            .par_iter()
            .map(|t| load_task(&self.resolve(&t.attributes), &self.resolve(&t.edges), self.dimension))
            .collect::<Result<Vec<_>>>()?;
        TaskCollection::with_names(graphs, self.tasks.iter().map(|t| t.name.clone()).collect())
    }
}

/// Writes every task of `tasks` next to a manifest at `dir/manifest.toml`.
pub fn write_collection<T: Scalar>(tasks: &TaskCollection<T>, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| SpmlError::io(dir, e))?;
    let mut entries = Vec::new();
    for (g, name) in tasks.tasks().iter().zip(tasks.names()) {
        let attributes = PathBuf::from(format!("{name}.attr"));
        let edges = PathBuf::from(format!("{name}.edges"));
        write_graph(g, &dir.join(&attributes), &dir.join(&edges))?;
        entries.push(TaskEntry { name: name.clone(), attributes, edges });
    }
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        dimension: tasks.dim(),
        tasks: entries,
        base_dir: dir.to_path_buf(),
    };
    let path = dir.join("manifest.toml");
    manifest.write_file(&path)?;
    Ok(path)
}

/// Node-level holdout settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    /// Fraction of the training pool actually used for training.
    pub train_fraction: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { test_fraction: 0.2, train_fraction: 1.0, folds: 5, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |f: f64| f > 0.0 && f <= 1.0;
        if !in_unit(self.test_fraction) || !in_unit(self.train_fraction) {
            return Err(SpmlError::InvalidConfig("split fractions must lie in (0, 1]".into()));
        }
        if self.folds < 2 {
            return Err(SpmlError::InvalidConfig("at least two cross-validation folds required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSplit {
    /// Held-out nodes, ascending.
    pub test: Vec<usize>,
    /// Nodes used for training, ascending.
    pub train: Vec<usize>,
    /// The full training pool in its seeded order; `train` is a prefix of it.
    pub pool: Vec<usize>,
}

/// Splits `n` nodes into a fixed test set and a training subset. The test
/// set depends only on the seed and test fraction, and training subsets for
/// growing fractions are nested.
pub fn split_nodes(n: usize, spec: &SplitSpec) -> Result<NodeSplit> {
    spec.validate()?;
    if n < 5 {
        return Err(SpmlError::Degenerate(format!("cannot split {n} nodes; need at least 5")));
    }
    let n_test = (spec.test_fraction * n as f64).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(SpmlError::Degenerate(format!("test fraction {} leaves an empty side", spec.test_fraction)));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, SPLIT_STREAM)));
    let pool = perm.split_off(n_test);
    let mut test = perm;
    test.sort_unstable();
    let n_train = ((spec.train_fraction * pool.len() as f64).round() as usize).max(1);
    let mut train = pool[..n_train].to_vec();
    train.sort_unstable();
    Ok(NodeSplit { test, train, pool })
}

/// Subgraph on `keep` (re-indexed in the given order) and the map from new
/// index to original node id.
pub fn induced_training_graph<T: Scalar>(
    g: &AttributedGraph<T>,
    keep: &[usize],
) -> Result<(AttributedGraph<T>, Vec<usize>)> {
    if keep.is_empty() {
        return Err(SpmlError::Degenerate("induced subgraph of an empty node set".into()));
    }
    let mut new_index = vec![usize::MAX; g.node_count()];
    for (k, &v) in keep.iter().enumerate() {
        g.check_node(v)?;
        if new_index[v] != usize::MAX {
            return Err(SpmlError::Degenerate(format!("node {v} listed twice")));
        }
        new_index[v] = k;
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|&&(a, b)| new_index[a] != usize::MAX && new_index[b] != usize::MAX)
        .map(|&(a, b)| (new_index[a], new_index[b]))
        .collect();
    let attributes = keep.iter().map(|&v| g.attribute(v).clone()).collect();
    let sub = build_graph(&edges, attributes, keep.len(), g.dim())?;
    Ok((sub, keep.to_vec()))
}

/// `(fit, validate)` pairs over a seeded partition of `train` into
/// near-equal folds.
pub fn cv_folds(train: &[usize], folds: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if folds < 2 {
        return Err(SpmlError::InvalidConfig("at least two folds required".into()));
    }
    if train.len() < folds {
        return Err(SpmlError::Degenerate(format!("{} nodes cannot fill {folds} folds", train.len())));
    }
    let mut perm = train.to_vec();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, FOLD_STREAM)));
    let mut buckets = vec![Vec::new(); folds];
    for (p, v) in perm.into_iter().enumerate() {
        buckets[p % folds].push(v);
    }
    for b in &mut buckets {
        b.sort_unstable();
    }
    Ok((0..folds)
        .map(|f| {
            let mut fit: Vec<usize> =
                buckets.iter().enumerate().filter(|&(k, _)| k != f).flat_map(|(_, b)| b.iter().copied()).collect();
            fit.sort_unstable();
            (fit, buckets[f].clone())
        })
        .collect())
}

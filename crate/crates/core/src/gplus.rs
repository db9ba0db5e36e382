//! Converter for the SNAP Google+ ego-network layout.
//!
//! An ego directory holds `<ego>.feat`, `<ego>.egofeat`, `<ego>.circles`
//! and optionally `<ego>.edges`. Every circle becomes one task whose nodes
//! are the ego (node 0) followed by the circle members in ascending id
//! order. Links are the ego-to-member star; member-member links from the
//! edge file can be added on request. Binary profile features become sparse
//! unit entries.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use crate::dataio::write_collection;
use crate::error::{Result, SpmlError};
use crate::graph::{build_graph, AttributedGraph, TaskCollection};
use crate::scalar::Scalar;
use crate::sparse::SparseVec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GplusOptions {
    /// Also link circle members that are connected in `<ego>.edges`.
    pub member_links: bool,
    /// Circles with fewer members are skipped.
    pub min_members: usize,
}

impl Default for GplusOptions {
    fn default() -> Self {
        Self { member_links: false, min_members: 2 }
    }
}

/// One converted ego network.
#[derive(Debug, Clone)]
pub struct GplusEgo<T> {
    pub tasks: TaskCollection<T>,
    /// Original user ids per task, indexed by node.
    pub node_ids: Vec<Vec<String>>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| SpmlError::io(path, e))
}

fn binary_row<T: Scalar>(fields: &[&str], dim: usize, path: &Path, line: usize) -> Result<SparseVec<T>> {
    if fields.len() != dim {
        return Err(SpmlError::parse(path, line, format!("expected {dim} features, found {}", fields.len())));
    }
    let mut entries = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        match *f {
            "0" => {}
            "1" => entries.push((k, T::one())),
            other => return Err(SpmlError::parse(path, line, format!("feature value `{other}` is not 0 or 1"))),
        }
    }
    SparseVec::new(dim, entries)
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Converts the ego network `ego` found in `dir`.
pub fn convert_ego<T: Scalar>(dir: &Path, ego: &str, opts: &GplusOptions) -> Result<GplusEgo<T>> {
    let path = |ext: &str| dir.join(format!("{ego}.{ext}"));

    let egofeat_path = path("egofeat");
    let egofeat_text = read(&egofeat_path)?;
    let ego_fields: Vec<&str> = egofeat_text.split_whitespace().collect();
    let dim = ego_fields.len();
    if dim == 0 {
        return Err(SpmlError::parse(&egofeat_path, 1, "empty ego feature vector"));
    }
    let ego_row = binary_row::<T>(&ego_fields, dim, &egofeat_path, 1)?;

    let feat_path = path("feat");
    let mut features: HashMap<String, SparseVec<T>> = HashMap::new();
    for (k, line) in read(&feat_path)?.lines().enumerate() {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let Some((id, rest)) = fields.split_first() else { continue };
        let row = binary_row(rest, dim, &feat_path, k + 1)?;
        if features.insert((*id).to_string(), row).is_some() {
            return Err(SpmlError::parse(&feat_path, k + 1, format!("duplicate user `{id}`")));
        }
    }

    let mut friend_links: Vec<(String, String)> = Vec::new();
    if opts.member_links {
        let edges_path = path("edges");
        for (k, line) in read(&edges_path)?.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [a, b] => friend_links.push(((*a).to_string(), (*b).to_string())),
                _ => return Err(SpmlError::parse(&edges_path, k + 1, "expected two user ids")),
            }
        }
    }

    let circles_path = path("circles");
    let mut graphs = Vec::new();
    let mut names = Vec::new();
    let mut node_ids = Vec::new();
    for (k, line) in read(&circles_path)?.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(name) = fields.next() else { continue };
        let mut members: Vec<&str> = fields.collect();
        members.sort_unstable();
        members.dedup();
        members.retain(|m| *m != ego);
        if members.len() < opts.min_members.max(1) {
            continue;
        }
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut attributes = vec![ego_row.clone()];
        let mut ids = vec![ego.to_string()];
        for (pos, m) in members.iter().enumerate() {
            let row = features.get(*m).ok_or_else(|| {
                SpmlError::parse(&circles_path, k + 1, format!("circle member `{m}` has no feature row"))
            })?;
            attributes.push(row.clone());
            ids.push((*m).to_string());
            index.insert(m, pos + 1);
        }
        let mut edges: Vec<(usize, usize)> = (1..=members.len()).map(|i| (0, i)).collect();
        for (a, b) in &friend_links {
            if let (Some(&i), Some(&j)) = (index.get(a.as_str()), index.get(b.as_str())) {
                edges.push((i, j));
            }
        }
        let n = attributes.len();
        let g: AttributedGraph<T> = build_graph(&edges, attributes, n, dim)?;
        graphs.push(g);
        names.push(format!("{}_{}", sanitize(ego), sanitize(name)));
        node_ids.push(ids);
    }
    if graphs.is_empty() {
        return Err(SpmlError::Degenerate(format!("ego `{ego}` has no circle with at least {} members", opts.min_members)));
    }
    Ok(GplusEgo { tasks: TaskCollection::with_names(graphs, names)?, node_ids })
}

/// Converts an ego network and writes it as a dataset (task files, a
/// `<task>.ids` map back to user ids, and `manifest.toml`) under `out`.
pub fn convert_to_dataset(dir: &Path, ego: &str, out: &Path, opts: &GplusOptions) -> Result<PathBuf> {
    let converted = convert_ego::<f64>(dir, ego, opts)?;
    let manifest = write_collection(&converted.tasks, out)?;
    for (name, ids) in converted.tasks.names().iter().zip(&converted.node_ids) {
        let p = out.join(format!("{name}.ids"));
        let body: String = ids.iter().enumerate().map(|(i, id)| format!("{i} {id}\n")).collect();
        std::fs::write(&p, body).map_err(|e| SpmlError::io(&p, e))?;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(dir: &Path) {
        std::fs::write(dir.join("7.egofeat"), "1 0 0 1\n").unwrap();
        std::fs::write(dir.join("7.feat"), "10 0 1 0 0\n11 1 1 0 0\n12 0 0 1 0\n13 0 0 0 1\n").unwrap();
        std::fs::write(dir.join("7.circles"), "circle0\t10\t11\t12\ncircle1\t13\ncircle2\t12\t13\n").unwrap();
        std::fs::write(dir.join("7.edges"), "10 11\n11 10\n12 13\n").unwrap();
    }

    #[test]
    fn star_construction() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let ego = convert_ego::<f64>(dir.path(), "7", &GplusOptions::default()).unwrap();
        assert_eq!(ego.tasks.len(), 2);
        assert_eq!(ego.tasks.names(), ["7_circle0", "7_circle2"]);
        let g = &ego.tasks.tasks()[0];
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edges(), [(0, 1), (0, 2), (0, 3)]);
        assert_eq!(g.attribute(0).to_dense(), vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(g.attribute(2).to_dense(), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(ego.node_ids[0], ["7", "10", "11", "12"]);
    }

    #[test]
    fn member_links_are_optional() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let opts = GplusOptions { member_links: true, min_members: 1 };
        let ego = convert_ego::<f64>(dir.path(), "7", &opts).unwrap();
        assert_eq!(ego.tasks.len(), 3);
        assert_eq!(ego.tasks.tasks()[0].edges(), [(0, 1), (0, 2), (0, 3), (1, 2)]);
        assert_eq!(ego.tasks.tasks()[2].edges(), [(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn missing_member_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        std::fs::write(dir.path().join("7.circles"), "c\t10\t99\n").unwrap();
        let err = convert_ego::<f64>(dir.path(), "7", &GplusOptions::default()).unwrap_err();
        assert!(err.to_string().contains("99"), "{err}");
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        fixture(dir.path());
        let out = dir.path().join("out");
        let manifest = convert_to_dataset(dir.path(), "7", &out, &GplusOptions::default()).unwrap();
        let tasks = crate::dataio::DatasetManifest::read_file(&manifest).unwrap().load::<f64>().unwrap();
        assert_eq!(tasks.len(), 2);
        assert_eq!(tasks.dim(), 4);
        assert!(out.join("7_circle0.ids").exists());
    }
}

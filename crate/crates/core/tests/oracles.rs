mod common;

use std::collections::HashSet;

use common::*;
use rand::Rng;
use spml::sampler::derive_seed;
use spml::{
    build_graph, enumerate_triplets, psd_project, Graph, Metric, MetricShape, SamplingScheme, SparseVec, Triplet,
    TripletSampler,
};

#[test]
fn objectives_match_dense_term_by_term() {
    let check = objective_oracle(120, 11);
    assert!(check.worst_single < 1e-10, "{check:?}");
    assert!(check.worst_multi < 1e-10, "{check:?}");
}

#[test]
fn subgradients_match_central_differences() {
    let check = gradient_oracle(120, 12);
    assert!(check.worst() < 1e-4, "{check:?}");
}

#[test]
fn enumerated_set_matches_brute_force_and_count() {
    let mut r = rng(3);
    for _ in 0..50 {
        let n = r.random_range(3..13);
        let g = random_graph(&mut r, n, 3, 0.4);
        let mut got = enumerate_triplets(&g).unwrap();
        let mut want = brute_triplets(&g);
        got.sort_by_key(|t| (t.i, t.j, t.l));
        want.sort_by_key(|t| (t.i, t.j, t.l));
        assert_eq!(got, want);
        assert_eq!(got.len(), triplet_count(&g));
    }
}

fn single_edge() -> Graph {
    let attrs = (0..3).map(|i| SparseVec::from_dense(&[i as f64])).collect();
    build_graph(&[(0, 1)], attrs, 3, 1).unwrap()
}

/// Empirical frequency of each triplet over `draws` samples.
fn frequencies(g: &Graph, scheme: SamplingScheme, draws: usize, seed: u64) -> Vec<(Triplet, f64)> {
    let mut s = TripletSampler::new(g, seed, scheme).unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for _ in 0..draws {
        let t = s.sample();
        *counts.entry((t.i, t.j, t.l)).or_insert(0usize) += 1;
    }
    counts.into_iter().map(|((i, j, l), c)| (Triplet::new(i, j, l), c as f64 / draws as f64)).collect()
}

#[test]
fn single_edge_triplets_are_equally_likely() {
    let g = single_edge();
    for scheme in [SamplingScheme::EdgeFirst, SamplingScheme::Uniform] {
        let f = frequencies(&g, scheme, 10_000, 5);
        assert_eq!(f.len(), 2);
        for (t, p) in f {
            assert!((p - 0.5).abs() <= 0.02, "{t:?} {p}");
        }
    }
}

#[test]
fn sampled_triplets_belong_to_the_set() {
    let mut r = rng(8);
    for k in 0..5 {
        let n = 10 + 10 * k;
        let g = random_graph(&mut r, n, 4, 0.15);
        let set: HashSet<Triplet> = enumerate_triplets(&g).unwrap().into_iter().collect();
        for scheme in [SamplingScheme::EdgeFirst, SamplingScheme::Uniform] {
            let mut s = TripletSampler::new(&g, derive_seed(k as u64, 1), scheme).unwrap();
            for _ in 0..10_000 {
                assert!(set.contains(&s.sample()));
            }
        }
    }
}

#[test]
fn uniform_scheme_matches_uniform_over_set() {
    // star plus a pendant pair: anchors differ in non-neighbor counts
    let attrs = (0..5).map(|i| SparseVec::from_dense(&[i as f64])).collect();
    let g = build_graph(&[(0, 1), (0, 2), (3, 4)], attrs, 5, 1).unwrap();
    let total = triplet_count(&g);
    let f = frequencies(&g, SamplingScheme::Uniform, 40_000, 2);
    assert_eq!(f.len(), total);
    for (t, p) in f {
        assert!((p - 1.0 / total as f64).abs() < 0.01, "{t:?} {p}");
    }
}

#[test]
fn psd_projection_properties() {
    let mut r = rng(21);
    for k in 0..60 {
        let d = 1 + k % 6;
        let shape = if k % 3 == 0 { MetricShape::Diagonal } else { MetricShape::Full };
        let m = random_metric(&mut r, shape, d, 0.0);
        let p = psd_project(&m).unwrap();
        let pp = psd_project(&p).unwrap();
        let diff = p.values().iter().zip(pp.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "not idempotent: {diff}");
        assert!(p.min_eigenvalue().unwrap() >= -1e-8);
        let dense = p.to_dense();
        for _ in 0..20 {
            let v: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
            let zero = vec![0.0; d];
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert!(dense_distance(&dense, &v, &zero) >= -1e-8 * norm);
        }
    }
}

#[test]
fn swap_matrix_projects_to_half_ones() {
    let m = Metric::full(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
    let p = psd_project(&m).unwrap();
    for v in p.values() {
        assert!((v - 0.5).abs() <= 1e-10, "{:?}", p.values());
    }
}

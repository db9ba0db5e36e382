//! Structure-preserving triplets: enumeration, seeded sampling and the
//! hinge-violation test.
//!
//! A triplet `(i, j, l)` has `i` linked to `l` and not linked to `j`. The
//! constraint it encodes is `d(x_i, x_l) + 1 <= d(x_i, x_j)`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SpmlError};
use crate::graph::AttributedGraph;
use crate::metric::PairDistance;
use crate::scalar::Scalar;

/// Largest graph [`enumerate_triplets`] accepts.
pub const ENUMERATION_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    /// Anchor.
    pub i: usize,
    /// Non-neighbor of the anchor.
    pub j: usize,
    /// Neighbor of the anchor.
    pub l: usize,
}

impl Triplet {
    pub fn new(i: usize, j: usize, l: usize) -> Self {
        Self { i, j, l }
    }

    pub fn is_valid_for<T: Scalar>(&self, g: &AttributedGraph<T>) -> bool {
        let n = g.node_count();
        self.i < n
            && self.j < n
            && self.l < n
            && self.i != self.j
            && self.i != self.l
            && self.j != self.l
            && g.is_linked(self.i, self.l)
            && !g.is_linked(self.i, self.j)
    }
}

/// The `B` triplets drawn for one task in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub task: usize,
    pub triplets: Vec<Triplet>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingScheme {
    /// Oriented edge `(i, l)` uniformly, then `j` uniformly among the
    /// non-neighbors of `i`. Cheap, but over-weights triplets whose anchor
    /// has few non-neighbors relative to exact uniform sampling.
    #[default]
    EdgeFirst,
    /// Exactly uniform over the triplet set: the oriented edge is weighted
    /// by its anchor's non-neighbor count.
    Uniform,
}

/// Mixes a run seed with a stream index (splitmix64 finalizer) so that
/// per-task samplers get decorrelated streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded triplet sampler bound to one graph.
#[derive(Debug, Clone)]
pub struct TripletSampler<'g, T> {
    graph: &'g AttributedGraph<T>,
    rng: ChaCha8Rng,
    /// Oriented edges `(anchor, neighbor)` whose anchor has a non-neighbor.
    oriented: Vec<(usize, usize)>,
    weights: Option<WeightedIndex<usize>>,
}

impl<'g, T: Scalar> TripletSampler<'g, T> {
    pub fn new(graph: &'g AttributedGraph<T>, seed: u64, scheme: SamplingScheme) -> Result<Self> {
        let n = graph.node_count();
        let mut oriented = Vec::with_capacity(2 * graph.edge_count());
        for &(a, b) in graph.edges() {
            if graph.neighbors(a).len() + 2 <= n {
                oriented.push((a, b));
            }
            if graph.neighbors(b).len() + 2 <= n {
                oriented.push((b, a));
            }
        }
        if oriented.is_empty() {
            return Err(SpmlError::Unsampleable);
        }
        let weights = match scheme {
            SamplingScheme::EdgeFirst => None,
            SamplingScheme::Uniform => {
                let w = oriented.iter().map(|&(a, _)| n - 1 - graph.neighbors(a).len());
                Some(WeightedIndex::new(w).map_err(|e| SpmlError::Numerical(e.to_string()))?)
            }
        };
        Ok(Self { graph, rng: ChaCha8Rng::seed_from_u64(seed), oriented, weights })
    }

    pub fn graph(&self) -> &'g AttributedGraph<T> {
        self.graph
    }

    pub fn sample(&mut self) -> Triplet {
        let pick = match &self.weights {
            None => self.rng.random_range(0..self.oriented.len()),
            Some(w) => w.sample(&mut self.rng),
        };
        let (i, l) = self.oriented[pick];
        let n = self.graph.node_count();
        // anchors in `oriented` always have a non-neighbor, so this terminates
        loop {
            let j = self.rng.random_range(0..n);
            if j != i && !self.graph.is_linked(i, j) {
                return Triplet { i, j, l };
            }
        }
    }

    pub fn sample_batch(&mut self, task: usize, size: usize) -> SampleBatch {
        SampleBatch { task, triplets: (0..size).map(|_| self.sample()).collect() }
    }
}

/// Draws one triplet from a fresh edge-first stream seeded with `seed`.
pub fn sample_triplet<T: Scalar>(g: &AttributedGraph<T>, seed: u64) -> Result<Triplet> {
    Ok(TripletSampler::new(g, seed, SamplingScheme::EdgeFirst)?.sample())
}

/// Every triplet of the graph in lexicographic `(i, j, l)` order.
pub fn enumerate_triplets<T: Scalar>(g: &AttributedGraph<T>) -> Result<Vec<Triplet>> {
    let n = g.node_count();
    if n > ENUMERATION_LIMIT {
        return Err(SpmlError::TooLargeToEnumerate { n, limit: ENUMERATION_LIMIT });
    }
    let mut out = Vec::new();
    for i in 0..n {
        let nbrs = g.neighbors(i);
        if nbrs.is_empty() {
            continue;
        }
        for j in (0..n).filter(|&j| j != i && !g.is_linked(i, j)) {
            out.extend(nbrs.iter().map(|&l| Triplet { i, j, l }));
        }
    }
    Ok(out)
}

/// `d(x_i, x_l) - d(x_i, x_j) + 1`, the argument of the hinge.
pub fn margin_term<T: Scalar, D: PairDistance<T> + ?Sized>(
    t: &Triplet,
    g: &AttributedGraph<T>,
    dist: &D,
) -> Result<T> {
    let xi = g.attribute(t.i);
    let d_il = dist.distance(xi, g.attribute(t.l))?;
    let d_ij = dist.distance(xi, g.attribute(t.j))?;
    Ok(hinge_argument(d_il, d_ij))
}

pub fn hinge_argument<T: Scalar>(d_il: T, d_ij: T) -> T {
    d_il - d_ij + T::one()
}

/// Strictly positive hinge loss. A loss of exactly zero is not a violation.
pub fn is_violated_by_distances<T: Scalar>(d_il: T, d_ij: T) -> bool {
    hinge_argument(d_il, d_ij) > T::zero()
}

pub fn is_violated<T: Scalar, D: PairDistance<T> + ?Sized>(
    t: &Triplet,
    g: &AttributedGraph<T>,
    dist: &D,
) -> Result<bool> {
    Ok(margin_term(t, g, dist)? > T::zero())
}

//! Helpers shared by the integration tests: random instances and
//! independent dense reference computations.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spml::{build_graph, Graph, Metric, MetricShape, SparseVec, Tasks, Triplet};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense attribute rows with roughly `density` nonzeros in [-2, 2].
pub fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, density: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| if rng.random_bool(density) { rng.random_range(-2.0..2.0) } else { 0.0 })
                .collect()
        })
        .collect()
}

/// Random graph guaranteed to contain at least one triplet.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, d: usize, p_edge: f64) -> Graph {
    loop {
        let rows = random_rows(rng, n, d, 0.7);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(p_edge) {
                    edges.push((a, b));
                }
            }
        }
        let attrs = rows.iter().map(|r| SparseVec::from_dense(r)).collect();
        let g = build_graph(&edges, attrs, n, d).unwrap();
        if triplet_count(&g) > 0 {
            return g;
        }
    }
}

pub fn random_tasks(rng: &mut ChaCha8Rng, q: usize, n: usize, d: usize) -> Tasks {
    Tasks::new((0..q).map(|_| random_graph(rng, n, d, 0.3)).collect()).unwrap()
}

/// Symmetric random metric (not necessarily PSD) with entries in [-1, 1]
/// plus `shift` on the diagonal.
pub fn random_metric(rng: &mut ChaCha8Rng, shape: MetricShape, d: usize, shift: f64) -> Metric {
    match shape {
        MetricShape::Diagonal => Metric::diagonal((0..d).map(|_| rng.random_range(-1.0..1.0) + shift).collect()),
        MetricShape::Full => {
            let mut v = vec![0.0; d * d];
            for r in 0..d {
                for c in r..d {
                    let x = rng.random_range(-1.0..1.0);
                    v[r * d + c] = x;
                    v[c * d + r] = x;
                }
                v[r * d + r] += shift;
            }
            Metric::full(d, v).unwrap()
        }
    }
}

/// `(x - y)^T M (x - y)` over dense vectors and a dense row-major matrix.
pub fn dense_distance(m: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let d = x.len();
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut s = 0.0;
    for r in 0..d {
        for c in 0..d {
            s += diff[r] * m[r * d + c] * diff[c];
        }
    }
    s
}

pub fn dense_rows(g: &Graph) -> Vec<Vec<f64>> {
    g.attributes().iter().map(|x| x.to_dense()).collect()
}

pub fn dense_sum(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Mean hinge over the triplets, computed term by term from dense data.
pub fn dense_mean_hinge(m: &[f64], rows: &[Vec<f64>], triplets: &[Triplet]) -> f64 {
    let total: f64 = triplets
        .iter()
        .map(|t| {
            let arg = dense_distance(m, &rows[t.i], &rows[t.l]) - dense_distance(m, &rows[t.i], &rows[t.j]) + 1.0;
            arg.max(0.0)
        })
        .sum();
    total / triplets.len() as f64
}

pub fn frobenius_sq(m: &[f64]) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn frobenius_sq_from_identity(m: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for r in 0..d {
        for c in 0..d {
            let v = m[r * d + c] - if r == c { 1.0 } else { 0.0 };
            s += v * v;
        }
    }
    s
}

/// All triplets by direct scan of the adjacency.
pub fn brute_triplets(g: &Graph) -> Vec<Triplet> {
    let n = g.node_count();
    let mut out = Vec::new();
    for i in 0..n {
        for l in 0..n {
            if l == i || !g.is_linked(i, l) {
                continue;
            }
            for j in 0..n {
                if j != i && j != l && !g.is_linked(i, j) {
                    out.push(Triplet::new(i, j, l));
                }
            }
        }
    }
    out
}

pub fn triplet_count(g: &Graph) -> usize {
    let n = g.node_count();
    (0..n).map(|i| g.neighbors(i).len() * (n - 1 - g.neighbors(i).len())).sum()
}

/// Smallest hinge-argument distance from the kink over `triplets` under the
/// dense metric.
pub fn min_kink_gap(m: &[f64], rows: &[Vec<f64>], triplets: &[Triplet]) -> f64 {
    triplets
        .iter()
        .map(|t| {
            (dense_distance(m, &rows[t.i], &rows[t.l]) - dense_distance(m, &rows[t.i], &rows[t.j]) + 1.0).abs()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den = frobenius_sq(a).sqrt().max(frobenius_sq(b).sqrt()).max(1e-12);
    num / den
}

fn perturbed(m: &Metric, k: usize, h: f64) -> Metric {
    let mut v = m.values().to_vec();
    v[k] += h;
    Metric::from_values(m.shape(), m.dim(), v).unwrap()
}

/// Central differences of `f` over every stored entry of `m`.
pub fn finite_difference(m: &Metric, h: f64, f: impl Fn(&Metric) -> f64) -> Vec<f64> {
    (0..m.values().len()).map(|k| (f(&perturbed(m, k, h)) - f(&perturbed(m, k, -h))) / (2.0 * h)).collect()
}

pub const FD_STEP: f64 = 1e-5;
pub const KINK_GAP: f64 = 1e-3;

#[derive(Debug, Default)]
pub struct GradientCheck {
    pub instances: usize,
    pub worst_single: f64,
    pub worst_common: f64,
    pub worst_task: f64,
}

impl GradientCheck {
    pub fn worst(&self) -> f64 {
        self.worst_single.max(self.worst_common).max(self.worst_task)
    }
}

/// Draws a metric whose hinge arguments on `triplets` all sit at least
/// `KINK_GAP` away from zero.
fn metric_off_kink(
    rng: &mut ChaCha8Rng,
    shape: MetricShape,
    d: usize,
    check: impl Fn(&Metric) -> bool,
) -> Metric {
    loop {
        let m = random_metric(rng, shape, d, 0.5);
        if check(&m) {
            return m;
        }
    }
}

/// Compares the analytic subgradients of both objectives against central
/// differences on frozen batches over `instances` random problems.
pub fn gradient_oracle(instances: usize, seed: u64) -> GradientCheck {
    use spml::{
        mtspml_objective, mtspml_subgradient_common, mtspml_subgradient_task, spml_objective, spml_subgradient,
        SamplingScheme, TripletSampler,
    };
    let mut r = rng(seed);
    let mut out = GradientCheck { instances, ..GradientCheck::default() };
    for k in 0..instances {
        let shape = if k % 2 == 0 { MetricShape::Diagonal } else { MetricShape::Full };
        let d = r.random_range(2..=6);
        let q_count = r.random_range(1..=3);
        let n = r.random_range(5..=9);
        let tasks = random_tasks(&mut r, q_count, n, d);
        let batches: Vec<_> = tasks
            .tasks()
            .iter()
            .enumerate()
            .map(|(q, g)| TripletSampler::new(g, r.random(), SamplingScheme::EdgeFirst).unwrap().sample_batch(q, 6))
            .collect();
        let rows: Vec<Vec<Vec<f64>>> = tasks.tasks().iter().map(dense_rows).collect();

        let g = &tasks.tasks()[0];
        let lambda: f64 = r.random_range(0.01..2.0);
        let m = metric_off_kink(&mut r, shape, d, |m| min_kink_gap(&m.to_dense(), &rows[0], &batches[0].triplets) > KINK_GAP);
        let analytic = spml_subgradient(&m, g, &batches[0], lambda).unwrap();
        let numeric = finite_difference(&m, FD_STEP, |m| spml_objective(m, g, &batches[0].triplets, lambda).unwrap());
        out.worst_single = out.worst_single.max(relative_error(analytic.values(), &numeric));

        let gamma0: f64 = r.random_range(0.01..2.0);
        let gammas: Vec<f64> = (0..q_count).map(|_| r.random_range(0.01..2.0)).collect();
        let (m0, specific) = loop {
            let m0 = random_metric(&mut r, shape, d, 0.5);
            let specific: Vec<Metric> = (0..q_count).map(|_| random_metric(&mut r, shape, d, 0.2)).collect();
            let ok = (0..q_count).all(|q| {
                let combined = dense_sum(&m0.to_dense(), &specific[q].to_dense());
                min_kink_gap(&combined, &rows[q], &batches[q].triplets) > KINK_GAP
            });
            if ok {
                break (m0, specific);
            }
        };
        let sets: Vec<Vec<Triplet>> = batches.iter().map(|b| b.triplets.clone()).collect();
        let objective = |m0: &Metric, specific: &[Metric]| {
            mtspml_objective(m0, specific, &tasks, &sets, gamma0, &gammas).unwrap()
        };
        let analytic = mtspml_subgradient_common(&m0, &specific, &tasks, &batches, gamma0).unwrap();
        let numeric = finite_difference(&m0, FD_STEP, |m| objective(m, &specific));
        out.worst_common = out.worst_common.max(relative_error(analytic.values(), &numeric));
        for q in 0..q_count {
            let analytic =
                mtspml_subgradient_task(&m0, &specific[q], &tasks.tasks()[q], &batches[q], gammas[q]).unwrap();
            let numeric = finite_difference(&specific[q], FD_STEP, |mq| {
                let mut s = specific.clone();
                s[q] = mq.clone();
                objective(&m0, &s)
            });
            out.worst_task = out.worst_task.max(relative_error(analytic.values(), &numeric));
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct ObjectiveCheck {
    pub instances: usize,
    pub worst_single: f64,
    pub worst_multi: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Compares both objectives against dense term-by-term evaluation over the
/// full triplet sets of random small instances.
pub fn objective_oracle(instances: usize, seed: u64) -> ObjectiveCheck {
    use spml::{mtspml_objective, spml_objective};
    let mut r = rng(seed);
    let mut out = ObjectiveCheck { instances, ..ObjectiveCheck::default() };
    for k in 0..instances {
        let shape = if k % 2 == 0 { MetricShape::Diagonal } else { MetricShape::Full };
        let d = r.random_range(1..=6);
        let q_count = r.random_range(1..=3);
        let n = r.random_range(4..=10);
        let tasks = random_tasks(&mut r, q_count, n, d);
        let sets: Vec<Vec<Triplet>> = tasks.tasks().iter().map(brute_triplets).collect();
        let rows: Vec<Vec<Vec<f64>>> = tasks.tasks().iter().map(dense_rows).collect();

        let lambda: f64 = r.random_range(1e-3..2.0);
        let m = random_metric(&mut r, shape, d, 0.3);
        let dm = m.to_dense();
        let expected = lambda / 2.0 * frobenius_sq(&dm) + dense_mean_hinge(&dm, &rows[0], &sets[0]);
        let got = spml_objective(&m, &tasks.tasks()[0], &sets[0], lambda).unwrap();
        out.worst_single = out.worst_single.max(rel(expected, got));

        let gamma0: f64 = r.random_range(1e-3..2.0);
        let gammas: Vec<f64> = (0..q_count).map(|_| r.random_range(1e-3..2.0)).collect();
        let m0 = random_metric(&mut r, shape, d, 0.5);
        let specific: Vec<Metric> = (0..q_count).map(|_| random_metric(&mut r, shape, d, 0.1)).collect();
        let d0 = m0.to_dense();
        let mut expected = gamma0 / 2.0 * frobenius_sq_from_identity(&d0, d);
        for q in 0..q_count {
            let dq = specific[q].to_dense();
            expected += gammas[q] / 2.0 * frobenius_sq(&dq);
            expected += dense_mean_hinge(&dense_sum(&d0, &dq), &rows[q], &sets[q]);
        }
        let got = mtspml_objective(&m0, &specific, &tasks, &sets, gamma0, &gammas).unwrap();
        out.worst_multi = out.worst_multi.max(rel(expected, got));
    }
    out
}

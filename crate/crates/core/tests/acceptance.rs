//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. The optional real-data criterion runs
//! only when `SPML_WIKI_MANIFEST` points at a dataset manifest.

mod common;

use std::collections::HashSet;
use std::path::PathBuf;

use spml::dataio::{write_collection, DatasetManifest, SplitSpec};
use spml::experiment::{
    cmd_evaluate, cmd_sweep, cmd_train, overall_auc, run_cell, Algorithm, ExperimentConfig, TrainOptions,
};
use spml::synthgen::{generate, SynthSpec};
use spml::{
    enumerate_triplets, is_violated, psd_project, structure_preserved, train_spml, Graph, Metric, MetricShape,
    SamplingScheme, SpmlConfig, TripletSampler,
};

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn gradient_oracle() -> Outcome {
    let check = common::gradient_oracle(150, 1001);
    verdict(
        check.worst() < 1e-4,
        format!(
            "{} instances, worst relative error single {:.2e} common {:.2e} task {:.2e} (< 1e-4)",
            check.instances, check.worst_single, check.worst_common, check.worst_task
        ),
    )
}

fn objective_oracle() -> Outcome {
    let check = common::objective_oracle(150, 1002);
    verdict(
        check.worst_single < 1e-10 && check.worst_multi < 1e-10,
        format!(
            "{} instances, worst relative error single {:.2e} multi {:.2e} (< 1e-10)",
            check.instances, check.worst_single, check.worst_multi
        ),
    )
}

fn triplet_oracle() -> Outcome {
    let mut r = common::rng(1003);
    let mut outside = 0usize;
    for n in [5, 12, 25, 50] {
        let g = common::random_graph(&mut r, n, 4, 0.2);
        let set: HashSet<_> = enumerate_triplets(&g).unwrap().into_iter().collect();
        let mut s = TripletSampler::new(&g, n as u64, SamplingScheme::EdgeFirst).unwrap();
        outside += (0..10_000).filter(|_| !set.contains(&s.sample())).count();
    }
    let attrs = (0..3).map(|i| spml::SparseVec::from_dense(&[i as f64])).collect();
    let g: Graph = spml::build_graph(&[(0, 1)], attrs, 3, 1).unwrap();
    let mut s = TripletSampler::new(&g, 7, SamplingScheme::EdgeFirst).unwrap();
    let anchored_at_zero = (0..10_000).filter(|_| s.sample().i == 0).count() as f64 / 10_000.0;
    let freqs = [anchored_at_zero, 1.0 - anchored_at_zero];
    verdict(
        outside == 0 && freqs.iter().all(|f| (f - 0.5).abs() <= 0.02),
        format!("{outside} sampled triplets outside S; single-edge frequencies {:.4} / {:.4}", freqs[0], freqs[1]),
    )
}

fn psd_projection() -> Outcome {
    let mut r = common::rng(1004);
    let (mut worst_idem, mut worst_eig) = (0.0f64, f64::INFINITY);
    for k in 0..200 {
        let shape = if k % 4 == 0 { MetricShape::Diagonal } else { MetricShape::Full };
        let m = common::random_metric(&mut r, shape, 1 + k % 8, 0.0);
        let p = psd_project(&m).unwrap();
        let pp = psd_project(&p).unwrap();
        let idem = p.values().iter().zip(pp.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_idem = worst_idem.max(idem);
        worst_eig = worst_eig.min(p.min_eigenvalue().unwrap());
    }
    let swap = psd_project(&Metric::full(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap()).unwrap();
    let swap_err = swap.values().iter().map(|v| (v - 0.5).abs()).fold(0.0, f64::max);
    verdict(
        worst_idem <= 1e-10 && worst_eig >= -1e-8 && swap_err <= 1e-10,
        format!("idempotence {worst_idem:.2e}, min eigenvalue {worst_eig:.2e}, swap matrix error {swap_err:.2e}"),
    )
}

fn structure_instance() -> Graph {
    let spec = SynthSpec { tasks: 1, nodes: 30, dim: 10, seed: 0, ..SynthSpec::default() };
    generate::<f64>(&spec).unwrap().tasks.tasks()[0].clone()
}

fn structure_preservation() -> Outcome {
    let g = structure_instance();
    let (m, _) = train_spml(&g, &SpmlConfig::new(1e-3, 5000, 10)).unwrap();
    let s = enumerate_triplets(&g).unwrap();
    let violated = s.iter().filter(|t| is_violated(t, &g, &m).unwrap()).count();
    let frac = violated as f64 / s.len() as f64;
    let check = structure_preserved(&g, &m).unwrap();
    verdict(
        frac <= 0.01 && check.mismatched_nodes <= 2,
        format!("violated {violated}/{} = {frac:.4} (<= 0.01), mismatched nodes {} (<= 2)", s.len(), check.mismatched_nodes),
    )
}

fn convergence_shape() -> Outcome {
    let g = structure_instance();
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        let cfg = SpmlConfig { seed, ..SpmlConfig::new(1e-3, 4000, 100) };
        let series = train_spml(&g, &cfg).unwrap().1.violated_series(0);
        early.push(series[99] as f64);
        late.push(series[3999] as f64);
    }
    let (e, l) = (median(early.clone()), median(late.clone()));
    verdict(l <= 0.25 * e, format!("median violated at t=100 {e} {early:?}, at t=4000 {l} {late:?} (<= 25%)"))
}

struct Comparison {
    st: f64,
    u: f64,
    mt: f64,
}

fn compare(tasks: usize, relatedness: f64, nodes: usize, train_fraction: f64, seed: u64) -> Comparison {
    let spec = SynthSpec { tasks, nodes, dim: 50, density: 0.2, relatedness, seed, ..SynthSpec::default() };
    let inst = generate::<f64>(&spec).unwrap();
    let split = SplitSpec { train_fraction, seed, ..SplitSpec::default() };
    let opts = TrainOptions { seed, ..TrainOptions::default() };
    let auc = |a| overall_auc(&run_cell(&inst.tasks, a, &split, &opts, false).unwrap().results);
    Comparison {
        st: auc(Algorithm::StSpml),
        u: if relatedness == 0.0 { auc(Algorithm::USpml) } else { f64::NAN },
        mt: auc(Algorithm::MtSpml),
    }
}

fn multi_task_gain() -> Outcome {
    let runs: Vec<Comparison> = (0..5).map(|seed| compare(3, 0.8, 60, 0.3, seed)).collect();
    let gains: Vec<f64> = runs.iter().map(|c| c.mt - c.st).collect();
    let m = median(gains.clone());
    let detail: Vec<String> = runs.iter().map(|c| format!("{:.4}/{:.4}", c.mt, c.st)).collect();
    verdict(m >= 0.02, format!("median MT-ST gain {m:.4} (>= 0.02); MT/ST per seed {}", detail.join(" ")))
}

fn pooling_failure() -> Outcome {
    let runs: Vec<Comparison> = (0..5).map(|seed| compare(2, 0.0, 100, 1.0, seed)).collect();
    let st_over_u = median(runs.iter().map(|c| c.st - c.u).collect());
    let mt_over_st = median(runs.iter().map(|c| c.mt - c.st).collect());
    let detail: Vec<String> = runs.iter().map(|c| format!("{:.4}/{:.4}/{:.4}", c.u, c.st, c.mt)).collect();
    verdict(
        st_over_u >= 0.0 && mt_over_st >= 0.0,
        format!(
            "median ST-U {st_over_u:.4} (>= 0), median MT-ST {mt_over_st:.4} (>= 0); U/ST/MT per seed {}",
            detail.join(" ")
        ),
    )
}

fn read_dir_bytes(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = SynthSpec { tasks: 3, nodes: 30, dim: 8, seed: 5, ..SynthSpec::default() };
    let manifest = write_collection(&generate::<f64>(&spec).unwrap().tasks, &dir.path().join("data")).unwrap();
    let mut mismatches = Vec::new();
    for algo in Algorithm::ALL {
        let outputs: Vec<_> = (0..2)
            .map(|run| {
                let out = dir.path().join(format!("{}-{run}", algo.as_str()));
                let cfg = ExperimentConfig {
                    manifest: manifest.clone(),
                    algorithm: algo,
                    split: SplitSpec { seed: 2, ..SplitSpec::default() },
                    train: TrainOptions { iterations: 300, seed: 2, ..TrainOptions::default() },
                    out_dir: out.clone(),
                    train_only_candidates: false,
                    workers: 2,
                };
                if algo != Algorithm::Euclidean {
                    cmd_train(&cfg).unwrap();
                }
                cmd_evaluate(&cfg, &out).unwrap();
                cmd_sweep(&cfg, &[algo], &[0.5, 1.0]).unwrap();
                read_dir_bytes(&out)
            })
            .collect();
        if outputs[0] != outputs[1] {
            mismatches.push(algo.as_str());
        }
    }
    verdict(
        mismatches.is_empty(),
        format!("train/evaluate/sweep outputs byte-identical across reruns for all algorithms; mismatches {mismatches:?}"),
    )
}

fn wikipedia() -> Outcome {
    let Some(path) = std::env::var_os("SPML_WIKI_MANIFEST").map(PathBuf::from) else {
        return Outcome::Skipped("SPML_WIKI_MANIFEST not set; real-data archive unavailable".into());
    };
    let manifest = DatasetManifest::read_file(&path).unwrap();
    let tasks = manifest.load::<f64>().unwrap();
    let shape: Vec<(usize, usize)> = tasks.tasks().iter().map(|g| (g.node_count(), g.edge_count())).collect();
    let expected = [(269, 332), (223, 917), (303, 921)];
    let table_ok = tasks.dim() == 6695 && shape == expected;
    let split = SplitSpec::default();
    let opts = TrainOptions::default();
    let auc = |a| overall_auc(&run_cell(&tasks, a, &split, &opts, false).unwrap().results);
    let (mt, st, eu) = (auc(Algorithm::MtSpml), auc(Algorithm::StSpml), auc(Algorithm::Euclidean));
    verdict(
        table_ok && mt >= st && st >= eu,
        format!("d={} tasks {shape:?}; MT {mt:.4} ST {st:.4} Euclidean {eu:.4}", tasks.dim()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 gradient oracle", gradient_oracle),
        ("2 objective oracle", objective_oracle),
        ("3 triplet-set oracle", triplet_oracle),
        ("4 PSD projection", psd_projection),
        ("5 structure preservation", structure_preservation),
        ("6 convergence shape", convergence_shape),
        ("7 multi-task gain", multi_task_gain),
        ("8 pooling failure", pooling_failure),
        ("9 determinism", determinism),
        ("10 real-data ordering (optional)", wikipedia),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = std::time::Instant::now();
        let (tag, detail) = match run() {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        println!("criterion {name}: {tag} [{:.1}s] {detail}", start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

//! Acceptance gate. Runs every criterion in order, prints one PASS/FAIL line
//! each and exits non-zero if any fails.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use fcsnet::coselnet::{
    coselection_counts, cosine_matrix, greedy_communities, modularity_of,
    CoSelectionGraph, Community, CommunitySet, SelectionMatrix,
};
use fcsnet::crs::{compute_crs, CrsConfig};
use fcsnet::dataio::{holdout_split, GenotypeDataset};
use fcsnet::gasel::{
    bitflip_mutation, evolve, tournament_select, tree_aware_crossover, uniform_crossover,
    BitSet, Chromosome, GAConfig,
};
use fcsnet::mlcore::{self, auc_roc, logistic, Matrix, ModelKind, TreeParams};
use fcsnet::pipeline::{overfit, repro_sim, OverfitOptions, PipelineConfig, Scale};
use fcsnet::seed::rng_from;
use fcsnet::subtype::{cut_tree, ward_dendrogram, within_cluster_ss, WardVariant};
use fcsnet::synthgen::{generate, make_xor_model, SynthConfig};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn chi_square_p(observed: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let df = (observed.len() - 1) as f64;
    ChiSquared::new(df).unwrap().sf(stat)
}

/// Two-sided normal-approximation p-value for a binomial count.
fn binomial_p(successes: u64, trials: u64, p: f64) -> f64 {
    let mean = trials as f64 * p;
    let sd = (trials as f64 * p * (1.0 - p)).sqrt();
    let z = ((successes as f64 - mean) / sd).abs();
    2.0 * statrs::distribution::Normal::new(0.0, 1.0).unwrap().sf(z)
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Outcome {
    let mut dt_hits = 0;
    let mut lr_hits = 0;
    let mut detail = Vec::new();
    for seed in 1..=5u64 {
        let r = repro_sim(seed, Scale::Desk).map_err(|e| e.to_string())?;
        let dt = r.kinds.iter().find(|k| k.fitness == "dt").unwrap();
        let lr = r.kinds.iter().find(|k| k.fitness == "lr").unwrap();
        if dt.pair_cosine_rank == Some(1) {
            dt_hits += 1;
        }
        if lr.pair_occurrence_fraction <= 0.05 {
            lr_hits += 1;
        }
        detail.push(format!(
            "seed {}: dt occ {} cos {:.3} rank {:?}, lr occ {}",
            seed, dt.pair_occurrence, dt.pair_cosine, dt.pair_cosine_rank, lr.pair_occurrence
        ));
    }
    let summary = format!(
        "dt rank #1 in {}/5 seeds, lr occ <= 5% in {}/5 seeds [{}]",
        dt_hits,
        lr_hits,
        detail.join("; ")
    );
    check(dt_hits >= 4 && lr_hits >= 4, summary.clone())?;
    Ok(summary)
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Outcome {
    let mut rng = rng_from(2);
    let mut worst = 0.0f64;
    for trial in 0..100 {
        let rows = rng.gen_range(1..=20);
        let cols = rng.gen_range(1..=30);
        let density: f64 = rng.gen_range(0.05..0.7);
        let dense: Vec<Vec<u8>> = (0..rows)
            .map(|_| (0..cols).map(|_| u8::from(rng.gen::<f64>() < density)).collect())
            .collect();
        let ids = (0..cols).map(|j| format!("f{}", j)).collect();
        let m = SelectionMatrix::from_dense(ids, &dense).map_err(|e| e.to_string())?;
        let a = coselection_counts(&m).to_dense();
        let s = cosine_matrix(&m);
        for i in 0..cols {
            for j in 0..cols {
                let mut brute = 0u64;
                let (mut dot, mut ni, mut nj) = (0.0f64, 0.0f64, 0.0f64);
                for r in 0..rows {
                    brute += u64::from(dense[r][i]) * u64::from(dense[r][j]);
                    let (x, y) = (dense[r][i] as f64, dense[r][j] as f64);
                    dot += x * y;
                    ni += x * x;
                    nj += y * y;
                }
                check(
                    a[i][j] == brute,
                    format!("trial {}: A[{}][{}] = {} != {}", trial, i, j, a[i][j], brute),
                )?;
                let direct = if ni == 0.0 || nj == 0.0 {
                    0.0
                } else {
                    dot / (ni.sqrt() * nj.sqrt())
                };
                worst = worst.max((s[i][j] - direct).abs());
            }
        }
    }
    check(worst < 1e-12, format!("max cosine error {:e}", worst))?;
    Ok(format!("100 matrices exact, max cosine error {:e}", worst))
}

// ---------------------------------------------------------------- criterion 3

/// Q from the adjacency-matrix form 1/2m sum_ij [A_ij - k_i k_j / 2m] d(c_i, c_j).
fn oracle_modularity(n: usize, edges: &[(usize, usize)], c: &[usize]) -> f64 {
    let m2 = 2.0 * edges.len() as f64;
    if edges.is_empty() {
        return 0.0;
    }
    let mut adj = vec![vec![0.0; n]; n];
    let mut k = vec![0.0; n];
    for &(a, b) in edges {
        adj[a][b] = 1.0;
        adj[b][a] = 1.0;
        k[a] += 1.0;
        k[b] += 1.0;
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if c[i] == c[j] {
                q += adj[i][j] - k[i] * k[j] / m2;
            }
        }
    }
    q / m2
}

/// Maximum modularity over all set partitions (restricted growth strings).
fn exhaustive_max(n: usize, edges: &[(usize, usize)]) -> (f64, Vec<usize>) {
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut a = vec![0usize; n];
    fn rec(
        i: usize,
        max: usize,
        a: &mut Vec<usize>,
        n: usize,
        edges: &[(usize, usize)],
        best: &mut (f64, Vec<usize>),
    ) {
        if i == n {
            let q = oracle_modularity(n, edges, a);
            if q > best.0 + 1e-12 {
                *best = (q, a.clone());
            }
            return;
        }
        for v in 0..=max + 1 {
            a[i] = v;
            rec(i + 1, max.max(v), a, n, edges, best);
        }
    }
    if n > 0 {
        a[0] = 0;
        rec(1, 0, &mut a, n, edges, &mut best);
    }
    best
}

fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let blocks = |x: &[usize]| -> BTreeSet<Vec<usize>> {
        let k = x.iter().max().map_or(0, |m| m + 1);
        (0..k)
            .map(|c| (0..x.len()).filter(|&i| x[i] == c).collect::<Vec<_>>())
            .filter(|v| !v.is_empty())
            .collect()
    };
    blocks(a) == blocks(b)
}

fn criterion_3() -> Outcome {
    let bridge = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)];
    let g = CoSelectionGraph::from_edges(6, &bridge).map_err(|e| e.to_string())?;
    let q = modularity_of(&g, &[0, 0, 0, 1, 1, 1]).map_err(|e| e.to_string())?;
    check((q - 5.0 / 14.0).abs() < 1e-12, format!("fixture Q {} != 5/14", q))?;
    let p = greedy_communities(&g).map_err(|e| e.to_string())?;
    let (qmax, best) = exhaustive_max(6, &bridge);
    check(
        same_partition(&p.assignment, &best) && p.modularity == q,
        format!("fixture greedy {:?} Q {} vs exhaustive {:?} Q {}", p.assignment, p.modularity, best, qmax),
    )?;

    let mut rng = rng_from(3);
    let mut graphs = 0;
    let mut optimal = 0;
    let mut worst_gap = 0.0f64;
    while graphs < 50 {
        let n = rng.gen_range(2..=8);
        let density: f64 = rng.gen_range(0.2..0.7);
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen::<f64>() < density {
                    edges.push((a, b));
                }
            }
        }
        if edges.is_empty() {
            continue;
        }
        graphs += 1;
        let g = CoSelectionGraph::from_edges(n, &edges).map_err(|e| e.to_string())?;
        let p = greedy_communities(&g).map_err(|e| e.to_string())?;
        let oracle_q = oracle_modularity(n, &edges, &p.assignment);
        check(
            (oracle_q - p.modularity).abs() < 1e-12,
            format!("reported Q {} vs recomputed {}", p.modularity, oracle_q),
        )?;
        let comps = g.components();
        for c in 0..p.n_communities {
            let spans: BTreeSet<usize> = (0..n)
                .filter(|&i| p.assignment[i] == c)
                .map(|i| comps[i])
                .collect();
            check(spans.len() == 1, "community spans components")?;
        }
        let (qmax, _) = exhaustive_max(n, &edges);
        check(
            p.modularity <= qmax + 1e-12,
            format!("greedy Q {} above exhaustive {}", p.modularity, qmax),
        )?;
        if (qmax - p.modularity).abs() < 1e-12 {
            optimal += 1;
        }
        worst_gap = worst_gap.max(qmax - p.modularity);
    }
    Ok(format!(
        "fixture exact (Q = 5/14); 50 random graphs: greedy <= exhaustive, optimal on {}, max gap {:.4}",
        optimal, worst_gap
    ))
}

// ---------------------------------------------------------------- criterion 4

fn evaluated(len: usize, idx: &[usize], fitness: f64, used: &[usize]) -> Chromosome {
    let mut c = Chromosome::from_indices(len, idx.iter().copied());
    c.fitness = Some(fitness);
    c.used = Some(BitSet::from_indices(len, used.iter().copied()));
    c
}

fn criterion_4() -> Outcome {
    const TRIALS: u64 = 10_000;
    let mut rng = rng_from(4);
    let mut notes = Vec::new();

    // tournament: a fully tied population is selected uniformly
    let pop: Vec<Chromosome> = (0..10).map(|i| evaluated(16, &[i], 0.7, &[i])).collect();
    let mut counts = vec![0u64; 10];
    for _ in 0..TRIALS {
        counts[tournament_select(&pop, 3, &mut rng).map_err(|e| e.to_string())?] += 1;
    }
    let p = chi_square_p(&counts, &[TRIALS as f64 / 10.0; 10]);
    check(p > 0.01, format!("tournament uniformity p = {}", p))?;
    notes.push(format!("tournament p={:.3}", p));

    // mutation: each bit flips at the configured rate
    for rate in [0.05, 0.3] {
        let n = 40;
        let parent = Chromosome::from_indices(n, 0..20);
        let mut per_bit = vec![0u64; n];
        for _ in 0..TRIALS {
            let child = bitflip_mutation(&parent, rate, n, &mut rng);
            for i in 0..n {
                if child.selected.get(i) != parent.selected.get(i) {
                    per_bit[i] += 1;
                }
            }
        }
        let total: u64 = per_bit.iter().sum();
        let p_rate = binomial_p(total, TRIALS * n as u64, rate);
        let p_even = chi_square_p(&per_bit, &vec![total as f64 / n as f64; n]);
        check(p_rate > 0.01 && p_even > 0.01, format!("mutation rate {}: p {} / {}", rate, p_rate, p_even))?;
        notes.push(format!("mutation {} p={:.3}/{:.3}", rate, p_rate, p_even));
    }

    // uniform crossover: differing bits come from either parent with prob 1/2
    let n = 50;
    let a = evaluated(n, &(0..25).collect::<Vec<_>>(), 0.6, &[]);
    let b = evaluated(n, &(13..38).collect::<Vec<_>>(), 0.6, &[]);
    let differing: Vec<usize> = (0..n).filter(|&i| a.selected.get(i) != b.selected.get(i)).collect();
    let mut from_a = 0u64;
    let mut draws = 0u64;
    for _ in 0..TRIALS {
        let (c1, c2) = uniform_crossover(&a, &b, n, &mut rng);
        for &i in &differing {
            if c1.selected.get(i) == a.selected.get(i) {
                from_a += 1;
            }
            check(c1.selected.get(i) != c2.selected.get(i), "children not complementary")?;
            draws += 1;
        }
    }
    let p = binomial_p(from_a, draws, 0.5);
    check(p > 0.01, format!("crossover provenance p = {}", p))?;
    notes.push(format!("crossover p={:.3}", p));

    // tree-aware crossover stays inside the parental used sets
    for _ in 0..TRIALS {
        let len = 30;
        let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
            let k = rng.gen_range(1..=6);
            (0..k).map(|_| rng.gen_range(0..len)).collect()
        };
        let (sa, sb) = (pick(&mut rng), pick(&mut rng));
        let ua: Vec<usize> = sa.iter().copied().filter(|_| rng.gen::<bool>()).collect();
        let ub: Vec<usize> = sb.iter().copied().filter(|_| rng.gen::<bool>()).collect();
        let pa = evaluated(len, &sa, 0.6, &ua);
        let pb = evaluated(len, &sb, 0.6, &ub);
        let union = pa.used.as_ref().unwrap().union(pb.used.as_ref().unwrap());
        let (c1, c2) = tree_aware_crossover(&pa, &pb, 5, &mut rng).map_err(|e| e.to_string())?;
        for c in [&c1, &c2] {
            let size = c.selected.count_ones();
            check((1..=5).contains(&size), format!("child size {}", size))?;
            if union.count_ones() > 0 {
                check(c.selected.is_subset(&union), format!("tree-aware child {:?} outside used union {:?} (parents {:?}/{:?} used {:?}/{:?})", c.selected, union, sa, sb, ua, ub))?;
            }
        }
    }

    // size bounds hold in every generation of real runs
    let model = make_xor_model(0.4, 0.5).map_err(|e| e.to_string())?;
    let data = generate(
        &model,
        &SynthConfig {
            n_cases: 100,
            n_controls: 100,
            n_noise_features: 28,
            noise_maf_range: (0.05, 0.5),
            seed: 4,
            functional_positions: None,
        },
    )
    .map_err(|e| e.to_string())?
    .dataset;
    for (kind, seed) in [(ModelKind::decision_tree(), 1), (ModelKind::logistic(), 2)] {
        let cfg = GAConfig {
            pop_size: 30,
            ngen: 10,
            seed,
            ..GAConfig::simulation(kind)
        };
        let run = evolve(&data, &cfg).map_err(|e| e.to_string())?;
        for g in &run.history {
            check(
                g.min_size >= 1 && g.max_size <= cfg.size_limit,
                format!("generation {} sizes {}..{}", g.generation, g.min_size, g.max_size),
            )?;
        }
    }
    notes.push("size bounds and used-set containment hold".into());
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5() -> Outcome {
    let mut rng = rng_from(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.gen_range(10..40);
        let p = rng.gen_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.gen_range(0..3) as f64).collect())
            .collect();
        let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        let x = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let b: f64 = rng.gen_range(-1.0..1.0);
        let l2: f64 = rng.gen_range(0.0..2.0);
        let g = logistic::gradient(&x, &y, &w, b, l2);
        let h = 1e-5;
        let mut fd = Vec::with_capacity(p + 1);
        for j in 0..p {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            fd.push((logistic::objective(&x, &y, &wp, b, l2) - logistic::objective(&x, &y, &wm, b, l2)) / (2.0 * h));
        }
        fd.push((logistic::objective(&x, &y, &w, b + h, l2) - logistic::objective(&x, &y, &w, b - h, l2)) / (2.0 * h));
        let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        worst = worst.max(diff / norm);
    }
    check(worst < 1e-5, format!("gradient relative error {:e}", worst))?;

    for _ in 0..100 {
        let n = rng.gen_range(2..=50);
        let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..8) as f64 / 7.0).collect();
        let (mut twice_wins, mut n1, mut n0) = (0u64, 0u64, 0u64);
        for i in 0..n {
            if labels[i] == 1 {
                n1 += 1;
            } else {
                n0 += 1;
            }
            for j in 0..n {
                if labels[i] == 1 && labels[j] == 0 {
                    if scores[i] > scores[j] {
                        twice_wins += 2;
                    } else if scores[i] == scores[j] {
                        twice_wins += 1;
                    }
                }
            }
        }
        let oracle = twice_wins as f64 / (2.0 * n1 as f64 * n0 as f64);
        let auc = auc_roc(&scores, &labels).map_err(|e| e.to_string())?;
        check(auc == oracle, format!("AUC {} != pair count {}", auc, oracle))?;
    }

    let rows: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
    let y = vec![0, 1, 1, 0];
    let x = Matrix::from_rows(&rows).map_err(|e| e.to_string())?;
    let kind = ModelKind::DecisionTree(TreeParams {
        max_depth: 2,
        min_samples_leaf: 1,
    });
    let model = mlcore::fit(&kind, &x, &y, 0).map_err(|e| e.to_string())?;
    let pred = mlcore::predict_proba(&model, &x).map_err(|e| e.to_string())?;
    let correct = pred.iter().zip(&y).filter(|(p, &t)| (**p >= 0.5) == (t == 1)).count();
    check(correct == 4, format!("XOR training accuracy {}/4", correct))?;
    Ok(format!(
        "gradient rel err {:.2e}; 100 AUC vectors exact; XOR depth-2 accuracy 4/4",
        worst
    ))
}

// ---------------------------------------------------------------- criterion 6

fn xor_dataset(h2: f64, cases: usize, noise: usize, seed: u64) -> Result<GenotypeDataset, String> {
    let model = make_xor_model(h2, 0.5).map_err(|e| e.to_string())?;
    Ok(generate(
        &model,
        &SynthConfig {
            n_cases: cases,
            n_controls: cases,
            n_noise_features: noise,
            noise_maf_range: (0.05, 0.5),
            seed,
            functional_positions: Some((0, 1)),
        },
    )
    .map_err(|e| e.to_string())?
    .dataset)
}

fn community_set(groups: Vec<Vec<String>>) -> CommunitySet {
    CommunitySet {
        tau_occ: 1,
        tau_cos: 0.0,
        modularity: 0.0,
        communities: groups
            .into_iter()
            .enumerate()
            .map(|(id, feature_ids)| Community {
                id,
                label: format!("C{}", id + 1),
                feature_ids,
            })
            .collect(),
    }
}

fn criterion_6() -> Outcome {
    let data = xor_dataset(1.0, 200, 36, 6)?;
    let (train, target) = holdout_split(&data, 0.2, 6, true).map_err(|e| e.to_string())?;
    let ids = data.feature_ids().to_vec();

    // single-leaf trees on balanced training data
    let stump = ModelKind::DecisionTree(TreeParams {
        max_depth: 0,
        min_samples_leaf: 1,
    });
    let cfg = CrsConfig {
        n_resamples: 20,
        min_community_size: 2,
        seed: 6,
        ..CrsConfig::default()
    };
    let set = community_set(vec![ids[0..2].to_vec(), ids[2..6].to_vec()]);
    let out = compute_crs(&train, &target, &set, &stump, &cfg).map_err(|e| e.to_string())?;
    check(
        out.matrix.columns.iter().flatten().all(|&v| v == 0.5),
        "constant model CRS differs from 0.5",
    )?;

    // 12 communities, identical output under 1, 4 and 8 workers
    let twelve = community_set(ids[2..38].chunks(3).map(|c| c.to_vec()).collect());
    let cfg12 = CrsConfig {
        n_resamples: 30,
        seed: 60,
        ..CrsConfig::default()
    };
    let mut outputs = Vec::new();
    for threads in [1, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let per_kind: Vec<Vec<Vec<f64>>> = pool.install(|| {
            cfg12
                .model_kinds
                .iter()
                .map(|k| compute_crs(&train, &target, &twelve, k, &cfg12).map(|o| o.matrix.columns))
                .collect::<Result<_, _>>()
        })
        .map_err(|e| e.to_string())?;
        outputs.push(per_kind);
    }
    let bits = |v: &Vec<Vec<Vec<f64>>>| -> Vec<u64> { v.iter().flatten().flatten().map(|x| x.to_bits()).collect() };
    check(
        bits(&outputs[0]) == bits(&outputs[1]) && bits(&outputs[0]) == bits(&outputs[2]),
        "CRS differs across worker counts",
    )?;
    check(outputs[0][0].len() == 12, "expected 12 community columns")?;

    // functional community on the deterministic parity fixture
    let functional = community_set(vec![ids[0..2].to_vec()]);
    let cfg_f = CrsConfig {
        min_community_size: 2,
        seed: 61,
        ..CrsConfig::default()
    };
    let out = compute_crs(&train, &target, &functional, &ModelKind::decision_tree(), &cfg_f)
        .map_err(|e| e.to_string())?;
    let auc = auc_roc(&out.matrix.columns[0], target.labels()).map_err(|e| e.to_string())?;
    check(auc >= 0.95, format!("functional CRS AUC {}", auc))?;
    Ok(format!(
        "constant CRS = 0.5; 12 communities x 3 models bit-identical at 1/4/8 workers; functional AUC {:.4}",
        auc
    ))
}

// ---------------------------------------------------------------- criterion 7

struct OracleMerge {
    pair: (usize, usize),
    delta: f64,
}

/// Greedy Ward by direct variance increase: clusters in slots, merge of
/// slots i < j lands in i, ties to the smallest slot pair.
fn ward_oracle(points: &[Vec<f64>]) -> Vec<OracleMerge> {
    let n = points.len();
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut node: Vec<usize> = (0..n).collect();
    let centroid = |m: &[usize]| -> Vec<f64> {
        let d = points[0].len();
        (0..d).map(|k| m.iter().map(|&i| points[i][k]).sum::<f64>() / m.len() as f64).collect()
    };
    let mut out = Vec::new();
    for step in 0..n - 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let (Some(a), Some(b)) = (&members[i], &members[j]) else { continue };
                let (ca, cb) = (centroid(a), centroid(b));
                let dist2: f64 = ca.iter().zip(&cb).map(|(x, y)| (x - y).powi(2)).sum();
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let delta = na * nb / (na + nb) * dist2;
                if best.is_none_or(|(d, _, _)| delta < d) {
                    best = Some((delta, i, j));
                }
            }
        }
        let (delta, i, j) = best.unwrap();
        let moved = members[j].take().unwrap();
        members[i].as_mut().unwrap().extend(moved);
        out.push(OracleMerge {
            pair: (node[i].min(node[j]), node[i].max(node[j])),
            delta,
        });
        node[i] = n + step;
    }
    out
}

fn criterion_7() -> Outcome {
    let mut rng = rng_from(7);
    for trial in 0..50 {
        let n = rng.gen_range(2..=7);
        let d = rng.gen_range(1..=3);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
        let dendro = ward_dendrogram(&points, WardVariant::D).map_err(|e| e.to_string())?;
        let oracle = ward_oracle(&points);
        let mut ess = 0.0;
        for (s, (m, o)) in dendro.merges.iter().zip(&oracle).enumerate() {
            check(
                (m.left, m.right) == o.pair,
                format!("trial {} step {}: merge {:?} vs oracle {:?}", trial, s, (m.left, m.right), o.pair),
            )?;
            check(
                (m.height - 2.0 * o.delta).abs() <= 1e-12 * (1.0 + o.delta),
                format!("trial {} step {}: height {} vs 2*delta {}", trial, s, m.height, 2.0 * o.delta),
            )?;
            ess += o.delta;
            let k = n - s - 1;
            let cut = cut_tree(&dendro, k).map_err(|e| e.to_string())?;
            let wss = within_cluster_ss(&points, &cut).map_err(|e| e.to_string())?;
            check(
                (wss - ess).abs() <= 1e-12 * (1.0 + ess),
                format!("trial {} k {}: within SS {} vs oracle {}", trial, k, wss, ess),
            )?;
        }
    }
    let line = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
    let d = ward_dendrogram(&line, WardVariant::D).map_err(|e| e.to_string())?;
    let cut = cut_tree(&d, 2).map_err(|e| e.to_string())?;
    check(cut == vec![0, 0, 1, 1], format!("line fixture cut {:?}", cut))?;
    Ok("50 point sets match the variance-increase oracle; line fixture {0,1},{10,11}".into())
}

// ---------------------------------------------------------------- criterion 8

fn harness_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig {
        seed,
        ..PipelineConfig::default()
    };
    cfg.ga.pop_size = 60;
    cfg.ga.ngen = 15;
    cfg.network.tau_occ = 2;
    cfg.network.tau_cos = 0.0;
    cfg.crs.n_resamples = 100;
    cfg.crs.min_community_size = 2;
    cfg.crs.model_kinds = vec![ModelKind::decision_tree(), ModelKind::logistic()];
    cfg
}

fn criterion_8() -> Outcome {
    // 4,000 individuals so the 20% test split holds 800
    let data = xor_dataset(1.0, 2000, 98, 8)?;
    let opts = OverfitOptions {
        runs: 40,
        test_fraction: 0.2,
    };
    let strong = overfit(&data, &harness_config(8), &opts).map_err(|e| e.to_string())?;
    let functional = strong
        .communities
        .communities
        .iter()
        .find(|c| c.feature_ids.contains(&"M0P0".to_string()) && c.feature_ids.contains(&"M0P1".to_string()))
        .ok_or("functional loci not in one community")?;
    let dt = strong.evaluations.iter().find(|e| e.model == "dt").unwrap();
    let row = dt
        .rows
        .iter()
        .find(|r| r.community == functional.label)
        .ok_or("functional community not scored")?;
    check(
        row.auc >= 0.9 && row.p < 0.01,
        format!("functional {} AUC {} p {}", functional.label, row.auc, row.p),
    )?;

    let permuted = data
        .with_labels(mlcore::permuted_labels(data.labels(), 88))
        .map_err(|e| e.to_string())?;
    let null = overfit(&permuted, &harness_config(9), &opts).map_err(|e| e.to_string())?;
    let aucs: Vec<f64> = null
        .evaluations
        .iter()
        .flat_map(|e| e.rows.iter().filter(|r| r.community != "Max").map(|r| r.auc))
        .collect();
    let (lo, hi) = aucs.iter().fold((1.0f64, 0.0f64), |(l, h), &a| (l.min(a), h.max(a)));
    check(
        !aucs.is_empty() && lo >= 0.4 && hi <= 0.6,
        format!("permuted AUC range [{:.3}, {:.3}] over {} scores", lo, hi, aucs.len()),
    )?;
    Ok(format!(
        "functional {} test AUC {:.4} p {:.2e} (n_test {}); permuted: {} community AUCs in [{:.3}, {:.3}]",
        functional.label,
        row.auc,
        row.p,
        strong.n_test,
        aucs.len(),
        lo,
        hi
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("simulation study (desk scale)", criterion_1),
        ("co-selection counts and cosine oracle", criterion_2),
        ("modularity and greedy communities oracle", criterion_3),
        ("GA operator statistics", criterion_4),
        ("ML numerics", criterion_5),
        ("community risk score contracts", criterion_6),
        ("Ward clustering oracle", criterion_7),
        ("overfitting harness calibration", criterion_8),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {} PASS ({}, {:.1}s): {}", i + 1, name, secs, msg),
            Err(msg) => {
                failed += 1;
                println!("criterion {} FAIL ({}, {:.1}s): {}", i + 1, name, secs, msg);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

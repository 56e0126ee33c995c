//! Ward hierarchical clustering of individuals in score space, tree cutting
//! and per-cluster summaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which dissimilarities feed the Lance-Williams Ward update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WardVariant {
    /// Squared Euclidean input. Merges minimise the increase in within-cluster
    /// sum of squares; the height is twice that increase.
    #[default]
    D,
    /// Same merges as `D`, heights reported as square roots.
    D2,
    /// Plain Euclidean input (R's `hclust(dist(x), "ward.D")`).
    DUnsquared,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Node ids: leaves are `0..n`, merge `s` creates node `n + s`.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n_leaves: usize,
    pub merges: Vec<Merge>,
    pub variant: WardVariant,
}

fn check_points(points: &[Vec<f64>]) -> Result<usize> {
    if points.len() < 2 {
        return Err(Error::Precondition(format!(
            "clustering needs at least 2 points, got {}",
            points.len()
        )));
    }
    let d = points[0].len();
    for p in points {
        if p.len() != d {
            return Err(Error::Shape {
                expected: d,
                actual: p.len(),
            });
        }
        if p.iter().any(|v| v.is_nan()) {
            return Err(Error::Precondition("NaN in clustering input".into()));
        }
    }
    Ok(d)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Agglomerative Ward clustering with Lance-Williams updates.
///
/// Clusters occupy slots `0..n`; a merge of slots `i < j` stores the result
/// in slot `i`. Among equal dissimilarities the smallest `(i, j)` slot pair
/// merges first.
pub fn ward_dendrogram(points: &[Vec<f64>], variant: WardVariant) -> Result<Dendrogram> {
    check_points(points)?;
    let n = points.len();
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = sq_dist(&points[i], &points[j]);
            let v = if variant == WardVariant::DUnsquared { s.sqrt() } else { s };
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<usize>>();
    // nearest later slot of each slot, (distance, slot)
    let mut nn: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); n];
    let row_min = |d: &[f64], active: &[bool], i: usize| {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in i + 1..n {
            if active[j] && d[i * n + j] < best.0 {
                best = (d[i * n + j], j);
            }
        }
        best
    };
    for i in 0..n {
        nn[i] = row_min(&d, &active, i);
    }
    let mut merges = Vec::with_capacity(n - 1);
    for step in 0..n - 1 {
        let mut i = usize::MAX;
        for k in 0..n {
            if active[k] && nn[k].1 != usize::MAX && (i == usize::MAX || nn[k].0 < nn[i].0) {
                i = k;
            }
        }
        let (dij, j) = nn[i];
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if !active[k] || k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let v = ((nk + ni) * d[i * n + k] + (nk + nj) * d[j * n + k] - nk * dij)
                / (nk + ni + nj);
            d[i * n + k] = v;
            d[k * n + i] = v;
        }
        active[j] = false;
        let (a, b) = (node[i].min(node[j]), node[i].max(node[j]));
        size[i] += size[j];
        node[i] = n + step;
        merges.push(Merge {
            left: a,
            right: b,
            height: if variant == WardVariant::D2 { dij.sqrt() } else { dij },
            size: size[i],
        });
        nn[i] = row_min(&d, &active, i);
        for k in 0..n {
            if !active[k] || k == i {
                continue;
            }
            if nn[k].1 == i || nn[k].1 == j {
                nn[k] = row_min(&d, &active, k);
            } else if k < i && d[k * n + i] < nn[k].0 {
                nn[k] = (d[k * n + i], i);
            } else if k < i && d[k * n + i] == nn[k].0 && i < nn[k].1 {
                nn[k].1 = i;
            }
        }
    }
    Ok(Dendrogram {
        n_leaves: n,
        merges,
        variant,
    })
}

/// Cluster ids after undoing the last `k - 1` merges, numbered by the order
/// in which each cluster's first leaf appears.
pub fn cut_tree(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let n = dendrogram.n_leaves;
    if k < 1 || k > n {
        return Err(Error::param("k", format!("{} not in 1..={}", k, n)));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (s, m) in dendrogram.merges.iter().take(n - k).enumerate() {
        let new = n + s;
        parent[m.left] = new;
        parent[m.right] = new;
    }
    let mut ids = vec![usize::MAX; 2 * n - 1];
    let mut next = 0;
    let mut out = Vec::with_capacity(n);
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        if ids[root] == usize::MAX {
            ids[root] = next;
            next += 1;
        }
        out.push(ids[root]);
    }
    Ok(out)
}

/// Total within-cluster sum of squared distances to cluster centroids.
pub fn within_cluster_ss(points: &[Vec<f64>], assignment: &[usize]) -> Result<f64> {
    if points.len() != assignment.len() {
        return Err(Error::Shape {
            expected: points.len(),
            actual: assignment.len(),
        });
    }
    let k = assignment.iter().copied().max().map_or(0, |c| c + 1);
    let d = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &c) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p) {
            *s += v;
        }
    }
    let mut ss = 0.0;
    for (p, &c) in points.iter().zip(assignment) {
        let n = counts[c] as f64;
        ss += p
            .iter()
            .zip(&sums[c])
            .map(|(v, s)| (v - s / n).powi(2))
            .sum::<f64>();
    }
    Ok(ss)
}

/// `(k, within-cluster SS)` for each `k` in `ks` that is a valid cut.
pub fn within_ss_curve(
    points: &[Vec<f64>],
    dendrogram: &Dendrogram,
    ks: std::ops::RangeInclusive<usize>,
) -> Result<Vec<(usize, f64)>> {
    ks.filter(|&k| k >= 1 && k <= dendrogram.n_leaves)
        .map(|k| Ok((k, within_cluster_ss(points, &cut_tree(dendrogram, k)?)?)))
        .collect()
}

/// Sample quantile with linear interpolation between order statistics
/// (R type 7). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub id: usize,
    pub size: usize,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub q1: Vec<f64>,
    pub q3: Vec<f64>,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub score_labels: Vec<String>,
    pub clusters: Vec<ClusterStats>,
}

pub fn summarize_clusters(
    points: &[Vec<f64>],
    assignment: &[usize],
    sample_ids: &[String],
    score_labels: &[String],
) -> Result<ClusterSummary> {
    if points.len() != assignment.len() || points.len() != sample_ids.len() {
        return Err(Error::Shape {
            expected: points.len(),
            actual: assignment.len().min(sample_ids.len()),
        });
    }
    let d = score_labels.len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::Shape {
            expected: d,
            actual: p.len(),
        });
    }
    let k = assignment.iter().copied().max().map_or(0, |c| c + 1);
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        rows[c].push(i);
    }
    let clusters = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.is_empty())
        .map(|(id, r)| {
            let mut stats = ClusterStats {
                id,
                size: r.len(),
                mean: Vec::with_capacity(d),
                median: Vec::with_capacity(d),
                q1: Vec::with_capacity(d),
                q3: Vec::with_capacity(d),
                members: r.iter().map(|&i| sample_ids[i].clone()).collect(),
            };
            for j in 0..d {
                let mut v: Vec<f64> = r.iter().map(|&i| points[i][j]).collect();
                v.sort_by(f64::total_cmp);
                stats.mean.push(v.iter().sum::<f64>() / v.len() as f64);
                stats.median.push(quantile_sorted(&v, 0.5));
                stats.q1.push(quantile_sorted(&v, 0.25));
                stats.q3.push(quantile_sorted(&v, 0.75));
            }
            stats
        })
        .collect();
    Ok(ClusterSummary {
        score_labels: score_labels.to_vec(),
        clusters,
    })
}

impl ClusterSummary {
    /// Long-format table: `cluster, size, crs_label, mean, median, q1, q3`.
    pub fn write_tidy_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "cluster\tsize\tcrs_label\tmean\tmedian\tq1\tq3")?;
        for c in &self.clusters {
            for (j, label) in self.score_labels.iter().enumerate() {
                writeln!(
                    w,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.id, c.size, label, c.mean[j], c.median[j], c.q1[j], c.q3[j]
                )?;
            }
        }
        Ok(())
    }
}

impl Dendrogram {
    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step\tleft\tright\theight\tsize")?;
        for (s, m) in self.merges.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}\t{}\t{}", s, m.left, m.right, m.height, m.size)?;
        }
        Ok(())
    }
}

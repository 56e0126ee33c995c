use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::{coselection_counts, CoSelectionCounts, SelectionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Node positions, `u < v`.
    pub u: usize,
    pub v: usize,
    pub occ: u64,
    pub cosine: f64,
}

/// Thresholded co-selection graph. Nodes are the features touching at least
/// one retained edge, kept in feature-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoSelectionGraph {
    /// Column index in the selection matrix for each node.
    pub features: Vec<usize>,
    pub node_ids: Vec<String>,
    pub edges: Vec<Edge>,
    pub tau_occ: u64,
    pub tau_cos: f64,
}

impl CoSelectionGraph {
    pub fn n_nodes(&self) -> usize {
        self.features.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n_nodes()];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Sorted neighbour lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            adj[e.u].push(e.v);
            adj[e.v].push(e.u);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    /// Connected-component id per node, numbered by first node.
    pub fn components(&self) -> Vec<usize> {
        let adj = self.adjacency();
        let mut comp = vec![usize::MAX; self.n_nodes()];
        let mut next = 0;
        for start in 0..self.n_nodes() {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = next;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn n_components(&self) -> usize {
        self.components().into_iter().max().map_or(0, |c| c + 1)
    }

    /// Graph over `n` nodes from an explicit edge list. Handy for fixtures.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut list = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(Error::Precondition(format!("bad edge ({}, {})", a, b)));
            }
            list.push(Edge {
                u: a.min(b),
                v: a.max(b),
                occ: 1,
                cosine: 1.0,
            });
        }
        list.sort_by_key(|e| (e.u, e.v));
        let before = list.len();
        list.dedup_by_key(|e| (e.u, e.v));
        if list.len() != before {
            return Err(Error::Precondition("duplicate edge".into()));
        }
        Ok(Self {
            features: (0..n).collect(),
            node_ids: (0..n).map(|i| i.to_string()).collect(),
            edges: list,
            tau_occ: 1,
            tau_cos: 0.0,
        })
    }

    /// Edge list as `u<TAB>v<TAB>occ<TAB>cosine` with feature ids.
    pub fn write_edges_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "u\tv\tocc\tcosine")?;
        for e in &self.edges {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.node_ids[e.u], self.node_ids[e.v], e.occ, e.cosine
            )?;
        }
        Ok(())
    }

    pub fn save_edges_tsv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_edges_tsv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

fn check_thresholds(tau_occ: u64, tau_cos: f64) -> Result<()> {
    if tau_occ < 1 {
        return Err(Error::param("tau_occ", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&tau_cos) {
        return Err(Error::param("tau_cos", format!("{} not in [0, 1]", tau_cos)));
    }
    Ok(())
}

pub fn build_graph(m: &SelectionMatrix, tau_occ: u64, tau_cos: f64) -> Result<CoSelectionGraph> {
    let counts = coselection_counts(m);
    graph_from_counts(&counts, m.feature_ids(), tau_occ, tau_cos)
}

/// Same as [`build_graph`] but reuses precomputed counts.
pub fn graph_from_counts(
    counts: &CoSelectionCounts,
    feature_ids: &[String],
    tau_occ: u64,
    tau_cos: f64,
) -> Result<CoSelectionGraph> {
    check_thresholds(tau_occ, tau_cos)?;
    let kept: Vec<(usize, usize, u64, f64)> = counts
        .pairs()
        .iter()
        .filter(|&&(_, occ)| occ >= tau_occ)
        .map(|&((i, j), occ)| (i, j, occ, counts.cosine(i, j)))
        .filter(|&(_, _, _, cos)| cos >= tau_cos)
        .collect();
    let mut features: Vec<usize> = kept.iter().flat_map(|&(i, j, _, _)| [i, j]).collect();
    features.sort_unstable();
    features.dedup();
    let pos = |f: usize| features.binary_search(&f).expect("node present");
    let edges = kept
        .iter()
        .map(|&(i, j, occ, cosine)| Edge {
            u: pos(i),
            v: pos(j),
            occ,
            cosine,
        })
        .collect();
    let node_ids = features.iter().map(|&f| feature_ids[f].clone()).collect();
    Ok(CoSelectionGraph {
        features,
        node_ids,
        edges,
        tau_occ,
        tau_cos,
    })
}

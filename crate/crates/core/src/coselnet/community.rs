use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::CoSelectionGraph;
use crate::error::{Error, Result};

/// Assignment of graph nodes to communities.
///
/// Ids are contiguous from 0 and ordered by community size, largest first;
/// equal sizes are ordered by their smallest member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityPartition {
    pub assignment: Vec<usize>,
    pub n_communities: usize,
    pub modularity: f64,
}

impl CommunityPartition {
    /// Node positions of each community, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_communities];
        for (node, &c) in self.assignment.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Newman modularity of an unweighted graph. Zero for a graph without edges.
pub fn modularity_of(graph: &CoSelectionGraph, assignment: &[usize]) -> Result<f64> {
    if assignment.len() != graph.n_nodes() {
        return Err(Error::Shape {
            expected: graph.n_nodes(),
            actual: assignment.len(),
        });
    }
    let m = graph.n_edges();
    if m == 0 {
        return Ok(0.0);
    }
    let k = assignment.iter().copied().max().map_or(0, |c| c + 1);
    let mut intra = vec![0u64; k];
    let mut degree = vec![0u64; k];
    for e in &graph.edges {
        let (cu, cv) = (assignment[e.u], assignment[e.v]);
        degree[cu] += 1;
        degree[cv] += 1;
        if cu == cv {
            intra[cu] += 1;
        }
    }
    let m = m as f64;
    Ok(intra
        .iter()
        .zip(&degree)
        .map(|(&e, &d)| e as f64 / m - (d as f64 / (2.0 * m)).powi(2))
        .sum())
}

/// Relabels an arbitrary grouping into size-descending contiguous ids.
pub(crate) fn canonical_labels(groups: &[usize]) -> (Vec<usize>, usize) {
    let mut members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (node, &g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(node);
    }
    let mut order: Vec<&Vec<usize>> = members.values().collect();
    order.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    let mut out = vec![0; groups.len()];
    for (id, m) in order.iter().enumerate() {
        for &node in m.iter() {
            out[node] = id;
        }
    }
    (out, order.len())
}

/// Greedy agglomerative modularity maximisation (Clauset-Newman-Moore).
///
/// Each step merges the pair of adjacent communities with the largest
/// modularity gain, using the exact integer key `2m*e_ij - d_i*d_j`. Ties go
/// to the smallest `(i, j)` id pair, and the merged community keeps the
/// smaller id. Stops when no merge improves modularity.
pub fn greedy_communities(graph: &CoSelectionGraph) -> Result<CommunityPartition> {
    let n = graph.n_nodes();
    let m = graph.n_edges();
    if m == 0 {
        return Err(Error::Precondition("empty graph".into()));
    }
    let two_m = 2 * m as i128;
    let mut degree: Vec<i128> = graph.degrees().into_iter().map(i128::from).collect();
    let mut links: Vec<BTreeMap<usize, i128>> = vec![BTreeMap::new(); n];
    for e in &graph.edges {
        *links[e.u].entry(e.v).or_insert(0) += 1;
        *links[e.v].entry(e.u).or_insert(0) += 1;
    }
    let mut owner: Vec<usize> = (0..n).collect();
    let mut active = vec![true; n];

    loop {
        let mut best: Option<(i128, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for (&j, &e) in links[i].range(i + 1..) {
                let key = two_m * e - degree[i] * degree[j];
                if best.is_none_or(|(b, _, _)| key > b) {
                    best = Some((key, i, j));
                }
            }
        }
        let (key, i, j) = match best {
            Some(b) if b.0 > 0 => b,
            _ => break,
        };
        debug_assert!(key > 0);
        let moved = std::mem::take(&mut links[j]);
        for (k, e) in moved {
            links[k].remove(&j);
            if k != i {
                *links[i].entry(k).or_insert(0) += e;
                *links[k].entry(i).or_insert(0) += e;
            }
        }
        links[i].remove(&j);
        degree[i] += degree[j];
        degree[j] = 0;
        active[j] = false;
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
    }

    let (assignment, n_communities) = canonical_labels(&owner);
    let modularity = modularity_of(graph, &assignment)?;
    Ok(CommunityPartition {
        assignment,
        n_communities,
        modularity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Community {
    pub id: usize,
    /// Risk-score column name, `C<id + 1>`.
    pub label: String,
    pub feature_ids: Vec<String>,
}

/// On-disk community file written by `fcsnet network`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunitySet {
    pub tau_occ: u64,
    pub tau_cos: f64,
    pub modularity: f64,
    pub communities: Vec<Community>,
}

impl CommunitySet {
    pub fn from_partition(graph: &CoSelectionGraph, partition: &CommunityPartition) -> Self {
        let communities = partition
            .members()
            .into_iter()
            .enumerate()
            .map(|(id, nodes)| Community {
                id,
                label: format!("C{}", id + 1),
                feature_ids: nodes.iter().map(|&u| graph.node_ids[u].clone()).collect(),
            })
            .collect();
        Self {
            tau_occ: graph.tau_occ,
            tau_cos: graph.tau_cos,
            modularity: partition.modularity,
            communities,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set: Self = serde_json::from_str(&text)?;
        if set.communities.is_empty() {
            return Err(Error::Precondition(format!(
                "{}: no communities",
                path.display()
            )));
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// One `<label>.txt` file of feature ids per community, for enrichment tools.
    pub fn write_lists(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for c in &self.communities {
            let path = dir.join(format!("{}.txt", c.label));
            let mut text = c.feature_ids.join("\n");
            text.push('\n');
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles(bridge: bool) -> CoSelectionGraph {
        let mut edges = vec![(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)];
        if bridge {
            edges.push((2, 3));
        }
        CoSelectionGraph::from_edges(6, &edges).unwrap()
    }

    #[test]
    fn bridge_fixture_modularity() {
        let g = two_triangles(true);
        let q = modularity_of(&g, &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((q - 5.0 / 14.0).abs() < 1e-12);
        assert!(modularity_of(&g, &[0; 6]).unwrap().abs() < 1e-15);
        let singles = modularity_of(&g, &[0, 1, 2, 3, 4, 5]).unwrap();
        let expect: f64 = -g.degrees().iter().map(|&k| (k as f64 / 14.0).powi(2)).sum::<f64>();
        assert!((singles - expect).abs() < 1e-15);
    }

    #[test]
    fn greedy_recovers_triangles() {
        let p = greedy_communities(&two_triangles(true)).unwrap();
        assert_eq!(p.assignment, vec![0, 0, 0, 1, 1, 1]);
        assert!((p.modularity - 5.0 / 14.0).abs() < 1e-12);

        let p = greedy_communities(&two_triangles(false)).unwrap();
        assert_eq!(p.n_communities, 2);
        assert!((p.modularity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_edge_merges() {
        let g = CoSelectionGraph::from_edges(2, &[(0, 1)]).unwrap();
        let p = greedy_communities(&g).unwrap();
        assert_eq!(p.assignment, vec![0, 0]);
        assert_eq!(p.modularity, 0.0);
    }

    #[test]
    fn empty_graph_is_an_error() {
        let g = CoSelectionGraph::from_edges(0, &[]).unwrap();
        assert!(greedy_communities(&g).is_err());
        assert_eq!(modularity_of(&g, &[]).unwrap(), 0.0);
    }

    #[test]
    fn ids_follow_size() {
        // path 0-1 plus a 4-clique on 2..6
        let g = CoSelectionGraph::from_edges(
            6,
            &[(0, 1), (2, 3), (2, 4), (2, 5), (3, 4), (3, 5), (4, 5)],
        )
        .unwrap();
        let p = greedy_communities(&g).unwrap();
        assert_eq!(p.assignment, vec![1, 1, 0, 0, 0, 0]);
        let set = CommunitySet::from_partition(&g, &p);
        assert_eq!(set.communities[0].label, "C1");
        assert_eq!(set.communities[1].feature_ids, vec!["0", "1"]);
    }
}

//! CART classification trees on Gini impurity.
//!
//! Splits are searched over per-feature value histograms: each column is
//! coded into its sorted distinct values once per fit, so a node scan costs
//! O(node size + distinct values) per feature. Candidate thresholds are
//! midpoints between adjacent distinct values; `x <= threshold` goes left.
//! Among equally good splits the lowest feature index wins, then the lowest
//! threshold. An impure node is split even when the best split has zero
//! Gini gain (as scikit-learn does); pure-epistasis loci have no first-level
//! gain, so requiring one would hide them from the tree entirely.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    /// 0 grows a single leaf.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: 5,
            min_samples_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        prob: f64,
        n: usize,
        impurity: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n: usize,
        impurity: f64,
    },
}

impl Node {
    pub fn impurity(&self) -> f64 {
        match *self {
            Node::Leaf { impurity, .. } | Node::Split { impurity, .. } => impurity,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            Node::Leaf { n, .. } | Node::Split { n, .. } => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    /// Node 0 is the root.
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

impl DecisionTree {
    pub fn predict_row(&self, x: &Matrix, i: usize) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { prob, .. } => return prob,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => k = if x.get(i, feature) <= threshold { left } else { right },
            }
        }
    }

    /// Sorted, deduplicated split features.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, k: usize) -> usize {
            match t.nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, left).max(walk(t, right)),
            }
        }
        walk(self, 0)
    }
}

/// Column values recoded as indices into their sorted distinct values.
struct Coded {
    codes: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl Coded {
    fn new(x: &Matrix) -> Self {
        let mut codes = Vec::with_capacity(x.n_cols());
        let mut values = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let col = x.column(j);
            let small = col.iter().all(|&v| (0.0..=255.0).contains(&v) && v.fract() == 0.0);
            if small {
                let mut present = [false; 256];
                for &v in col {
                    present[v as usize] = true;
                }
                let mut lookup = [0u32; 256];
                let mut uniq = Vec::new();
                for (v, &seen) in present.iter().enumerate() {
                    if seen {
                        lookup[v] = uniq.len() as u32;
                        uniq.push(v as f64);
                    }
                }
                codes.push(col.iter().map(|&v| lookup[v as usize]).collect());
                values.push(uniq);
            } else {
                let mut uniq: Vec<f64> = col.to_vec();
                uniq.sort_unstable_by(f64::total_cmp);
                uniq.dedup();
                codes.push(
                    col.iter()
                        .map(|v| uniq.partition_point(|u| u < v) as u32)
                        .collect(),
                );
                values.push(uniq);
            }
        }
        Self { codes, values }
    }
}

fn gini(cases: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = cases as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Feature sampling for random-forest splits.
pub(crate) struct FeatureSampler<'a, R: Rng> {
    pub rng: &'a mut R,
    pub mtry: usize,
}

struct Builder<'a, R: Rng> {
    coded: Coded,
    y: &'a [u8],
    params: TreeParams,
    sampler: Option<FeatureSampler<'a, R>>,
    nodes: Vec<Node>,
    counts: Vec<[usize; 2]>,
}

struct Split {
    feature: usize,
    code: u32,
    threshold: f64,
}

impl<R: Rng> Builder<'_, R> {
    fn candidates(&mut self) -> Vec<usize> {
        let p = self.coded.codes.len();
        match &mut self.sampler {
            Some(s) if s.mtry < p => {
                let mut picked = sample(s.rng, p, s.mtry).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], cases: usize) -> Option<Split> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<(f64, Split)> = None;
        for feature in self.candidates() {
            let codes = &self.coded.codes[feature];
            let values = &self.coded.values[feature];
            let counts = &mut self.counts;
            counts.clear();
            counts.resize(values.len(), [0, 0]);
            for &i in rows {
                counts[codes[i] as usize][self.y[i] as usize] += 1;
            }
            let (mut l0, mut l1) = (0usize, 0usize);
            let mut last: Option<usize> = None;
            for c in 0..values.len() {
                let [a, b] = counts[c];
                if a + b == 0 {
                    continue;
                }
                if let Some(prev) = last {
                    let nl = l0 + l1;
                    let nr = n - nl;
                    if nl >= min_leaf && nr >= min_leaf {
                        let (r0, r1) = ((n - cases - l0) as f64, (cases - l1) as f64);
                        let (f0, f1) = (l0 as f64, l1 as f64);
                        let score = (f0 * f0 + f1 * f1) / nl as f64 + (r0 * r0 + r1 * r1) / nr as f64;
                        let better = match &best {
                            None => true,
                            Some((s, _)) => score > s * (1.0 + 1e-12),
                        };
                        if better {
                            best = Some((
                                score,
                                Split {
                                    feature,
                                    code: prev as u32,
                                    threshold: 0.5 * (values[prev] + values[c]),
                                },
                            ));
                        }
                    }
                }
                l0 += a;
                l1 += b;
                last = Some(c);
            }
        }
        best.map(|(_, s)| s)
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len();
        let cases = rows.iter().filter(|&&i| self.y[i] == 1).count();
        let impurity = gini(cases, n);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            prob: if n == 0 { 0.0 } else { cases as f64 / n as f64 },
            n,
            impurity,
        });
        let min_leaf = self.params.min_samples_leaf.max(1);
        if depth >= self.params.max_depth || n < 2 * min_leaf || cases == 0 || cases == n {
            return id;
        }
        let Some(split) = self.best_split(&rows, cases) else {
            return id;
        };
        let codes = &self.coded.codes[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| codes[i] <= split.code);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            n,
            impurity,
        };
        id
    }
}

pub(crate) fn fit_rows<R: Rng>(
    x: &Matrix,
    y: &[u8],
    rows: Vec<usize>,
    params: &TreeParams,
    sampler: Option<FeatureSampler<'_, R>>,
) -> DecisionTree {
    let mut builder = Builder {
        coded: Coded::new(x),
        y,
        params: *params,
        sampler,
        nodes: Vec::new(),
        counts: Vec::new(),
    };
    builder.grow(rows, 0);
    DecisionTree {
        nodes: builder.nodes,
        n_features: x.n_cols(),
    }
}

pub fn fit(x: &Matrix, y: &[u8], params: &TreeParams) -> DecisionTree {
    fit_rows::<rand_chacha::ChaCha8Rng>(x, y, (0..x.n_rows()).collect(), params, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor_table() -> (Matrix, Vec<u8>) {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ])
        .unwrap();
        (x, vec![0, 1, 1, 0])
    }

    #[test]
    fn xor_truth_table_depth_two() {
        let (x, y) = xor_table();
        let t = fit(&x, &y, &TreeParams { max_depth: 2, min_samples_leaf: 1 });
        for i in 0..4 {
            assert_eq!(t.predict_row(&x, i), f64::from(y[i]));
        }
        assert_eq!(t.used_features(), vec![0, 1]);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn single_leaf_predicts_case_fraction() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![1.0]]).unwrap();
        let y = [1, 1, 0, 1];
        let t = fit(&x, &y, &TreeParams { max_depth: 0, min_samples_leaf: 1 });
        assert_eq!(t.nodes.len(), 1);
        for i in 0..4 {
            assert_eq!(t.predict_row(&x, i), 0.75);
        }
        assert!(t.used_features().is_empty());
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..20).map(|i| (i >= 17) as u8).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let t = fit(&x, &y, &TreeParams { max_depth: 5, min_samples_leaf: 5 });
        for n in &t.nodes {
            if let Node::Leaf { n, .. } = n {
                assert!(*n >= 5);
            }
        }
    }

    #[test]
    fn threshold_is_midpoint_and_lowest_on_ties() {
        // Feature 0 and 1 separate equally well; lowest index wins.
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![2.0, 2.0],
            vec![2.0, 2.0],
        ])
        .unwrap();
        let t = fit(&x, &[0, 0, 1, 1], &TreeParams { max_depth: 1, min_samples_leaf: 1 });
        match t.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.0);
            }
            _ => panic!("expected split"),
        }
    }
}

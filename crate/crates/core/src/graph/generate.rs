use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Graph, Split};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::purpose_rng;

/// Two-cluster bipartite graph whose features only weakly track the labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BipartiteParams {
    pub n1: usize,
    pub n2: usize,
    pub p_edge: f64,
    pub flip1: f64,
    pub flip2: f64,
}

impl Default for BipartiteParams {
    fn default() -> Self {
        Self {
            n1: 500,
            n2: 400,
            p_edge: 0.05,
            flip1: 0.25,
            flip2: 0.625,
        }
    }
}

/// Nodes `0..n1` form cluster 0 and `n1..n1+n2` cluster 1. Every cross pair
/// is an edge with probability `p_edge`. Features start at `[1, -1]` for
/// cluster 0 and `[-1, 1]` for cluster 1; then exactly `⌊flip1·n1⌋` nodes of
/// cluster 0 and `⌊flip2·n2⌋` of cluster 1 get the other cluster's feature.
pub fn generate_bipartite(params: &BipartiteParams, seed: u64) -> Result<Dataset> {
    let BipartiteParams {
        n1,
        n2,
        p_edge,
        flip1,
        flip2,
    } = *params;
    if n1 == 0 || n2 == 0 {
        return Err(Error::invalid("both clusters need at least one node"));
    }
    for (name, p) in [("p_edge", p_edge), ("flip1", flip1), ("flip2", flip2)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("{name} = {p} is not a probability")));
        }
    }
    let n = n1 + n2;

    let mut edge_rng = purpose_rng(seed, "bipartite-edges", 0);
    let mut edges = Vec::new();
    for u in 0..n1 {
        for v in n1..n {
            if edge_rng.gen_bool(p_edge) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_edges(n, edges)?;

    let mut features = DenseMatrix::zeros(n, 2);
    let labels: Vec<usize> = (0..n).map(|v| usize::from(v >= n1)).collect();
    for (v, &label) in labels.iter().enumerate() {
        let sign = if label == 0 { 1.0 } else { -1.0 };
        features.row_mut(v).copy_from_slice(&[sign, -sign]);
    }
    let mut flip_rng = purpose_rng(seed, "bipartite-flips", 0);
    let flips0 = (flip1 * n1 as f64).floor() as usize;
    let flips1 = (flip2 * n2 as f64).floor() as usize;
    for v in index::sample(&mut flip_rng, n1, flips0) {
        features.row_mut(v).iter_mut().for_each(|x| *x = -*x);
    }
    for v in index::sample(&mut flip_rng, n2, flips1) {
        features.row_mut(n1 + v).iter_mut().for_each(|x| *x = -*x);
    }

    let split = half_split(n, seed);
    Dataset::new(graph, features, labels, split, 2)
}

/// Uniform random graph with exactly `num_edges` edges (the G(n, m) model),
/// uniform random labels and standard normal features.
pub fn generate_erdos_renyi(
    num_nodes: usize,
    num_edges: usize,
    num_classes: usize,
    num_features: usize,
    seed: u64,
) -> Result<Dataset> {
    let pairs = num_nodes * num_nodes.saturating_sub(1) / 2;
    if num_edges > pairs {
        return Err(Error::invalid(format!(
            "{num_edges} edges do not fit on {num_nodes} nodes"
        )));
    }
    if num_classes == 0 {
        return Err(Error::invalid("need at least one class"));
    }
    let mut edge_rng = purpose_rng(seed, "er-edges", 0);
    let mut chosen = index::sample(&mut edge_rng, pairs, num_edges).into_vec();
    chosen.sort_unstable();
    let edges = chosen.into_iter().map(|k| pair_from_index(num_nodes, k));
    let graph = Graph::from_edges(num_nodes, edges)?;

    let mut label_rng = purpose_rng(seed, "er-labels", 0);
    let labels: Vec<usize> = (0..num_nodes)
        .map(|_| label_rng.gen_range(0..num_classes))
        .collect();
    let mut feature_rng = purpose_rng(seed, "er-features", 0);
    let values = (0..num_nodes * num_features)
        .map(|_| StandardNormal.sample(&mut feature_rng))
        .collect();
    let features = DenseMatrix::from_vec(num_nodes, num_features, values)?;
    Dataset::new(graph, features, labels, half_split(num_nodes, seed), num_classes)
}

/// Half the nodes for testing; of the other half 30% validate and the rest
/// train.
fn half_split(n: usize, seed: u64) -> Split {
    let mut rng = purpose_rng(seed, "split", 0);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let train_total = n / 2;
    let val = (0.3 * train_total as f64).round() as usize;
    let mut split = Split {
        val: order[..val].to_vec(),
        train: order[val..train_total].to_vec(),
        test: order[train_total..].to_vec(),
    };
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    split
}

/// Offset of row `i` in the row-major strict upper triangle of an n×n matrix.
#[inline]
pub(crate) fn triangle_row_offset(n: usize, i: usize) -> usize {
    i * (2 * n - i - 1) / 2
}

/// Inverse of the row-major strict upper triangle enumeration.
pub(crate) fn pair_from_index(n: usize, k: usize) -> (usize, usize) {
    // largest i with offset(i) <= k; offset(n - 1) is the total count
    let (mut lo, mut hi) = (0, n - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if triangle_row_offset(n, mid) <= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let i = lo;
    (i, i + 1 + k - triangle_row_offset(n, i))
}

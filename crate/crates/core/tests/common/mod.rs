//! Independent reference computations shared by the integration tests and
//! the acceptance runner. Nothing here calls the code it is used to check.

#![allow(dead_code)]

use lpgnet::graph::Graph;
use lpgnet::matrix::DenseMatrix;
use lpgnet::models::{cluster_degree_counts, upper_triangle};
use lpgnet::nn::{cross_entropy, Network, NormalizedAdjacency};
use lpgnet::rng::stream_rng;

/// Fraction of (positive, negative) pairs ordered correctly, ties counted half.
pub fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut wins = 0.0;
    for &p in pos {
        for &n in neg {
            wins += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    wins / (pos.len() * neg.len()) as f64
}

pub fn laplace_cdf(x: f64, b: f64) -> f64 {
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// Two-sided Kolmogorov–Smirnov distance between a sample and a CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Counts from a dense adjacency matrix with a double loop over (node, cluster).
pub fn brute_degree_counts(n: usize, edges: &[(usize, usize)], labels: &[usize], c: usize) -> Vec<Vec<f64>> {
    let mut adj = vec![vec![false; n]; n];
    for &(u, v) in edges {
        if u != v {
            adj[u][v] = true;
            adj[v][u] = true;
        }
    }
    (0..n)
        .map(|v| {
            (0..c)
                .map(|k| (0..n).filter(|&u| adj[v][u] && labels[u] == k).count() as f64)
                .collect()
        })
        .collect()
}

/// All unordered pairs of `n` nodes in lexicographic order.
pub fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

/// Graph whose edges are the pairs selected by the bits of `mask`.
pub fn graph_from_mask(n: usize, pairs: &[(usize, usize)], mask: u64) -> Graph {
    let edges = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p);
    Graph::from_edges(n, edges).expect("valid pairs")
}

fn l1(a: &[f64], b: &[f64]) -> (f64, usize) {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    (diff.iter().sum(), diff.iter().filter(|&&d| d != 0.0).count())
}

/// `(L1 distance, entries changed)` of the pre-noise degree vectors when
/// `(u, v)` is toggled.
pub fn degree_toggle_change(g: &Graph, labels: &[usize], c: usize, u: usize, v: usize) -> (f64, usize) {
    let toggled = g.with_edge_toggled(u, v).expect("valid toggle");
    let a = cluster_degree_counts(g, labels, c).expect("counts");
    let b = cluster_degree_counts(&toggled, labels, c).expect("counts");
    l1(a.values(), b.values())
}

/// `(L1 distance, entries changed)` of the pre-noise upper-triangle arrays.
pub fn triangle_toggle_change(g: &Graph, u: usize, v: usize) -> (f64, usize) {
    let toggled = g.with_edge_toggled(u, v).expect("valid toggle");
    l1(&upper_triangle(g), &upper_triangle(&toggled))
}

/// Largest relative error between backprop gradients and central finite
/// differences over every parameter. With `dropout_seed` the same mask is
/// replayed for each loss evaluation.
pub fn gradient_check(
    net: &Network,
    x: &DenseMatrix,
    adjacency: Option<&NormalizedAdjacency>,
    labels: &[usize],
    rows: &[usize],
    dropout_seed: Option<u64>,
) -> f64 {
    let loss_of = |net: &Network| {
        let mut rng = dropout_seed.map(stream_rng);
        let pass = net.forward(x, adjacency, rng.as_mut()).expect("forward");
        cross_entropy(&pass.logits, labels, rows).expect("loss").0
    };
    let mut rng = dropout_seed.map(stream_rng);
    let pass = net.forward(x, adjacency, rng.as_mut()).expect("forward");
    let (_, grad_logits) = cross_entropy(&pass.logits, labels, rows).expect("loss");
    let analytic: Vec<f64> = net.backward(&pass, grad_logits, adjacency).expect("backward").flat().collect();

    let h = 1e-5;
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let original = *probe.params_mut().nth(i).expect("parameter");
        *probe.params_mut().nth(i).expect("parameter") = original + h;
        let up = loss_of(&probe);
        *probe.params_mut().nth(i).expect("parameter") = original - h;
        let down = loss_of(&probe);
        *probe.params_mut().nth(i).expect("parameter") = original;
        let numeric = (up - down) / (2.0 * h);
        let scale = a.abs().max(numeric.abs());
        // gradients this small are dominated by rounding in the difference
        if scale > 1e-6 {
            worst = worst.max((a - numeric).abs() / scale);
        }
    }
    worst
}

/// Smallest |pre-activation| over the hidden layers. Central differences are
/// only meaningful when this exceeds the step size.
pub fn kink_margin(net: &Network, x: &DenseMatrix, adjacency: Option<&NormalizedAdjacency>) -> f64 {
    let mut h = x.clone();
    let mut margin = f64::INFINITY;
    for layer in &net.layers[..net.layers.len() - 1] {
        let mut z = h.matmul(&layer.weight).expect("shapes");
        if let Some(a) = adjacency {
            z = a.matmul(&z).expect("shapes");
        }
        z.add_row_vector(&layer.bias).expect("shapes");
        margin = z.values().iter().fold(margin, |m, v| m.min(v.abs()));
        z.map_inplace(|v| v.max(0.0));
        h = z;
    }
    margin
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut r = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        idx[i..=j].iter().for_each(|&k| r[k] = mid);
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson on mid-ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

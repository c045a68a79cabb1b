//! Noisy adjacency release: Laplace noise on every strict-upper-triangle
//! entry, then keep the top-Ẽ entries as the released edge set.

use std::cmp::Ordering;

use crate::dp::{Epsilon, Laplace, ADJACENCY_ENTRY_SENSITIVITY, EDGE_COUNT_SENSITIVITY};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::par;
use crate::rng::{derive_seed, purpose_rng, row_rng};

/// Default share of ε spent on the noisy edge count.
pub const DEFAULT_EPS_R: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedAdjacency {
    pub graph: Graph,
    /// Clamped Ẽ; equals `graph.num_edges()`.
    pub selected_edges: usize,
    /// Fraction of selected edges absent from the original graph.
    pub noisy_fraction: f64,
}

/// Row `i` of the strict upper triangle of the adjacency matrix: entries
/// `(i, j)` for `j > i`, as 0/1.
pub fn upper_triangle_row(graph: &Graph, i: usize) -> Vec<f64> {
    let n = graph.num_nodes();
    let mut row = vec![0.0; n.saturating_sub(i + 1)];
    for &j in graph.neighbors(i).iter().filter(|&&j| j > i) {
        row[j - i - 1] = 1.0;
    }
    row
}

/// The whole strict upper triangle, row-major.
pub fn upper_triangle(graph: &Graph) -> Vec<f64> {
    (0..graph.num_nodes())
        .flat_map(|i| upper_triangle_row(graph, i))
        .collect()
}

/// Releases a noisy edge set with budget `eps`, of which `eps_r` goes to
/// the edge count. Ties among noisy values keep the lower (row, col).
pub fn dpgcn_perturb(graph: &Graph, eps: Epsilon, eps_r: f64, seed: u64) -> Result<PerturbedAdjacency> {
    if !eps.is_finite() {
        return Err(Error::invalid("adjacency perturbation needs a finite ε"));
    }
    let total = eps.value();
    if !(eps_r > 0.0 && eps_r < total) {
        return Err(Error::invalid(format!("ε_r = {eps_r} must lie in (0, ε = {total})")));
    }
    let n = graph.num_nodes();
    let pairs = n * n.saturating_sub(1) / 2;

    let count_noise = Laplace::new(EDGE_COUNT_SENSITIVITY / eps_r)?;
    let noisy_count = (graph.num_edges() as f64 + count_noise.sample(&mut purpose_rng(seed, "dpgcn-edge-count", 0))).floor();
    let selected_edges = noisy_count.clamp(0.0, pairs as f64) as usize;

    let entry_noise = Laplace::new(ADJACENCY_ENTRY_SENSITIVITY / (total - eps_r))?;
    let matrix_seed = derive_seed(seed, "dpgcn-adjacency", 0);
    let rows: Vec<Vec<(f64, usize)>> = par::map_range(n, |i| {
        let mut rng = row_rng(matrix_seed, i as u64);
        let offset = crate::graph::triangle_row_offset(n, i);
        upper_triangle_row(graph, i)
            .into_iter()
            .enumerate()
            .map(|(k, a)| (a + entry_noise.sample(&mut rng), offset + k))
            .collect()
    });
    let mut entries: Vec<(f64, usize)> = rows.into_iter().flatten().collect();

    // larger value first, then lower triangle index
    let order = |a: &(f64, usize), b: &(f64, usize)| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1));
    if selected_edges < entries.len() && selected_edges > 0 {
        entries.select_nth_unstable_by(selected_edges - 1, order);
    }
    entries.truncate(selected_edges);

    let edges: Vec<(usize, usize)> = entries
        .iter()
        .map(|&(_, k)| crate::graph::pair_from_index(n, k))
        .collect();
    let noisy = edges.iter().filter(|&&(u, v)| !graph.has_edge(u, v)).count();
    Ok(PerturbedAdjacency {
        graph: Graph::from_edges(n, edges)?,
        selected_edges,
        noisy_fraction: noisy as f64 / selected_edges.max(1) as f64,
    })
}

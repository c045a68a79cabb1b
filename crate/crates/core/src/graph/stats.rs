use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
}

/// Node and edge counts plus density `2|E| / (N(N-1))`.
pub fn graph_stats(graph: &Graph) -> Result<GraphStats> {
    let n = graph.num_nodes();
    if n < 2 {
        return Err(Error::invalid("density needs at least two nodes"));
    }
    let edges = graph.num_edges();
    Ok(GraphStats {
        nodes: n,
        edges,
        density: 2.0 * edges as f64 / (n as f64 * (n - 1) as f64),
    })
}

/// Fraction of same-label neighbors per node, averaged per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyProfile {
    /// Mean score over the non-isolated nodes of each class; `NaN` when a
    /// class has none.
    pub per_cluster_avg: Vec<f64>,
    /// Number of non-isolated nodes behind each class average.
    pub per_cluster_nodes: Vec<usize>,
    /// `None` for isolated nodes.
    pub per_node_score: Vec<Option<f64>>,
}

pub fn homophily_profile(graph: &Graph, labels: &[usize], num_classes: usize) -> Result<HomophilyProfile> {
    if labels.len() != graph.num_nodes() {
        return Err(Error::shape(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.num_nodes()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!("label {l} outside [0, {num_classes})")));
    }
    let per_node_score: Vec<Option<f64>> = (0..graph.num_nodes())
        .map(|v| {
            let nb = graph.neighbors(v);
            (!nb.is_empty()).then(|| {
                let same = nb.iter().filter(|&&u| labels[u] == labels[v]).count();
                same as f64 / nb.len() as f64
            })
        })
        .collect();
    let mut sums = vec![0.0; num_classes];
    let mut counts = vec![0usize; num_classes];
    for (v, score) in per_node_score.iter().enumerate() {
        if let Some(s) = score {
            sums[labels[v]] += s;
            counts[labels[v]] += 1;
        }
    }
    let per_cluster_avg = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
        .collect();
    Ok(HomophilyProfile {
        per_cluster_avg,
        per_cluster_nodes: counts,
        per_node_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_bipartite, BipartiteParams};
    use proptest::prelude::*;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn triangle_scores() {
        let h = homophily_profile(&triangle(), &[0, 0, 1], 2).unwrap();
        assert_eq!(h.per_node_score, vec![Some(0.5), Some(0.5), Some(0.0)]);
        assert_eq!(h.per_cluster_avg, vec![0.5, 0.0]);
    }

    #[test]
    fn bipartite_has_zero_homophily() {
        let d = generate_bipartite(&BipartiteParams::default(), 2).unwrap();
        let h = homophily_profile(&d.graph, &d.labels, 2).unwrap();
        assert_eq!(h.per_cluster_avg, vec![0.0, 0.0]);
    }

    #[test]
    fn complete_graph_single_cluster() {
        let edges = (0..5).flat_map(|u| (u + 1..5).map(move |v| (u, v)));
        let g = Graph::from_edges(5, edges).unwrap();
        let h = homophily_profile(&g, &[0; 5], 1).unwrap();
        assert_eq!(h.per_cluster_avg, vec![1.0]);
    }

    #[test]
    fn isolated_nodes_are_excluded() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let h = homophily_profile(&g, &[0, 0, 0], 1).unwrap();
        assert_eq!(h.per_node_score[2], None);
        assert_eq!(h.per_cluster_nodes, vec![2]);
    }

    #[test]
    fn densities() {
        assert_eq!(graph_stats(&triangle()).unwrap().density, 1.0);
        let path = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert!((graph_stats(&path).unwrap().density - 2.0 / 3.0).abs() < 1e-15);
        assert!(graph_stats(&Graph::empty(1)).is_err());
    }

    proptest! {
        #[test]
        fn scores_in_unit_interval(n in 2usize..15, raw in proptest::collection::vec((0usize..15, 0usize..15), 0..40), labels in proptest::collection::vec(0usize..3, 15)) {
            let edges: Vec<_> = raw.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
            let g = Graph::from_edges(n, edges).unwrap();
            let h = homophily_profile(&g, &labels[..n], 3).unwrap();
            prop_assert!(h.per_node_score.iter().flatten().all(|s| (0.0..=1.0).contains(s)));
            let non_isolated = (0..n).filter(|&v| g.degree(v) > 0).count();
            prop_assert_eq!(h.per_cluster_nodes.iter().sum::<usize>(), non_isolated);
        }
    }
}

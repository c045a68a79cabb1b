//! Undirected, unweighted graphs in compressed sparse row form.
//!
//! Both directions of every edge are stored so that `neighbors(v)` is a plain
//! slice. Neighbor lists are sorted and duplicate-free and there are no
//! self-loops.

mod dataset;
mod generate;
pub mod io;
mod stats;

pub use dataset::{Dataset, Split};
pub use generate::{generate_bipartite, generate_erdos_renyi, BipartiteParams};
pub(crate) use generate::{pair_from_index, triangle_row_offset};
pub use stats::{graph_stats, homophily_profile, GraphStats, HomophilyProfile};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    row_offsets: Vec<usize>,
    neighbor_ids: Vec<usize>,
}

impl Graph {
    /// Empty graph on `num_nodes` nodes.
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            row_offsets: vec![0; num_nodes + 1],
            neighbor_ids: Vec::new(),
        }
    }

    /// Builds a graph from undirected pairs. Duplicates and reversed
    /// duplicates collapse into one edge; self-loops and out-of-range ids are
    /// rejected.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for (u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::invalid(format!(
                    "edge ({u}, {v}) references a node >= {num_nodes}"
                )));
            }
            if u == v {
                return Err(Error::invalid(format!("self-loop on node {u}")));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        Ok(Self::from_adjacency(adjacency))
    }

    fn from_adjacency(mut adjacency: Vec<Vec<usize>>) -> Self {
        let mut row_offsets = Vec::with_capacity(adjacency.len() + 1);
        row_offsets.push(0);
        let mut neighbor_ids = Vec::new();
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            neighbor_ids.extend_from_slice(list);
            row_offsets.push(neighbor_ids.len());
        }
        Self {
            row_offsets,
            neighbor_ids,
        }
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.row_offsets.len() - 1
    }

    #[inline]
    pub fn num_edges(&self) -> usize {
        self.neighbor_ids.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbor_ids[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.num_nodes() && self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn neighbor_ids(&self) -> &[usize] {
        &self.neighbor_ids
    }

    /// Every edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// Graph induced by `nodes`; node `nodes[i]` becomes node `i`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut local = vec![usize::MAX; self.num_nodes()];
        for (i, &v) in nodes.iter().enumerate() {
            if v >= self.num_nodes() {
                return Err(Error::invalid(format!("node {v} out of range")));
            }
            if local[v] != usize::MAX {
                return Err(Error::invalid(format!("node {v} listed twice")));
            }
            local[v] = i;
        }
        let adjacency = nodes
            .iter()
            .map(|&v| {
                self.neighbors(v)
                    .iter()
                    .filter_map(|&u| (local[u] != usize::MAX).then_some(local[u]))
                    .collect()
            })
            .collect();
        Ok(Self::from_adjacency(adjacency))
    }

    /// Copy of the graph with the edge `{u, v}` toggled.
    pub fn with_edge_toggled(&self, u: usize, v: usize) -> Result<Graph> {
        if u == v {
            return Err(Error::invalid("cannot toggle a self-loop"));
        }
        let present = self.has_edge(u, v);
        let edges: Vec<_> = self
            .edges()
            .filter(|&e| !(present && (e == (u.min(v), u.max(v)))))
            .chain((!present).then_some((u, v)))
            .collect();
        Graph::from_edges(self.num_nodes(), edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn duplicates_collapse() {
        let g = Graph::from_edges(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn rejects_self_loops_and_range() {
        assert!(Graph::from_edges(3, [(0, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let s = g.induced_subgraph(&[3, 2, 0]).unwrap();
        assert_eq!(s.num_nodes(), 3);
        assert_eq!(s.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }

    #[test]
    fn toggle_adds_and_removes() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let added = g.with_edge_toggled(2, 1).unwrap();
        assert!(added.has_edge(1, 2));
        let removed = added.with_edge_toggled(1, 0).unwrap();
        assert_eq!(removed.edges().collect::<Vec<_>>(), vec![(1, 2)]);
    }

    proptest! {
        #[test]
        fn csr_invariants(n in 1usize..20, raw in proptest::collection::vec((0usize..20, 0usize..20), 0..60)) {
            let edges: Vec<_> = raw.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
            let g = Graph::from_edges(n, edges).unwrap();
            let mut total = 0;
            for u in 0..n {
                let nb = g.neighbors(u);
                prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!nb.contains(&u));
                for &v in nb {
                    prop_assert!(g.has_edge(v, u));
                }
                total += nb.len();
            }
            prop_assert_eq!(total, 2 * g.num_edges());
        }
    }
}

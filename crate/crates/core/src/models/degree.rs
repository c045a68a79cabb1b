//! Cluster degree vectors: for every node, how many of its neighbors fall in
//! each predicted cluster, optionally with Laplace noise.

use std::io::{Read, Write};
use std::path::Path;

use crate::dp::{Epsilon, Laplace, DEGREE_VECTOR_SENSITIVITY};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::par;
use crate::rng::row_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeVectorMatrix {
    /// `N × C`
    pub values: DenseMatrix,
    pub epsilon: Epsilon,
    pub layer: usize,
}

/// Exact per-cluster neighbor counts, `N × num_classes`. Isolated nodes get
/// a zero row.
pub fn cluster_degree_counts(graph: &Graph, labels: &[usize], num_classes: usize) -> Result<DenseMatrix> {
    if labels.len() != graph.num_nodes() {
        return Err(Error::shape(format!(
            "{} labels for {} nodes",
            labels.len(),
            graph.num_nodes()
        )));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::invalid(format!("cluster {l} outside [0, {num_classes})")));
    }
    let mut counts = DenseMatrix::zeros(graph.num_nodes(), num_classes);
    par::for_each_row_mut(counts.values_mut(), num_classes, |v, row| {
        for &u in graph.neighbors(v) {
            row[labels[u]] += 1.0;
        }
    });
    Ok(counts)
}

/// Degree vectors with Laplace(0, 2/ε) noise on every entry; no noise when
/// ε is infinite. Row `v` draws from its own stream of `noise_seed`, so the
/// result does not depend on thread count.
pub fn find_degree_vec(
    graph: &Graph,
    labels: &[usize],
    num_classes: usize,
    epsilon: Epsilon,
    noise_seed: u64,
    layer: usize,
) -> Result<DegreeVectorMatrix> {
    let mut values = cluster_degree_counts(graph, labels, num_classes)?;
    if let Some(scale) = epsilon.noise_scale(DEGREE_VECTOR_SENSITIVITY) {
        let noise = Laplace::new(scale)?;
        par::for_each_row_mut(values.values_mut(), num_classes, |v, row| {
            let mut rng = row_rng(noise_seed, v as u64);
            for x in row.iter_mut() {
                *x += noise.sample(&mut rng);
            }
        });
    }
    Ok(DegreeVectorMatrix {
        values,
        epsilon,
        layer,
    })
}

const CACHE_MAGIC: &[u8; 8] = b"LPGDV01\0";

impl DegreeVectorMatrix {
    /// Binary cache: magic, then little-endian `rows`, `cols`, `layer` (u64),
    /// `epsilon` (f64, +inf for non-private) and the row-major values.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(40 + 8 * self.values.values().len());
        buf.extend_from_slice(CACHE_MAGIC);
        for n in [self.values.rows(), self.values.cols(), self.layer] {
            buf.extend_from_slice(&(n as u64).to_le_bytes());
        }
        buf.extend_from_slice(&self.epsilon.value().to_le_bytes());
        for v in self.values.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let bad = || Error::invalid(format!("{} is not a degree-vector cache", path.display()));
        if buf.len() < 40 || &buf[..8] != CACHE_MAGIC {
            return Err(bad());
        }
        let word = |i: usize| -> [u8; 8] { buf[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes") };
        let rows = u64::from_le_bytes(word(0)) as usize;
        let cols = u64::from_le_bytes(word(1)) as usize;
        let layer = u64::from_le_bytes(word(2)) as usize;
        let eps = f64::from_le_bytes(word(3));
        if buf.len() != 40 + 8 * rows * cols {
            return Err(bad());
        }
        let values = buf[40..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let epsilon = if eps.is_infinite() { Epsilon::INFINITE } else { Epsilon::new(eps)? };
        Ok(Self {
            values: DenseMatrix::from_vec(rows, cols, values)?,
            epsilon,
            layer,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn triangle() -> Graph {
        Graph::from_edges(3, [(0, 1), (0, 2), (1, 2)]).unwrap()
    }

    #[test]
    fn exact_triangle_counts() {
        let x = find_degree_vec(&triangle(), &[0, 0, 1], 2, Epsilon::INFINITE, 0, 0).unwrap();
        assert_eq!(x.values.values(), &[1., 1., 1., 1., 2., 0.]);
    }

    #[test]
    fn isolated_node_zero_row() {
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        let x = find_degree_vec(&g, &[1, 0, 1], 2, Epsilon::INFINITE, 0, 0).unwrap();
        assert_eq!(x.values.row(2), &[0.0, 0.0]);
    }

    #[test]
    fn brute_force_agreement() {
        let mut rng = stream_rng(5);
        for n in [1usize, 2, 7, 23, 50] {
            let edges: Vec<_> = (0..n * 2)
                .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
                .filter(|(u, v)| u != v)
                .collect();
            let g = Graph::from_edges(n, edges).unwrap();
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let x = find_degree_vec(&g, &labels, 3, Epsilon::INFINITE, 0, 0).unwrap();
            for v in 0..n {
                for c in 0..3 {
                    let count = (0..n).filter(|&u| g.has_edge(v, u) && labels[u] == c).count();
                    assert_eq!(x.values.get(v, c), count as f64);
                }
            }
        }
    }

    #[test]
    fn noise_is_seeded() {
        let eps = Epsilon::new(1.0).unwrap();
        let a = find_degree_vec(&triangle(), &[0, 0, 1], 2, eps, 7, 0).unwrap();
        let b = find_degree_vec(&triangle(), &[0, 0, 1], 2, eps, 7, 0).unwrap();
        let c = find_degree_vec(&triangle(), &[0, 0, 1], 2, eps, 8, 0).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(find_degree_vec(&triangle(), &[0, 0], 2, Epsilon::INFINITE, 0, 0).is_err());
        assert!(find_degree_vec(&triangle(), &[0, 0, 2], 2, Epsilon::INFINITE, 0, 0).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let eps = Epsilon::new(0.5).unwrap();
        let x = find_degree_vec(&triangle(), &[0, 1, 1], 2, eps, 3, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        x.write_cache(&p).unwrap();
        assert_eq!(DegreeVectorMatrix::read_cache(&p).unwrap(), x);
        let inf = find_degree_vec(&triangle(), &[0, 1, 1], 2, Epsilon::INFINITE, 3, 0).unwrap();
        inf.write_cache(&p).unwrap();
        assert_eq!(DegreeVectorMatrix::read_cache(&p).unwrap(), inf);
        std::fs::write(&p, b"junk").unwrap();
        assert!(DegreeVectorMatrix::read_cache(&p).is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::par;

/// Square sparse matrix with values, CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_offsets: Vec<usize>,
    col_ids: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_offsets: (0..=n).collect(),
            col_ids: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_ids[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// `self · rhs`, rows in parallel, each row summed in column order.
    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if rhs.rows() != self.n {
            return Err(Error::shape(format!(
                "sparse {n}x{n} by dense {}x{}",
                rhs.rows(),
                rhs.cols(),
                n = self.n
            )));
        }
        let mut out = DenseMatrix::zeros(self.n, rhs.cols());
        par::for_each_row_mut(out.values_mut(), rhs.cols(), |i, out_row| {
            for (j, a) in self.row(i) {
                for (o, &b) in out_row.iter_mut().zip(rhs.row(j)) {
                    *o += a * b;
                }
            }
        });
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// `I + D^-1/2 A D^-1/2`
    FirstOrderGcn,
    /// `(D+I)^-1/2 A (D+I)^-1/2`
    #[default]
    AugNormAdj,
}

impl fmt::Display for NormalizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormalizationMode::FirstOrderGcn => "first_order_gcn",
            NormalizationMode::AugNormAdj => "aug_norm_adj",
        })
    }
}

impl FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "first_order_gcn" => Ok(Self::FirstOrderGcn),
            "aug_norm_adj" => Ok(Self::AugNormAdj),
            _ => Err(Error::invalid(format!("unknown normalization {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub matrix: CsrMatrix,
    pub mode: Option<NormalizationMode>,
}

impl NormalizedAdjacency {
    /// Identity propagation, which turns a GCN into an MLP.
    pub fn identity(n: usize) -> Self {
        Self {
            matrix: CsrMatrix::identity(n),
            mode: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.matrix.matmul(rhs)
    }
}

/// Isolated nodes get no off-diagonal entries; under `FirstOrderGcn` they
/// keep the identity diagonal.
pub fn normalize_adjacency(graph: &Graph, mode: NormalizationMode) -> NormalizedAdjacency {
    let n = graph.num_nodes();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|v| {
            let d = graph.degree(v) as f64;
            match mode {
                NormalizationMode::FirstOrderGcn if d == 0.0 => 0.0,
                NormalizationMode::FirstOrderGcn => 1.0 / d.sqrt(),
                NormalizationMode::AugNormAdj => 1.0 / (d + 1.0).sqrt(),
            }
        })
        .collect();
    let mut row_offsets = Vec::with_capacity(n + 1);
    row_offsets.push(0);
    let mut col_ids = Vec::new();
    let mut values = Vec::new();
    for u in 0..n {
        let mut diagonal_done = mode != NormalizationMode::FirstOrderGcn;
        for &v in graph.neighbors(u) {
            if !diagonal_done && v > u {
                col_ids.push(u);
                values.push(1.0);
                diagonal_done = true;
            }
            col_ids.push(v);
            values.push(inv_sqrt[u] * inv_sqrt[v]);
        }
        if !diagonal_done {
            col_ids.push(u);
            values.push(1.0);
        }
        row_offsets.push(col_ids.len());
    }
    NormalizedAdjacency {
        matrix: CsrMatrix {
            n,
            row_offsets,
            col_ids,
            values,
        },
        mode: Some(mode),
    }
}

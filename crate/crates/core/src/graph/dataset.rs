use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Train / validation / test node ids.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    #[serde(alias = "validation")]
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut owner = vec![None; num_nodes];
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &v in ids {
                if v >= num_nodes {
                    return Err(Error::invalid(format!(
                        "{name} split references node {v} >= {num_nodes}"
                    )));
                }
                if let Some(prev) = owner[v].replace(name) {
                    return Err(Error::invalid(format!(
                        "node {v} is in both the {prev} and {name} splits"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    pub split: Split,
    pub num_classes: usize,
}

impl Dataset {
    pub fn new(
        graph: Graph,
        features: DenseMatrix,
        labels: Vec<usize>,
        split: Split,
        num_classes: usize,
    ) -> Result<Self> {
        let n = graph.num_nodes();
        if features.rows() != n {
            return Err(Error::invalid(format!(
                "{} feature rows for {n} nodes",
                features.rows()
            )));
        }
        if labels.len() != n {
            return Err(Error::invalid(format!("{} labels for {n} nodes", labels.len())));
        }
        if let Some((v, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= num_classes) {
            return Err(Error::invalid(format!(
                "label {l} of node {v} is outside [0, {num_classes})"
            )));
        }
        split.validate(n)?;
        Ok(Self {
            graph,
            features,
            labels,
            split,
            num_classes,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(labels: Vec<usize>, split: Split) -> Result<Dataset> {
        let g = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        Dataset::new(g, DenseMatrix::zeros(3, 1), labels, split, 2)
    }

    #[test]
    fn accepts_disjoint_split() {
        let split = Split {
            train: vec![0],
            val: vec![1],
            test: vec![2],
        };
        assert!(tiny(vec![0, 1, 1], split).is_ok());
    }

    #[test]
    fn rejects_overlap_and_bad_labels() {
        let overlap = Split {
            train: vec![0, 1],
            val: vec![1],
            test: vec![2],
        };
        assert!(tiny(vec![0, 1, 1], overlap).is_err());
        assert!(tiny(vec![0, 2, 1], Split::default()).is_err());
    }
}

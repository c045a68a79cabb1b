//! Per-setting graphs seen by each phase of a run.
//!
//! - transductive: every phase sees the full graph.
//! - inductive_different: training and validation see the graph induced by
//!   train ∪ val; inference sees the graph induced by the test nodes.
//! - inductive_evolving: training sees the graph induced by the train nodes,
//!   validation the one induced by train ∪ val, inference the full graph.

use crate::dp::Setting;
use crate::error::Result;
use crate::graph::{Dataset, Graph};
use crate::matrix::DenseMatrix;

/// One phase's graph with its features and labels, re-indexed locally.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseView {
    pub graph: Graph,
    pub features: DenseMatrix,
    pub labels: Vec<usize>,
    /// Local rows that carry a loss or an evaluation in this phase.
    pub rows: Vec<usize>,
    /// `nodes[i]` is the dataset id of local node `i`.
    pub nodes: Vec<usize>,
}

impl PhaseView {
    fn induced(dataset: &Dataset, nodes: Vec<usize>, rows_of: &[usize]) -> Result<Self> {
        Ok(Self {
            graph: dataset.graph.induced_subgraph(&nodes)?,
            features: dataset.features.select_rows(&nodes),
            labels: nodes.iter().map(|&v| dataset.labels[v]).collect(),
            rows: local_rows(dataset.num_nodes(), &nodes, rows_of),
            nodes,
        })
    }

    fn full(dataset: &Dataset, rows: &[usize]) -> Self {
        Self {
            graph: dataset.graph.clone(),
            features: dataset.features.clone(),
            labels: dataset.labels.clone(),
            rows: rows.to_vec(),
            nodes: (0..dataset.num_nodes()).collect(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    /// Same graph and features with different evaluation rows.
    pub fn with_rows(&self, rows: Vec<usize>) -> Self {
        Self { rows, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingViews {
    pub setting: Setting,
    pub train: PhaseView,
    /// Validation on the training graph (rows only) or on its own graph.
    pub validation: ValidationView,
    pub inference: PhaseView,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ValidationView {
    SameGraph { rows: Vec<usize> },
    Separate(PhaseView),
}

impl ValidationView {
    pub fn rows(&self) -> &[usize] {
        match self {
            Self::SameGraph { rows } => rows,
            Self::Separate(view) => &view.rows,
        }
    }
}

/// Local positions of `ids` within `nodes`.
fn local_rows(num_nodes: usize, nodes: &[usize], ids: &[usize]) -> Vec<usize> {
    let mut local = vec![usize::MAX; num_nodes];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    ids.iter().map(|&v| local[v]).collect()
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn sorted(a: &[usize]) -> Vec<usize> {
    sorted_union(a, &[])
}

impl SettingViews {
    pub fn new(dataset: &Dataset, setting: Setting) -> Result<Self> {
        let split = &dataset.split;
        Ok(match setting {
            Setting::Transductive => Self {
                setting,
                train: PhaseView::full(dataset, &split.train),
                validation: ValidationView::SameGraph {
                    rows: split.val.clone(),
                },
                inference: PhaseView::full(dataset, &split.test),
            },
            Setting::InductiveDifferent => {
                let train = PhaseView::induced(dataset, sorted_union(&split.train, &split.val), &split.train)?;
                let local = local_rows(dataset.num_nodes(), &train.nodes, &split.val);
                let test = sorted(&split.test);
                Self {
                    setting,
                    train,
                    validation: ValidationView::SameGraph { rows: local },
                    inference: PhaseView::induced(dataset, test.clone(), &test)?,
                }
            }
            Setting::InductiveEvolving => {
                let train_nodes = sorted(&split.train);
                Self {
                    setting,
                    train: PhaseView::induced(dataset, train_nodes.clone(), &train_nodes)?,
                    validation: ValidationView::Separate(PhaseView::induced(
                        dataset,
                        sorted_union(&split.train, &split.val),
                        &split.val,
                    )?),
                    inference: PhaseView::full(dataset, &split.test),
                }
            }
        })
    }

    /// Graph, features and labels the validation phase runs on.
    pub fn validation_view(&self) -> PhaseView {
        match &self.validation {
            ValidationView::SameGraph { rows } => self.train.with_rows(rows.clone()),
            ValidationView::Separate(view) => view.clone(),
        }
    }
}

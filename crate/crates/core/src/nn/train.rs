//! Full-batch training with per-epoch model selection.

use serde::{Deserialize, Serialize};

use super::{cross_entropy, Adam, GcnModel, MlpModel, Network, NormalizedAdjacency};
use crate::error::{Error, Result};
use crate::eval::micro_f1;
use crate::matrix::DenseMatrix;
use crate::rng::purpose_rng;

/// How the per-epoch snapshot to keep is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    /// Highest validation micro-F1; ties keep the earliest epoch.
    #[default]
    ValidationF1,
    /// Lowest validation loss.
    ValidationLoss,
    /// Lowest training loss; used when there is no validation set.
    TrainingLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub dropout: f64,
    pub hidden_size: usize,
    pub hidden_layers: usize,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub selection: SelectionMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            dropout: 0.5,
            hidden_size: 16,
            hidden_layers: 2,
            epochs: 500,
            weight_decay: 5e-4,
            seed: 0,
            selection: SelectionMetric::ValidationF1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.lr)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("at least one epoch is required"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::invalid("weight decay must be non-negative"));
        }
        Ok(())
    }
}

/// Rows of a feature matrix that carry a loss or an evaluation. With an
/// adjacency, the forward pass runs over every row of `features`.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub features: &'a DenseMatrix,
    pub labels: &'a [usize],
    pub rows: &'a [usize],
    pub adjacency: Option<&'a NormalizedAdjacency>,
}

impl<'a> Batch<'a> {
    pub fn new(features: &'a DenseMatrix, labels: &'a [usize], rows: &'a [usize]) -> Self {
        Self {
            features,
            labels,
            rows,
            adjacency: None,
        }
    }

    pub fn with_adjacency(mut self, adjacency: &'a NormalizedAdjacency) -> Self {
        self.adjacency = Some(adjacency);
        self
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.labels.len() != self.features.rows() {
            return Err(Error::shape(format!(
                "{what}: {} labels for {} feature rows",
                self.labels.len(),
                self.features.rows()
            )));
        }
        if let Some(&r) = self.rows.iter().find(|&&r| r >= self.features.rows()) {
            return Err(Error::shape(format!("{what}: row {r} out of range")));
        }
        Ok(())
    }

    /// Evaluation-mode loss and micro-F1 over `rows`.
    fn evaluate(&self, network: &Network, num_classes: usize) -> Result<(f64, f64)> {
        let (logits, labels, rows): (DenseMatrix, Vec<usize>, Vec<usize>) = match self.adjacency {
            Some(a) => (network.logits(self.features, Some(a))?, self.labels.to_vec(), self.rows.to_vec()),
            None => {
                let x = self.features.select_rows(self.rows);
                let labels = self.rows.iter().map(|&r| self.labels[r]).collect();
                (network.logits(&x, None)?, labels, (0..self.rows.len()).collect())
            }
        };
        let (loss, _) = cross_entropy(&logits, &labels, &rows)?;
        let predicted = logits.argmax_rows();
        let pred: Vec<usize> = rows.iter().map(|&r| predicted[r]).collect();
        let truth: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
        Ok((loss, micro_f1(&pred, &truth, num_classes)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// 1-based epoch of the kept snapshot.
    pub best_epoch: usize,
    /// Training loss (training mode) at each epoch, before the update.
    pub losses: Vec<f64>,
}

fn fit(
    mut network: Network,
    num_classes: usize,
    train: Batch<'_>,
    val: Option<Batch<'_>>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train.check("training")?;
    if train.rows.is_empty() {
        return Err(Error::invalid("training needs at least one labeled row"));
    }
    let val = match val {
        Some(v) if !v.rows.is_empty() => {
            v.check("validation")?;
            Some(v)
        }
        _ => None,
    };
    let selection = match (config.selection, val) {
        (SelectionMetric::ValidationF1 | SelectionMetric::ValidationLoss, None) => SelectionMetric::TrainingLoss,
        (s, _) => s,
    };

    let mut dropout_rng = purpose_rng(config.seed, "dropout", 0);
    let mut adam = Adam::new(network.num_params(), config.lr, config.weight_decay);
    let mut losses = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, Network)> = None;

    for epoch in 1..=config.epochs {
        let pass = network.forward(train.features, train.adjacency, Some(&mut dropout_rng))?;
        let (loss, grad) = cross_entropy(&pass.logits, train.labels, train.rows)?;
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        losses.push(loss);
        let grads = network.backward(&pass, grad, train.adjacency)?;
        adam.step(network.params_mut(), grads.flat());

        // higher is better
        let score = match selection {
            SelectionMetric::ValidationF1 => val.expect("checked").evaluate(&network, num_classes)?.1,
            SelectionMetric::ValidationLoss => -val.expect("checked").evaluate(&network, num_classes)?.0,
            SelectionMetric::TrainingLoss => -train.evaluate(&network, num_classes)?.0,
        };
        if score.is_nan() {
            return Err(Error::Divergence { epoch });
        }
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, epoch, network.clone()));
        }
    }
    let (_, best_epoch, network) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        network,
        best_epoch,
        losses,
    })
}

/// Trains an MLP on `train.rows`, keeping the best snapshot under
/// `config.selection`. The forward pass covers every row of
/// `train.features` so dropout draws line up with the GCN path.
pub fn train_mlp(
    num_classes: usize,
    train: Batch<'_>,
    val: Option<Batch<'_>>,
    config: &TrainConfig,
) -> Result<(MlpModel, TrainOutcome)> {
    config.validate()?;
    let train = Batch { adjacency: None, ..train };
    let val = val.map(|v| Batch { adjacency: None, ..v });
    let network = Network::new(
        train.features.cols(),
        config.hidden_size,
        config.hidden_layers,
        num_classes,
        config.dropout,
        &mut purpose_rng(config.seed, "init", 0),
    )?;
    let outcome = fit(network, num_classes, train, val, config)?;
    Ok((
        MlpModel {
            network: outcome.network.clone(),
        },
        outcome,
    ))
}

/// Semi-supervised GCN training: full-graph forward, loss on `train.rows`.
pub fn train_gcn(
    num_classes: usize,
    train: Batch<'_>,
    val: Option<Batch<'_>>,
    config: &TrainConfig,
) -> Result<(GcnModel, TrainOutcome)> {
    config.validate()?;
    if train.adjacency.is_none() || val.is_some_and(|v| v.adjacency.is_none()) {
        return Err(Error::invalid("GCN batches need an adjacency"));
    }
    let network = Network::new(
        train.features.cols(),
        config.hidden_size,
        config.hidden_layers,
        num_classes,
        config.dropout,
        &mut purpose_rng(config.seed, "init", 0),
    )?;
    let outcome = fit(network, num_classes, train, val, config)?;
    Ok((
        GcnModel {
            network: outcome.network.clone(),
        },
        outcome,
    ))
}

//! One interface over the four model kinds: train, infer, attack surface,
//! checkpoint.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dpgcn::{dpgcn_perturb, DEFAULT_EPS_R};
use super::lpgnet::{train_lpgnet, TrainedLpgnet};
use super::views::{PhaseView, SettingViews, ValidationView};
use crate::attacks::PosteriorOracle;
use crate::dp::{BudgetLedger, BudgetPlan, Epsilon, Phase, Setting};
use crate::error::{Error, Result};
use crate::eval::micro_f1;
use crate::graph::{io, Dataset, Graph};
use crate::matrix::DenseMatrix;
use crate::nn::{
    normalize_adjacency, train_gcn, train_mlp, Batch, GcnModel, MlpModel, Network, NormalizationMode,
    NormalizedAdjacency, TrainConfig,
};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Gcn,
    Dpgcn,
    Lpgnet,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::Mlp, Self::Gcn, Self::Dpgcn, Self::Lpgnet];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mlp => "mlp",
            Self::Gcn => "gcn",
            Self::Dpgcn => "dpgcn",
            Self::Lpgnet => "lpgnet",
        }
    }

    /// Whether the kind takes a privacy budget.
    pub fn is_private(self) -> bool {
        matches!(self, Self::Dpgcn | Self::Lpgnet)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown model kind {s:?}")))
    }
}

/// Everything that determines a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub setting: Setting,
    pub epsilon: Epsilon,
    /// Stack depth; only LPGNet uses more than one layer of queries.
    pub nl: usize,
    pub config: TrainConfig,
    /// Share of ε spent on the noisy edge count of the adjacency release.
    pub eps_r: f64,
    pub normalization: NormalizationMode,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, setting: Setting, epsilon: Epsilon) -> Self {
        Self {
            kind,
            setting,
            epsilon,
            nl: 1,
            config: TrainConfig::default(),
            eps_r: DEFAULT_EPS_R,
            normalization: NormalizationMode::default(),
        }
    }

    /// Budget plan of the run. Only LPGNet spreads ε over several layers.
    pub fn plan(&self) -> Result<BudgetPlan> {
        let nl = if self.kind == ModelKind::Lpgnet { self.nl } else { 1 };
        Ok(BudgetPlan::new(self.setting, self.epsilon, nl)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.kind == ModelKind::Gcn && self.epsilon.is_finite() {
            return Err(Error::invalid("a plain GCN is not private; use dpgcn for finite ε"));
        }
        if self.kind == ModelKind::Lpgnet && self.nl == 0 {
            return Err(Error::invalid("lpgnet needs nl >= 1"));
        }
        if self.kind == ModelKind::Dpgcn && self.epsilon.is_finite() {
            let plan = self.plan()?;
            for phase in Phase::ALL {
                let a = plan.allocation(phase);
                if a > 0.0 && a <= self.eps_r {
                    return Err(Error::invalid(format!(
                        "{phase:?} allocation {a} leaves nothing after ε_r = {}",
                        self.eps_r
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mlp(MlpModel),
    Gcn(GcnModel),
    /// A GCN trained on a noisy adjacency. `released` is the noisy inference
    /// graph once it exists (at training time for transductive runs).
    Dpgcn {
        model: GcnModel,
        train_noisy_fraction: Option<f64>,
        released: Option<Graph>,
    },
    Lpgnet(TrainedLpgnet),
}

/// A trained model with its spec and privacy ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRun {
    pub spec: ModelSpec,
    pub model: TrainedModel,
    pub ledger: BudgetLedger,
    pub num_classes: usize,
    pub noise_seed: u64,
}

fn phase_seed(noise_seed: u64, phase: Phase) -> u64 {
    let index = Phase::ALL.iter().position(|&p| p == phase).expect("known phase") as u64;
    derive_seed(noise_seed, "adjacency-release", index)
}

/// Graph a DpGCN sees in `phase`: released with a charge when private, the
/// true graph otherwise.
fn release(graph: &Graph, spec: &ModelSpec, ledger: &mut BudgetLedger, phase: Phase, noise_seed: u64) -> Result<(Graph, Option<f64>)> {
    if !ledger.plan.is_private() {
        return Ok((graph.clone(), None));
    }
    let eps = ledger.charge_planned(phase, 0)?;
    let p = dpgcn_perturb(graph, eps, spec.eps_r, phase_seed(noise_seed, phase))?;
    Ok((p.graph, Some(p.noisy_fraction)))
}

fn gcn_batches<'a>(
    views: &'a SettingViews,
    train_adj: &'a NormalizedAdjacency,
    val_adj: Option<&'a NormalizedAdjacency>,
) -> (Batch<'a>, Batch<'a>) {
    let train = &views.train;
    let train_batch = Batch::new(&train.features, &train.labels, &train.rows).with_adjacency(train_adj);
    let val_batch = match &views.validation {
        ValidationView::SameGraph { rows } => Batch::new(&train.features, &train.labels, rows).with_adjacency(train_adj),
        ValidationView::Separate(v) => {
            Batch::new(&v.features, &v.labels, &v.rows).with_adjacency(val_adj.expect("validation adjacency"))
        }
    };
    (train_batch, val_batch)
}

/// Trains `spec.kind` on `dataset` under `spec.setting`.
pub fn train_model(dataset: &Dataset, spec: &ModelSpec) -> Result<ModelRun> {
    let views = SettingViews::new(dataset, spec.setting)?;
    train_on_views(&views, dataset.num_classes, spec)
}

pub fn train_on_views(views: &SettingViews, num_classes: usize, spec: &ModelSpec) -> Result<ModelRun> {
    spec.validate()?;
    if views.setting != spec.setting {
        return Err(Error::invalid("views were built for a different setting"));
    }
    let mut ledger = BudgetLedger::new(spec.plan()?);
    let noise_seed = derive_seed(spec.config.seed, "privacy-noise", 0);
    let norm = spec.normalization;
    let model = match spec.kind {
        ModelKind::Mlp => {
            let t = &views.train;
            let val = views.validation_view();
            let (m, _) = train_mlp(
                num_classes,
                Batch::new(&t.features, &t.labels, &t.rows),
                Some(Batch::new(&val.features, &val.labels, &val.rows)),
                &spec.config,
            )?;
            TrainedModel::Mlp(m)
        }
        ModelKind::Gcn | ModelKind::Dpgcn => {
            let (train_graph, train_noisy_fraction) =
                release(&views.train.graph, spec, &mut ledger, Phase::Train, noise_seed)?;
            let val_graph = match &views.validation {
                ValidationView::Separate(v) => Some(release(&v.graph, spec, &mut ledger, Phase::Validation, noise_seed)?.0),
                ValidationView::SameGraph { .. } => None,
            };
            let train_adj = normalize_adjacency(&train_graph, norm);
            let val_adj = val_graph.as_ref().map(|g| normalize_adjacency(g, norm));
            let (tb, vb) = gcn_batches(views, &train_adj, val_adj.as_ref());
            let (model, _) = train_gcn(num_classes, tb, Some(vb), &spec.config)?;
            match spec.kind {
                ModelKind::Gcn => TrainedModel::Gcn(model),
                _ => TrainedModel::Dpgcn {
                    model,
                    train_noisy_fraction,
                    released: (spec.setting == Setting::Transductive).then_some(train_graph),
                },
            }
        }
        ModelKind::Lpgnet => TrainedModel::Lpgnet(train_lpgnet(views, num_classes, &mut ledger, &spec.config, noise_seed)?),
    };
    Ok(ModelRun {
        spec: spec.clone(),
        model,
        ledger,
        num_classes,
        noise_seed,
    })
}

/// Softmax posteriors of a feature-only model.
struct MlpOracle<'a>(&'a MlpModel);

impl PosteriorOracle for MlpOracle<'_> {
    fn posteriors(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.0.logits(features)?.softmax_rows())
    }
}

struct GcnOracle<'a> {
    model: &'a GcnModel,
    adjacency: NormalizedAdjacency,
}

impl PosteriorOracle for GcnOracle<'_> {
    fn posteriors(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.model.logits(&self.adjacency, features)?.softmax_rows())
    }
}

struct LpgnetOracle<'a>(&'a TrainedLpgnet);

impl PosteriorOracle for LpgnetOracle<'_> {
    fn posteriors(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        Ok(self.0.forward_cached(features)?.softmax_rows())
    }
}

impl ModelRun {
    /// Inference-phase logits on `view`. Inductive private models spend the
    /// inference allocation on the first call and reuse the result after.
    pub fn infer(&mut self, view: &PhaseView) -> Result<DenseMatrix> {
        let norm = self.spec.normalization;
        match &mut self.model {
            TrainedModel::Mlp(m) => m.logits(&view.features),
            TrainedModel::Gcn(m) => m.logits(&normalize_adjacency(&view.graph, norm), &view.features),
            TrainedModel::Dpgcn { model, released, .. } => {
                if released.is_none() {
                    let (g, _) = release(&view.graph, &self.spec, &mut self.ledger, Phase::Inference, self.noise_seed)?;
                    *released = Some(g);
                }
                let g = released.as_ref().expect("released above");
                if g.num_nodes() != view.num_nodes() {
                    return Err(Error::shape("released graph differs from the inference view"));
                }
                model.logits(&normalize_adjacency(g, norm), &view.features)
            }
            TrainedModel::Lpgnet(m) => m.infer(&view.graph, &view.features, &mut self.ledger),
        }
    }

    /// Micro-F1 of inference predictions on `view.rows`.
    pub fn evaluate(&mut self, view: &PhaseView) -> Result<f64> {
        let logits = self.infer(view)?;
        rows_f1(&logits, view, self.num_classes)
    }

    /// Micro-F1 on the validation rows, spending no budget. Graph-based
    /// models must be non-private unless validation reuses the training
    /// graph's degree vectors.
    pub fn validation_f1(&self, views: &SettingViews) -> Result<f64> {
        let val = views.validation_view();
        let norm = self.spec.normalization;
        let exact_only = || -> Result<()> {
            if self.ledger.plan.is_private() {
                Err(Error::invalid("validation of a private model would spend budget"))
            } else {
                Ok(())
            }
        };
        let logits = match &self.model {
            TrainedModel::Mlp(m) => m.logits(&val.features)?,
            TrainedModel::Gcn(model) | TrainedModel::Dpgcn { model, .. } => {
                exact_only()?;
                model.logits(&normalize_adjacency(&val.graph, norm), &val.features)?
            }
            TrainedModel::Lpgnet(m) => match &views.validation {
                ValidationView::SameGraph { .. } => m.forward_with(&m.train_cache, &val.features)?,
                ValidationView::Separate(_) => {
                    exact_only()?;
                    m.forward_exact(&val.graph, &val.features)?
                }
            },
        };
        rows_f1(&logits, &val, self.num_classes)
    }

    /// Black-box posterior access on `view`'s graph as deployed. Private
    /// inductive models must have run inference first.
    pub fn oracle(&self, view: &PhaseView) -> Result<Box<dyn PosteriorOracle + '_>> {
        let norm = self.spec.normalization;
        Ok(match &self.model {
            TrainedModel::Mlp(m) => Box::new(MlpOracle(m)),
            TrainedModel::Gcn(m) => Box::new(GcnOracle {
                model: m,
                adjacency: normalize_adjacency(&view.graph, norm),
            }),
            TrainedModel::Dpgcn { model, released, .. } => {
                let g = released
                    .as_ref()
                    .ok_or_else(|| Error::invalid("run inference before querying the model"))?;
                Box::new(GcnOracle {
                    model,
                    adjacency: normalize_adjacency(g, norm),
                })
            }
            TrainedModel::Lpgnet(m) => Box::new(LpgnetOracle(m)),
        })
    }

    /// Writes `run.json`, `ledger.json` and the weights under `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let (train_noisy_fraction, released_nodes) = match &self.model {
            TrainedModel::Dpgcn {
                train_noisy_fraction,
                released,
                ..
            } => (*train_noisy_fraction, released.as_ref().map(Graph::num_nodes)),
            _ => (None, None),
        };
        let header = RunFile {
            spec: self.spec.clone(),
            num_classes: self.num_classes,
            noise_seed: self.noise_seed,
            train_noisy_fraction,
            released_nodes,
        };
        write_json(&dir.join(RUN_FILE), &header)?;
        write_json(&dir.join(LEDGER_FILE), &self.ledger)?;
        match &self.model {
            TrainedModel::Mlp(m) => m.network.save_json(&dir.join(WEIGHTS_FILE)),
            TrainedModel::Gcn(m) => m.network.save_json(&dir.join(WEIGHTS_FILE)),
            TrainedModel::Dpgcn { model, released, .. } => {
                model.network.save_json(&dir.join(WEIGHTS_FILE))?;
                match released {
                    Some(g) => io::write_edge_list(g, dir.join(RELEASED_GRAPH_FILE)),
                    None => Ok(()),
                }
            }
            TrainedModel::Lpgnet(m) => m.save(&dir.join(LPGNET_DIR)),
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let header: RunFile = read_json(&dir.join(RUN_FILE))?;
        let ledger: BudgetLedger = read_json(&dir.join(LEDGER_FILE))?;
        let weights = || Network::load_json(&dir.join(WEIGHTS_FILE));
        let model = match header.spec.kind {
            ModelKind::Mlp => TrainedModel::Mlp(MlpModel { network: weights()? }),
            ModelKind::Gcn => TrainedModel::Gcn(GcnModel { network: weights()? }),
            ModelKind::Dpgcn => TrainedModel::Dpgcn {
                model: GcnModel { network: weights()? },
                train_noisy_fraction: header.train_noisy_fraction,
                released: header
                    .released_nodes
                    .map(|n| io::read_edge_list(dir.join(RELEASED_GRAPH_FILE), n))
                    .transpose()?,
            },
            ModelKind::Lpgnet => TrainedModel::Lpgnet(TrainedLpgnet::load(&dir.join(LPGNET_DIR))?),
        };
        Ok(Self {
            spec: header.spec,
            model,
            ledger,
            num_classes: header.num_classes,
            noise_seed: header.noise_seed,
        })
    }
}

fn rows_f1(logits: &DenseMatrix, view: &PhaseView, num_classes: usize) -> Result<f64> {
    let predicted = logits.argmax_rows();
    let pred: Vec<usize> = view.rows.iter().map(|&r| predicted[r]).collect();
    let truth: Vec<usize> = view.rows.iter().map(|&r| view.labels[r]).collect();
    micro_f1(&pred, &truth, num_classes)
}

pub const RUN_FILE: &str = "run.json";
pub const LEDGER_FILE: &str = "ledger.json";
const WEIGHTS_FILE: &str = "weights.json";
const RELEASED_GRAPH_FILE: &str = "released_graph.txt";
const LPGNET_DIR: &str = "lpgnet";

#[derive(Debug, Serialize, Deserialize)]
struct RunFile {
    spec: ModelSpec,
    num_classes: usize,
    noise_seed: u64,
    train_noisy_fraction: Option<f64>,
    /// Node count of the released inference graph, when one exists.
    released_nodes: Option<usize>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}

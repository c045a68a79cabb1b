//! Stacked MLPs that only see the graph through cluster degree vectors.
//!
//! `M[0]` learns from node features alone. Every later `M[i+1]` learns from
//! `F_{i+1}`: the logits of `M[i]` next to the degree vectors computed from
//! its predicted clusters, appended to `F_i`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::degree::{find_degree_vec, DegreeVectorMatrix};
use super::views::{SettingViews, ValidationView};
use crate::dp::{BudgetLedger, BudgetPlan, Epsilon, Phase, Setting};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::DenseMatrix;
use crate::nn::{train_mlp, Batch, MlpModel, Network, TrainConfig};
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedLpgnet {
    /// `M[0..=nl]`.
    pub mlps: Vec<MlpModel>,
    pub num_classes: usize,
    pub plan: BudgetPlan,
    /// Degree vectors of the training graph, reused by transductive inference.
    pub train_cache: Vec<DegreeVectorMatrix>,
    /// Degree vectors of the inference graph, filled by the first inductive
    /// inference.
    pub inference_cache: Vec<DegreeVectorMatrix>,
    pub noise_seed: u64,
}

/// Input width of `M[i]`: `F` for `i = 0`, then `2C`, growing by `2C` per layer.
pub fn layer_input_dim(num_features: usize, num_classes: usize, layer: usize) -> usize {
    if layer == 0 {
        num_features
    } else {
        2 * num_classes * layer
    }
}

fn phase_index(phase: Phase) -> u64 {
    match phase {
        Phase::Train => 0,
        Phase::Validation => 1,
        Phase::Inference => 2,
    }
}

/// Noise seed of the degree-vector query for `(phase, layer)`.
pub fn degree_noise_seed(noise_seed: u64, phase: Phase, layer: usize) -> u64 {
    derive_seed(noise_seed, "degree-vectors", (phase_index(phase) << 32) | layer as u64)
}

/// Charges the ledger for one fresh query and returns its budget; a
/// non-private plan returns ∞ without charging.
fn query_budget(ledger: &mut BudgetLedger, phase: Phase, layer: usize) -> Result<Epsilon> {
    if ledger.plan.is_private() {
        Ok(ledger.charge_planned(phase, layer)?)
    } else {
        Ok(Epsilon::INFINITE)
    }
}

/// `L ⌢ X` for the first layer, `F ⌢ (L ⌢ X)` afterwards.
fn extend_features(previous: Option<&DenseMatrix>, logits: &DenseMatrix, degrees: &DenseMatrix) -> Result<DenseMatrix> {
    match previous {
        None => DenseMatrix::hconcat(&[logits, degrees]),
        Some(f) => DenseMatrix::hconcat(&[f, logits, degrees]),
    }
}

/// One graph's evolving feature stack during training.
struct Stack<'a> {
    graph: &'a Graph,
    features: DenseMatrix,
    phase: Phase,
}

impl Stack<'_> {
    /// Runs `M[layer]` in evaluation mode, queries degree vectors of its
    /// predicted clusters and extends the stack.
    fn advance(
        &mut self,
        mlp: &MlpModel,
        layer: usize,
        raw: &DenseMatrix,
        num_classes: usize,
        ledger: &mut BudgetLedger,
        noise_seed: u64,
    ) -> Result<DegreeVectorMatrix> {
        let input = if layer == 0 { raw } else { &self.features };
        let logits = mlp.logits(input)?;
        let eps = query_budget(ledger, self.phase, layer)?;
        let x = find_degree_vec(
            self.graph,
            &logits.argmax_rows(),
            num_classes,
            eps,
            degree_noise_seed(noise_seed, self.phase, layer),
            layer,
        )?;
        self.features = extend_features((layer > 0).then_some(&self.features), &logits, &x.values)?;
        Ok(x)
    }
}

/// Trains `M[0..=nl]` sequentially, charging `ledger` for every degree query
/// on the training graph and, when validation has its own graph, on it too.
/// `M[0]` uses `config.seed`; later layers derive their own.
pub fn train_lpgnet(
    views: &SettingViews,
    num_classes: usize,
    ledger: &mut BudgetLedger,
    config: &TrainConfig,
    noise_seed: u64,
) -> Result<TrainedLpgnet> {
    let nl = ledger.plan.nl;
    let train = &views.train;
    let separate_val = match &views.validation {
        ValidationView::Separate(v) => Some(v),
        ValidationView::SameGraph { .. } => None,
    };

    let fit = |layer: usize, features: &DenseMatrix, val_features: Option<&DenseMatrix>| -> Result<MlpModel> {
        let config = TrainConfig {
            seed: if layer == 0 { config.seed } else { derive_seed(config.seed, "lpgnet-layer", layer as u64) },
            ..*config
        };
        let val = match (separate_val, &views.validation) {
            (Some(v), _) => Some(Batch::new(val_features.expect("separate validation stack"), &v.labels, &v.rows)),
            (None, ValidationView::SameGraph { rows }) => Some(Batch::new(features, &train.labels, rows)),
            (None, ValidationView::Separate(_)) => unreachable!(),
        };
        Ok(train_mlp(num_classes, Batch::new(features, &train.labels, &train.rows), val, &config)?.0)
    };

    let mut mlps = vec![fit(0, &train.features, separate_val.map(|v| &v.features))?];
    let mut train_stack = Stack {
        graph: &train.graph,
        features: train.features.clone(),
        phase: Phase::Train,
    };
    let mut val_stack = separate_val.map(|v| Stack {
        graph: &v.graph,
        features: v.features.clone(),
        phase: Phase::Validation,
    });
    let mut train_cache = Vec::with_capacity(nl);
    for layer in 0..nl {
        let mlp = &mlps[layer];
        let x = train_stack.advance(mlp, layer, &train.features, num_classes, ledger, noise_seed)?;
        train_cache.push(x);
        if let (Some(stack), Some(v)) = (val_stack.as_mut(), separate_val) {
            stack.advance(mlp, layer, &v.features, num_classes, ledger, noise_seed)?;
        }
        let next = fit(layer + 1, &train_stack.features, val_stack.as_ref().map(|s| &s.features))?;
        mlps.push(next);
    }
    Ok(TrainedLpgnet {
        mlps,
        num_classes,
        plan: ledger.plan.clone(),
        train_cache,
        inference_cache: Vec::new(),
        noise_seed,
    })
}

impl TrainedLpgnet {
    pub fn nl(&self) -> usize {
        self.mlps.len() - 1
    }

    pub fn input_dims(&self) -> Vec<usize> {
        self.mlps.iter().map(MlpModel::input_dim).collect()
    }

    /// Degree vectors inference reads: the training ones in the transductive
    /// setting, the inference-graph ones otherwise.
    pub fn deployed_cache(&self) -> &[DegreeVectorMatrix] {
        match self.plan.setting {
            Setting::Transductive => &self.train_cache,
            _ => &self.inference_cache,
        }
    }

    /// Logits of `M[nl]` using only cached degree vectors; no new queries.
    pub fn forward_cached(&self, features: &DenseMatrix) -> Result<DenseMatrix> {
        self.forward_with(self.deployed_cache(), features)
    }

    /// Logits of `M[nl]` with the given degree vectors per layer.
    pub fn forward_with(&self, cache: &[DegreeVectorMatrix], features: &DenseMatrix) -> Result<DenseMatrix> {
        if let Some(layer) = (0..self.nl()).find(|&i| cache.get(i).is_none()) {
            return Err(Error::MissingCache { layer });
        }
        if cache.iter().any(|x| x.values.rows() != features.rows()) {
            return Err(Error::shape(format!(
                "{} feature rows but the cached degree vectors cover {} nodes",
                features.rows(),
                cache[0].values.rows()
            )));
        }
        let mut logits = self.mlps[0].logits(features)?;
        let mut stack: Option<DenseMatrix> = None;
        for (layer, x) in cache.iter().take(self.nl()).enumerate() {
            let next = extend_features(stack.as_ref(), &logits, &x.values)?;
            logits = self.mlps[layer + 1].logits(&next)?;
            stack = Some(next);
        }
        Ok(logits)
    }

    /// Logits on any graph with exact degree vectors. Only a non-private
    /// model may query a graph freely.
    pub fn forward_exact(&self, graph: &Graph, features: &DenseMatrix) -> Result<DenseMatrix> {
        if self.plan.is_private() {
            return Err(Error::invalid("a private model cannot query a graph outside its budget"));
        }
        let mut ledger = BudgetLedger::new(self.plan.clone());
        let mut stack = Stack {
            graph,
            features: features.clone(),
            phase: Phase::Inference,
        };
        let cache = (0..self.nl())
            .map(|layer| stack.advance(&self.mlps[layer], layer, features, self.num_classes, &mut ledger, self.noise_seed))
            .collect::<Result<Vec<_>>>()?;
        self.forward_with(&cache, features)
    }

    /// Inference on `graph`. Transductive runs reuse the training vectors and
    /// spend nothing; inductive runs compute the inference-graph vectors once,
    /// charging the inference allocation per layer, and reuse them afterwards.
    /// Only the last MLP's logits are returned.
    pub fn infer(&mut self, graph: &Graph, features: &DenseMatrix, ledger: &mut BudgetLedger) -> Result<DenseMatrix> {
        if features.cols() != self.mlps[0].input_dim() {
            return Err(Error::shape(format!(
                "{} feature columns, model expects {}",
                features.cols(),
                self.mlps[0].input_dim()
            )));
        }
        if graph.num_nodes() != features.rows() {
            return Err(Error::shape("graph and features disagree on node count"));
        }
        if self.plan.setting != Setting::Transductive && self.inference_cache.len() < self.nl() {
            if self.inference_cache.first().is_some_and(|x| x.values.rows() != graph.num_nodes()) {
                return Err(Error::shape("inference graph differs from the cached one"));
            }
            let mut stack = Stack {
                graph,
                features: features.clone(),
                phase: Phase::Inference,
            };
            for layer in 0..self.nl() {
                match self.inference_cache.get(layer) {
                    Some(x) => {
                        let input = if layer == 0 { features } else { &stack.features };
                        let logits = self.mlps[layer].logits(input)?;
                        stack.features = extend_features((layer > 0).then_some(&stack.features), &logits, &x.values)?;
                    }
                    None => {
                        let x = stack.advance(&self.mlps[layer], layer, features, self.num_classes, ledger, self.noise_seed)?;
                        self.inference_cache.push(x);
                    }
                }
            }
        }
        self.forward_cached(features)
    }

    /// Directory layout: `manifest.json`, `mlp_{i}.json` per layer and
    /// `degree_vectors_{train|inference}_{i}.bin` per cached matrix.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        let manifest = Manifest {
            nl: self.nl(),
            num_classes: self.num_classes,
            input_dims: self.input_dims(),
            plan: self.plan.clone(),
            noise_seed: self.noise_seed,
            train_cache_layers: self.train_cache.len(),
            inference_cache_layers: self.inference_cache.len(),
        };
        let text = serde_json::to_string_pretty(&manifest)?;
        let path = dir.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        for (i, m) in self.mlps.iter().enumerate() {
            m.network.save_json(&dir.join(format!("mlp_{i}.json")))?;
        }
        for (name, cache) in [("train", &self.train_cache), ("inference", &self.inference_cache)] {
            for (i, x) in cache.iter().enumerate() {
                x.write_cache(&dir.join(format!("degree_vectors_{name}_{i}.bin")))?;
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        let mlps = (0..=manifest.nl)
            .map(|i| Network::load_json(&dir.join(format!("mlp_{i}.json"))).map(|network| MlpModel { network }))
            .collect::<Result<Vec<_>>>()?;
        if mlps.iter().map(MlpModel::input_dim).ne(manifest.input_dims.iter().copied()) {
            return Err(Error::invalid(format!("{}: layer widths disagree with the manifest", dir.display())));
        }
        let read = |name: &str, count: usize| {
            (0..count)
                .map(|i| DegreeVectorMatrix::read_cache(&dir.join(format!("degree_vectors_{name}_{i}.bin"))))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            mlps,
            num_classes: manifest.num_classes,
            plan: manifest.plan,
            train_cache: read("train", manifest.train_cache_layers)?,
            inference_cache: read("inference", manifest.inference_cache_layers)?,
            noise_seed: manifest.noise_seed,
        })
    }
}

const MANIFEST: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    nl: usize,
    num_classes: usize,
    input_dims: Vec<usize>,
    plan: BudgetPlan,
    noise_seed: u64,
    train_cache_layers: usize,
    inference_cache_layers: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_bipartite, BipartiteParams, Dataset};

    fn small() -> Dataset {
        let params = BipartiteParams {
            n1: 40,
            n2: 30,
            p_edge: 0.2,
            ..BipartiteParams::default()
        };
        generate_bipartite(&params, 3).unwrap()
    }

    fn config() -> TrainConfig {
        TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        }
    }

    fn train(setting: Setting, eps: Epsilon, nl: usize) -> (Dataset, SettingViews, TrainedLpgnet, BudgetLedger) {
        let d = small();
        let views = SettingViews::new(&d, setting).unwrap();
        let mut ledger = BudgetLedger::new(BudgetPlan::new(setting, eps, nl).unwrap());
        let model = train_lpgnet(&views, 2, &mut ledger, &config(), 11).unwrap();
        (d, views, model, ledger)
    }

    #[test]
    fn input_dims_follow_recurrence() {
        let (_, _, model, _) = train(Setting::Transductive, Epsilon::INFINITE, 3);
        assert_eq!(model.input_dims(), vec![2, 4, 8, 12]);
        for w in model.input_dims().windows(2).skip(1) {
            assert_eq!(w[1], w[0] + 4);
        }
        assert_eq!(layer_input_dim(2, 2, 3), 12);
    }

    #[test]
    fn first_layer_is_the_mlp_baseline() {
        let (d, views, model, _) = train(Setting::Transductive, Epsilon::INFINITE, 1);
        let (mlp, _) = train_mlp(
            2,
            Batch::new(&d.features, &d.labels, &views.train.rows),
            Some(Batch::new(&d.features, &d.labels, views.validation.rows())),
            &config(),
        )
        .unwrap();
        assert_eq!(model.mlps[0], mlp);
    }

    #[test]
    fn transductive_charges_training_only() {
        let eps = Epsilon::new(4.0).unwrap();
        let (_, views, mut model, mut ledger) = train(Setting::Transductive, eps, 2);
        assert_eq!(ledger.entries.len(), 2);
        assert!(ledger.entries.iter().all(|e| e.phase == Phase::Train && e.epsilon == 2.0));
        model.infer(&views.inference.graph, &views.inference.features, &mut ledger).unwrap();
        assert_eq!(ledger.entries.len(), 2);
    }

    #[test]
    fn inductive_inference_caches() {
        let eps = Epsilon::new(3.0).unwrap();
        let (_, views, mut model, mut ledger) = train(Setting::InductiveDifferent, eps, 1);
        let inf = &views.inference;
        assert!(matches!(model.forward_cached(&inf.features), Err(Error::MissingCache { layer: 0 })));
        let a = model.infer(&inf.graph, &inf.features, &mut ledger).unwrap();
        assert_eq!(ledger.entries.len(), 2);
        let b = model.infer(&inf.graph, &inf.features, &mut ledger).unwrap();
        assert_eq!(ledger.entries.len(), 2);
        assert_eq!(a, b);
    }

    #[test]
    fn evolving_spends_each_phase() {
        let eps = Epsilon::new(6.0).unwrap();
        let (_, views, mut model, mut ledger) = train(Setting::InductiveEvolving, eps, 2);
        model.infer(&views.inference.graph, &views.inference.features, &mut ledger).unwrap();
        assert_eq!(ledger.entries.len(), 6);
        assert!(ledger.entries.iter().all(|e| e.epsilon == 1.0));
    }

    #[test]
    fn transductive_inference_matches_training_stack() {
        let (_, views, mut model, _) = train(Setting::Transductive, Epsilon::INFINITE, 1);
        let mut ledger = BudgetLedger::new(model.plan.clone());
        let out = model.infer(&views.train.graph, &views.train.features, &mut ledger).unwrap();
        let l0 = model.mlps[0].logits(&views.train.features).unwrap();
        let f1 = DenseMatrix::hconcat(&[&l0, &model.train_cache[0].values]).unwrap();
        assert_eq!(out, model.mlps[1].logits(&f1).unwrap());
    }

    #[test]
    fn save_load_round_trip() {
        let eps = Epsilon::new(2.0).unwrap();
        let (_, views, mut model, mut ledger) = train(Setting::InductiveDifferent, eps, 2);
        model.infer(&views.inference.graph, &views.inference.features, &mut ledger).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save(dir.path()).unwrap();
        let loaded = TrainedLpgnet::load(dir.path()).unwrap();
        assert_eq!(loaded, model);
    }
}

//! Seeded multi-model runs with utility, attack, ledger and homophily
//! artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::grid::{grid_search, Grid};
use super::metrics::{micro_f1, rare_f1, MeanStd};
use crate::attacks::{
    linkteller_scores, lpa_scores, sample_eval_pairs, AttackKind, PairSampling, DEFAULT_DELTA,
};
use crate::dp::{BudgetLedger, BudgetPlan, Epsilon, Pool, Setting};
use crate::error::{Error, Result};
use crate::graph::{
    generate_bipartite, generate_erdos_renyi, graph_stats, homophily_profile, io, BipartiteParams, Dataset,
    GraphStats,
};
use crate::models::{train_on_views, ModelKind, ModelSpec, SettingViews, TrainedModel, DEFAULT_EPS_R};
use crate::nn::{NormalizationMode, TrainConfig};
use crate::par;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSpec {
    Bipartite {
        #[serde(default)]
        params: BipartiteParams,
        #[serde(default)]
        seed: u64,
    },
    ErdosRenyi {
        nodes: usize,
        edges: usize,
        #[serde(default = "two")]
        num_classes: usize,
        #[serde(default = "two")]
        num_features: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Files in the `io` layout (`graph.txt`, `features.txt`, `labels.txt`,
    /// `split.txt`). A relative `dir` resolves against the config file.
    Files {
        dir: PathBuf,
        #[serde(default)]
        num_classes: Option<usize>,
    },
}

fn two() -> usize {
    2
}

impl DatasetSpec {
    pub fn load(&self, base_dir: Option<&Path>) -> Result<Dataset> {
        match self {
            Self::Bipartite { params, seed } => generate_bipartite(params, *seed),
            Self::ErdosRenyi {
                nodes,
                edges,
                num_classes,
                num_features,
                seed,
            } => generate_erdos_renyi(*nodes, *edges, *num_classes, *num_features, *seed),
            Self::Files { dir, num_classes } => {
                let dir = match base_dir {
                    Some(base) if dir.is_relative() => base.join(dir),
                    _ => dir.clone(),
                };
                io::load_dataset(&io::DatasetFiles::in_dir(dir), *num_classes)
            }
        }
    }
}

/// One model line of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub kind: ModelKind,
    /// Row label in the artifacts; defaults to the kind, or `lpgnet-{nl}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "one")]
    pub nl: usize,
    /// Training-config fields replacing the experiment-wide ones.
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub overrides: serde_json::Map<String, serde_json::Value>,
}

fn one() -> usize {
    1
}

impl ModelEntry {
    pub fn label(&self) -> String {
        match (&self.name, self.kind) {
            (Some(n), _) => n.clone(),
            (None, ModelKind::Lpgnet) => format!("lpgnet-{}", self.nl),
            (None, k) => k.to_string(),
        }
    }

    /// `base` with this entry's overrides applied.
    pub fn train_config(&self, base: &TrainConfig) -> Result<TrainConfig> {
        let mut value = serde_json::to_value(base)?;
        let map = value.as_object_mut().expect("struct serializes to an object");
        for (k, v) in &self.overrides {
            if !map.contains_key(k) {
                return Err(Error::invalid(format!("unknown training override {k:?}")));
            }
            map.insert(k.clone(), v.clone());
        }
        let config: TrainConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    #[serde(default = "default_setting")]
    pub setting: Setting,
    pub models: Vec<ModelEntry>,
    /// Budgets for the private kinds; the baselines always run without privacy.
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<Epsilon>,
    #[serde(default)]
    pub train: TrainConfig,
    /// When present, each model's config is searched without privacy and the
    /// winner is reused at every ε.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    #[serde(default)]
    pub attacks: Vec<AttackKind>,
    #[serde(default)]
    pub pairs: PairSampling,
    #[serde(default = "default_train_seeds")]
    pub train_seeds: usize,
    #[serde(default = "default_attack_seeds")]
    pub attack_seeds: usize,
    /// Master seed every stream derives from.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_eps_r")]
    pub eps_r: f64,
    #[serde(default)]
    pub normalization: NormalizationMode,
    #[serde(default = "default_delta")]
    pub linkteller_delta: f64,
}

fn default_setting() -> Setting {
    Setting::Transductive
}
fn default_epsilons() -> Vec<Epsilon> {
    vec![Epsilon::INFINITE]
}
fn default_train_seeds() -> usize {
    30
}
fn default_attack_seeds() -> usize {
    5
}
fn default_eps_r() -> f64 {
    DEFAULT_EPS_R
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::invalid("no models to run"));
        }
        if self.epsilons.is_empty() {
            return Err(Error::invalid("no ε values"));
        }
        if self.train_seeds == 0 || (self.attack_seeds == 0 && !self.attacks.is_empty()) {
            return Err(Error::invalid("seed counts must be at least 1"));
        }
        let mut labels: Vec<String> = self.models.iter().map(ModelEntry::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("two models share the label {:?}; set \"name\"", w[0])));
        }
        for m in &self.models {
            m.train_config(&self.train)?;
        }
        self.train.validate()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(serde_json::to_string(self)?.as_bytes());
        Ok(digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        }))
    }

    /// Cells in run order: models as listed, each at its budgets.
    pub fn cells(&self) -> Result<Vec<PlannedCell>> {
        let mut out = Vec::new();
        for (model_index, m) in self.models.iter().enumerate() {
            let epsilons: Vec<Epsilon> = if m.kind.is_private() {
                self.epsilons.clone()
            } else {
                vec![Epsilon::INFINITE]
            };
            for epsilon in epsilons {
                let spec = ModelSpec {
                    nl: m.nl,
                    ..ModelSpec::new(m.kind, self.setting, epsilon)
                };
                out.push(PlannedCell {
                    model: m.label(),
                    model_index,
                    kind: m.kind,
                    nl: m.nl,
                    epsilon,
                    plan: spec.plan()?,
                    train_seeds: self.train_seeds,
                    attack_seeds: if self.attacks.is_empty() { 0 } else { self.attack_seeds },
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedCell {
    pub model: String,
    pub model_index: usize,
    pub kind: ModelKind,
    pub nl: usize,
    pub epsilon: Epsilon,
    pub plan: BudgetPlan,
    pub train_seeds: usize,
    pub attack_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    pub model: String,
    pub kind: ModelKind,
    pub nl: usize,
    pub epsilon: Epsilon,
    pub seed_index: usize,
    pub seed: u64,
    pub micro_f1: f64,
    pub rare_f1: Option<f64>,
    /// Fraction of released training edges that are not real edges.
    pub noisy_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub model: String,
    pub kind: ModelKind,
    pub nl: usize,
    pub epsilon: Epsilon,
    pub attack: AttackKind,
    pub attack_seed_index: usize,
    pub attack_seed: u64,
    pub auc: f64,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRecord {
    pub model: String,
    pub epsilon: Epsilon,
    pub seed_index: usize,
    pub pool_totals: BTreeMap<String, f64>,
    pub ledger: BudgetLedger,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomophilyRow {
    /// `ground_truth` or a model label (predicted clusters, first seed).
    pub source: String,
    pub epsilon: Option<Epsilon>,
    pub cluster: usize,
    pub avg_homophily: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackAggregate {
    pub attack: AttackKind,
    pub auc: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub model: String,
    pub kind: ModelKind,
    pub nl: usize,
    pub epsilon: Epsilon,
    pub micro_f1: MeanStd,
    pub rare_f1: Option<MeanStd>,
    pub noisy_fraction: Option<MeanStd>,
    pub attacks: Vec<AttackAggregate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedCell {
    pub model: String,
    pub epsilon: Epsilon,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedModel {
    pub model: String,
    pub config: TrainConfig,
    /// Best validation micro-F1 when the config came from a grid search.
    pub grid_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config_hash: String,
    pub setting: Setting,
    pub dataset: GraphStats,
    pub num_classes: usize,
    /// Spread statistic used for every `std`.
    pub std_kind: String,
    pub models: Vec<ResolvedModel>,
    pub cells: Vec<CellSummary>,
    pub utility: Vec<UtilityRow>,
    pub attacks: Vec<AttackRow>,
    pub failed: Vec<FailedCell>,
}

struct CellOutput {
    utility: Vec<UtilityRow>,
    attacks: Vec<AttackRow>,
    ledgers: Vec<LedgerRecord>,
    homophily: Vec<HomophilyRow>,
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    views: SettingViews,
    num_classes: usize,
    configs: Vec<TrainConfig>,
}

/// Training seed of run `index`.
pub fn train_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, "train", index as u64)
}

/// Pair-sampling seed of attack run `index`.
pub fn attack_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, "attack-pairs", index as u64)
}

fn homophily_rows(source: &str, epsilon: Option<Epsilon>, graph: &crate::graph::Graph, labels: &[usize], c: usize) -> Result<Vec<HomophilyRow>> {
    let h = homophily_profile(graph, labels, c)?;
    Ok((0..c)
        .map(|cluster| HomophilyRow {
            source: source.to_string(),
            epsilon,
            cluster,
            avg_homophily: h.per_cluster_avg[cluster],
            nodes: h.per_cluster_nodes[cluster],
        })
        .collect())
}

fn run_cell(ctx: &Context<'_>, cell: &PlannedCell) -> Result<CellOutput> {
    let cfg = ctx.config;
    let inference = &ctx.views.inference;
    let mut out = CellOutput {
        utility: Vec::new(),
        attacks: Vec::new(),
        ledgers: Vec::new(),
        homophily: Vec::new(),
    };
    for seed_index in 0..cell.train_seeds {
        let seed = train_seed(cfg.seed, seed_index);
        let spec = ModelSpec {
            kind: cell.kind,
            setting: cfg.setting,
            epsilon: cell.epsilon,
            nl: cell.nl,
            config: TrainConfig {
                seed,
                ..ctx.configs[cell.model_index]
            },
            eps_r: cfg.eps_r,
            normalization: cfg.normalization,
        };
        let mut run = train_on_views(&ctx.views, ctx.num_classes, &spec)?;
        let predicted = run.infer(inference)?.argmax_rows();
        let pred: Vec<usize> = inference.rows.iter().map(|&r| predicted[r]).collect();
        let truth: Vec<usize> = inference.rows.iter().map(|&r| inference.labels[r]).collect();
        out.utility.push(UtilityRow {
            model: cell.model.clone(),
            kind: cell.kind,
            nl: cell.nl,
            epsilon: cell.epsilon,
            seed_index,
            seed,
            micro_f1: micro_f1(&pred, &truth, ctx.num_classes)?,
            rare_f1: if ctx.num_classes == 2 { Some(rare_f1(&pred, &truth)?) } else { None },
            noisy_fraction: match &run.model {
                TrainedModel::Dpgcn {
                    train_noisy_fraction, ..
                } => *train_noisy_fraction,
                _ => None,
            },
        });
        out.ledgers.push(LedgerRecord {
            model: cell.model.clone(),
            epsilon: cell.epsilon,
            seed_index,
            pool_totals: run
                .ledger
                .plan
                .pools()
                .into_iter()
                .map(|p: Pool| (format!("{p:?}"), run.ledger.pool_total(p)))
                .collect(),
            ledger: run.ledger.clone(),
        });
        if seed_index > 0 {
            continue;
        }
        out.homophily
            .extend(homophily_rows(&cell.model, Some(cell.epsilon), &inference.graph, &predicted, ctx.num_classes)?);
        let oracle = run.oracle(inference)?;
        for attack_index in 0..cell.attack_seeds {
            let aseed = attack_seed(cfg.seed, attack_index);
            let pairs = sample_eval_pairs(&inference.graph, &[], &cfg.pairs, aseed)?;
            let posteriors = oracle.posteriors(&inference.features)?;
            for &attack in &cfg.attacks {
                let result = match attack {
                    AttackKind::LinkTeller => {
                        linkteller_scores(oracle.as_ref(), &inference.features, &pairs, cfg.linkteller_delta, aseed)?
                    }
                    AttackKind::Lpa(metric) => lpa_scores(&posteriors, &pairs, metric, aseed)?,
                };
                out.attacks.push(AttackRow {
                    model: cell.model.clone(),
                    kind: cell.kind,
                    nl: cell.nl,
                    epsilon: cell.epsilon,
                    attack,
                    attack_seed_index: attack_index,
                    attack_seed: aseed,
                    auc: result.auc,
                    positives: pairs.positives.len(),
                    negatives: pairs.negatives.len(),
                });
            }
        }
    }
    Ok(out)
}

fn summarize(cell: &PlannedCell, utility: &[UtilityRow], attacks: &[AttackRow], order: &[AttackKind]) -> CellSummary {
    let f1: Vec<f64> = utility.iter().map(|r| r.micro_f1).collect();
    let rare: Option<Vec<f64>> = utility.iter().map(|r| r.rare_f1).collect();
    let noisy: Option<Vec<f64>> = utility.iter().map(|r| r.noisy_fraction).collect();
    CellSummary {
        model: cell.model.clone(),
        kind: cell.kind,
        nl: cell.nl,
        epsilon: cell.epsilon,
        micro_f1: MeanStd::of(&f1),
        rare_f1: rare.map(|v| MeanStd::of(&v)),
        noisy_fraction: noisy.map(|v| MeanStd::of(&v)),
        attacks: order
            .iter()
            .map(|&attack| AttackAggregate {
                attack,
                auc: MeanStd::of(&attacks.iter().filter(|r| r.attack == attack).map(|r| r.auc).collect::<Vec<_>>()),
            })
            .collect(),
    }
}

/// Refuses to reuse a directory holding results of a different config.
fn prepare_output(dir: &Path, hash: &str) -> Result<()> {
    let existing = dir.join(CONFIG_FILE);
    if existing.exists() {
        let text = std::fs::read_to_string(&existing).map_err(|e| Error::io(format!("reading {}", existing.display()), e))?;
        let echo: serde_json::Value = serde_json::from_str(&text)?;
        if echo.get("hash").and_then(|h| h.as_str()) != Some(hash) {
            return Err(Error::invalid(format!(
                "{} holds results of a different config; refusing to overwrite",
                dir.display()
            )));
        }
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

pub const CONFIG_FILE: &str = "config.json";
pub const UTILITY_FILE: &str = "utility.csv";
pub const ATTACKS_FILE: &str = "attacks.csv";
pub const LEDGER_FILE: &str = "ledger.json";
pub const HOMOPHILY_FILE: &str = "homophily.csv";
pub const REPORT_FILE: &str = "report.json";

pub const UTILITY_HEADER: &str = "model,kind,nl,epsilon,seed_index,seed,micro_f1,rare_f1,noisy_fraction";
pub const ATTACKS_HEADER: &str = "model,kind,nl,epsilon,attack,attack_seed_index,attack_seed,auc,positives,negatives";
pub const HOMOPHILY_HEADER: &str = "source,epsilon,cluster,avg_homophily,nodes";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Runs every cell and writes the artifacts into `out_dir`. Cells run on up
/// to `jobs` threads; the output does not depend on `jobs`. Failed cells are
/// listed in the report rather than aborting the run.
pub fn run_experiment(config: &ExperimentConfig, base_dir: Option<&Path>, out_dir: &Path, jobs: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let hash = config.hash()?;
    prepare_output(out_dir, &hash)?;
    write_text(
        &out_dir.join(CONFIG_FILE),
        &serde_json::to_string_pretty(&serde_json::json!({ "hash": hash, "config": config }))?,
    )?;

    let dataset = config.dataset.load(base_dir)?;
    let views = SettingViews::new(&dataset, config.setting)?;
    let grid_seed = derive_seed(config.seed, "grid", 0);
    let mut models = Vec::with_capacity(config.models.len());
    for m in &config.models {
        let base = m.train_config(&config.train)?;
        let resolved = match &config.grid {
            None => ResolvedModel {
                model: m.label(),
                config: base,
                grid_score: None,
            },
            Some(grid) => {
                let spec = ModelSpec {
                    nl: m.nl,
                    config: base,
                    eps_r: config.eps_r,
                    normalization: config.normalization,
                    ..ModelSpec::new(m.kind, config.setting, Epsilon::INFINITE)
                };
                let r = par::with_threads(jobs, || grid_search(&views, dataset.num_classes, &spec, grid, grid_seed))?;
                ResolvedModel {
                    model: m.label(),
                    config: TrainConfig { seed: base.seed, ..r.best },
                    grid_score: Some(r.best_score),
                }
            }
        };
        models.push(resolved);
    }
    let ctx = Context {
        config,
        views,
        num_classes: dataset.num_classes,
        configs: models.iter().map(|m| m.config).collect(),
    };
    let cells = config.cells()?;
    let outputs = par::with_threads(jobs, || par::map_slice(&cells, |cell| run_cell(&ctx, cell)));

    let mut utility = Vec::new();
    let mut attacks = Vec::new();
    let mut ledgers = Vec::new();
    let mut homophily = homophily_rows("ground_truth", None, &dataset.graph, &dataset.labels, dataset.num_classes)?;
    let mut summaries = Vec::new();
    let mut failed = Vec::new();
    let mut attack_order: Vec<AttackKind> = Vec::new();
    for a in &config.attacks {
        if !attack_order.contains(a) {
            attack_order.push(*a);
        }
    }
    for (cell, output) in cells.iter().zip(outputs) {
        match output {
            Ok(o) => {
                summaries.push(summarize(cell, &o.utility, &o.attacks, &attack_order));
                utility.extend(o.utility);
                attacks.extend(o.attacks);
                ledgers.extend(o.ledgers);
                homophily.extend(o.homophily);
            }
            Err(e) => failed.push(FailedCell {
                model: cell.model.clone(),
                epsilon: cell.epsilon,
                error: e.to_string(),
            }),
        }
    }

    let mut csv = format!("{UTILITY_HEADER}\n");
    for r in &utility {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            r.model,
            r.kind,
            r.nl,
            r.epsilon,
            r.seed_index,
            r.seed,
            r.micro_f1,
            opt(r.rare_f1),
            opt(r.noisy_fraction)
        );
    }
    write_text(&out_dir.join(UTILITY_FILE), &csv)?;
    let mut csv = format!("{ATTACKS_HEADER}\n");
    for r in &attacks {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            r.model, r.kind, r.nl, r.epsilon, r.attack, r.attack_seed_index, r.attack_seed, r.auc, r.positives, r.negatives
        );
    }
    write_text(&out_dir.join(ATTACKS_FILE), &csv)?;
    let mut csv = format!("{HOMOPHILY_HEADER}\n");
    for r in &homophily {
        let _ = writeln!(csv, "{},{},{},{},{}", r.source, opt(r.epsilon), r.cluster, r.avg_homophily, r.nodes);
    }
    write_text(&out_dir.join(HOMOPHILY_FILE), &csv)?;
    write_text(&out_dir.join(LEDGER_FILE), &serde_json::to_string_pretty(&ledgers)?)?;

    let report = ExperimentReport {
        name: config.name.clone(),
        config_hash: hash,
        setting: config.setting,
        dataset: graph_stats(&dataset.graph)?,
        num_classes: dataset.num_classes,
        std_kind: "population".into(),
        models,
        cells: summaries,
        utility,
        attacks,
        failed,
    };
    write_text(&out_dir.join(REPORT_FILE), &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

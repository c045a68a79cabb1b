use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use lpgnet::attacks::{linkteller_scores, lpa_scores, sample_eval_pairs, AttackKind, PairSampling};
use lpgnet::dp::BudgetLedger;
use lpgnet::eval::{
    attack_seed, grid_search, micro_f1, rare_f1, run_experiment, train_seed, ExperimentConfig, Grid, MeanStd,
    ATTACKS_FILE, ATTACKS_HEADER,
};
use lpgnet::graph::{
    generate_bipartite, generate_erdos_renyi, graph_stats, homophily_profile, io, BipartiteParams, Dataset,
};
use lpgnet::models::{train_on_views, ModelRun, ModelSpec, PhaseView, SettingViews};
use lpgnet::nn::TrainConfig;
use lpgnet::rng::derive_seed;
use lpgnet::DenseMatrix;

use crate::{
    AttackArgs, Command, DataArgs, ExperimentArgs, GenerateCommon, GenerateKind, InferArgs, StatsArgs, TrainArgs,
    OUTPUT_ROOT_VAR,
};

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { kind } => generate(kind),
        Command::Train(a) => train(a),
        Command::Infer(a) => infer(a),
        Command::Attack(a) => attack(a),
        Command::Experiment(a) => experiment(a),
        Command::Stats(a) => stats(a),
    }
    .map(|failed| if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS })
}

fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("output"), PathBuf::from)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Pretty JSON on stdout; a reader that closed the pipe early is not an error.
fn print_json(value: &impl Serialize) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{}", serde_json::to_string_pretty(value)?) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_data(args: &DataArgs) -> Result<Dataset> {
    let files = io::DatasetFiles::in_dir(&args.data);
    io::load_dataset(&files, args.num_classes).with_context(|| format!("loading dataset from {}", args.data.display()))
}

fn pool_totals(ledger: &BudgetLedger) -> BTreeMap<String, f64> {
    ledger
        .plan
        .pools()
        .into_iter()
        .map(|p| (format!("{p:?}"), ledger.pool_total(p)))
        .collect()
}

fn generate(kind: GenerateKind) -> Result<bool> {
    let (dataset, common, name, params) = match kind {
        GenerateKind::Bipartite {
            n1,
            n2,
            p_edge,
            flip1,
            flip2,
            common,
        } => {
            let params = BipartiteParams {
                n1,
                n2,
                p_edge,
                flip1,
                flip2,
            };
            (generate_bipartite(&params, common.seed)?, common, "bipartite", json!(params))
        }
        GenerateKind::ErdosRenyi {
            nodes,
            edges,
            classes,
            features,
            common,
        } => (
            generate_erdos_renyi(nodes, edges, classes, features, common.seed)?,
            common,
            "erdos_renyi",
            json!({ "nodes": nodes, "edges": edges, "num_classes": classes, "num_features": features }),
        ),
    };
    let GenerateCommon { seed, out } = common;
    let out = out.unwrap_or_else(|| output_root().join("data").join(format!("{name}-seed{seed}")));
    io::save_dataset(&dataset, &out)?;
    let stats = graph_stats(&dataset.graph)?;
    write_json(
        &out.join("generate.json"),
        &json!({ "kind": name, "seed": seed, "params": params, "stats": stats }),
    )?;
    println!(
        "wrote {}: {} nodes, {} edges, density {:.6}",
        out.display(),
        stats.nodes,
        stats.edges,
        stats.density
    );
    Ok(false)
}

fn resolve_train_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut config: TrainConfig = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = a.lr {
        config.lr = v;
    }
    if let Some(v) = a.hidden_size {
        config.hidden_size = v;
    }
    if let Some(v) = a.hidden_layers {
        config.hidden_layers = v;
    }
    if let Some(v) = a.dropout {
        config.dropout = v;
    }
    if let Some(v) = a.epochs {
        config.epochs = v;
    }
    config.seed = train_seed(a.seed, 0);
    config.validate()?;
    Ok(config)
}

fn eval_scores(logits: &DenseMatrix, view: &PhaseView, num_classes: usize) -> Result<(f64, Option<f64>)> {
    let predicted = logits.argmax_rows();
    let pred: Vec<usize> = view.rows.iter().map(|&r| predicted[r]).collect();
    let truth: Vec<usize> = view.rows.iter().map(|&r| view.labels[r]).collect();
    let rare = if num_classes == 2 { Some(rare_f1(&pred, &truth)?) } else { None };
    Ok((micro_f1(&pred, &truth, num_classes)?, rare))
}

fn train(a: TrainArgs) -> Result<bool> {
    let dataset = load_data(&a.data)?;
    let views = SettingViews::new(&dataset, a.setting)?;
    let mut spec = ModelSpec {
        nl: a.nl,
        config: resolve_train_config(&a)?,
        eps_r: a.eps_r,
        normalization: a.normalization,
        ..ModelSpec::new(a.model, a.setting, a.eps)
    };
    spec.validate()?;
    let grid = match a.grid.as_deref() {
        None => None,
        Some("") => Some(Grid::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            Some(serde_json::from_str::<Grid>(&text).with_context(|| format!("parsing {path}"))?)
        }
    };
    let grid_result = match &grid {
        Some(g) => {
            let r = grid_search(&views, dataset.num_classes, &spec, g, derive_seed(a.seed, "grid", 0))?;
            spec.config = TrainConfig {
                seed: spec.config.seed,
                ..r.best
            };
            Some(r)
        }
        None => None,
    };

    let mut run = train_on_views(&views, dataset.num_classes, &spec)?;
    let validation_f1 = run.validation_f1(&views).ok();
    let logits = run.infer(&views.inference)?;
    let (test_f1, test_rare_f1) = eval_scores(&logits, &views.inference, dataset.num_classes)?;

    let out = a.out.clone().unwrap_or_else(|| {
        output_root()
            .join("runs")
            .join(format!("{}-{}-eps{}-seed{}", a.model, a.setting, a.eps, a.seed))
    });
    run.save(&out)?;
    let totals = pool_totals(&run.ledger);
    write_json(
        &out.join("train.json"),
        &json!({
            "data": a.data.data,
            "seed": a.seed,
            "spec": spec,
            "grid": grid,
            "grid_scores": grid_result.as_ref().map(|r| &r.scores),
            "validation_micro_f1": validation_f1,
            "test_micro_f1": test_f1,
            "test_rare_f1": test_rare_f1,
            "ledger_totals": totals,
            "ledger_total": run.ledger.entries.iter().map(|e| e.epsilon).sum::<f64>(),
        }),
    )?;
    println!("model {} ({}, eps {}) saved to {}", a.model, a.setting, a.eps, out.display());
    println!("test micro-F1 {test_f1:.4}");
    if let Some(r) = test_rare_f1 {
        println!("test rare-class F1 {r:.4}");
    }
    for (pool, total) in &totals {
        println!("budget {pool}: {total}");
    }
    Ok(false)
}

fn load_run(dir: &Path) -> Result<ModelRun> {
    ModelRun::load(dir).with_context(|| format!("loading checkpoint from {}", dir.display()))
}

fn infer(a: InferArgs) -> Result<bool> {
    let dataset = load_data(&a.data)?;
    let mut run = load_run(&a.model)?;
    if run.num_classes != dataset.num_classes {
        bail!("checkpoint has {} classes, dataset has {}", run.num_classes, dataset.num_classes);
    }
    let views = SettingViews::new(&dataset, run.spec.setting)?;
    let view = &views.inference;
    let logits = run.infer(view)?;
    let (f1, rare) = eval_scores(&logits, view, dataset.num_classes)?;

    let out = a.out.clone().unwrap_or_else(|| a.model.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let predicted = logits.argmax_rows();
    let mut csv = String::from("node,label,predicted");
    (0..logits.cols()).for_each(|c| {
        let _ = write!(csv, ",logit_{c}");
    });
    csv.push('\n');
    for (i, &node) in view.nodes.iter().enumerate() {
        let _ = write!(csv, "{node},{},{}", view.labels[i], predicted[i]);
        for x in logits.row(i) {
            let _ = write!(csv, ",{x}");
        }
        csv.push('\n');
    }
    write_text(&out.join("predictions.csv"), &csv)?;
    if out == a.model {
        // keeps whatever inference spent and cached with the checkpoint
        run.save(&out)?;
    } else {
        write_json(&out.join("ledger.json"), &run.ledger)?;
    }
    write_json(
        &out.join("infer.json"),
        &json!({
            "model": a.model,
            "data": a.data.data,
            "test_micro_f1": f1,
            "test_rare_f1": rare,
            "ledger_totals": pool_totals(&run.ledger),
        }),
    )?;
    println!("test micro-F1 {f1:.4}");
    if let Some(r) = rare {
        println!("test rare-class F1 {r:.4}");
    }
    Ok(false)
}

fn attack(a: AttackArgs) -> Result<bool> {
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let dataset = load_data(&a.data)?;
    let mut run = load_run(&a.model)?;
    let views = SettingViews::new(&dataset, run.spec.setting)?;
    let view = &views.inference;
    run.infer(view)?;
    let oracle = run.oracle(view)?;
    let posteriors = oracle.posteriors(&view.features)?;
    let sampling = PairSampling {
        mode: a.mode,
        k: a.k,
        band: a.band,
        band_size: a.band_size,
    };
    let out = a.out.clone().unwrap_or_else(|| a.model.clone());
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let spec = &run.spec;
    let label = spec.kind.to_string();
    let mut csv = format!("{ATTACKS_HEADER}\n");
    let mut aucs: BTreeMap<AttackKind, Vec<f64>> = BTreeMap::new();
    for index in 0..a.seeds {
        let seed = attack_seed(a.seed, index);
        let pairs = sample_eval_pairs(&view.graph, &[], &sampling, seed)?;
        for &kind in &a.attacks {
            let mut result = match kind {
                AttackKind::LinkTeller => linkteller_scores(oracle.as_ref(), &view.features, &pairs, a.delta, seed)?,
                AttackKind::Lpa(metric) => lpa_scores(&posteriors, &pairs, metric, seed)?,
            };
            let _ = writeln!(
                csv,
                "{label},{},{},{},{kind},{index},{seed},{},{},{}",
                spec.kind,
                spec.nl,
                spec.epsilon,
                result.auc,
                pairs.positives.len(),
                pairs.negatives.len()
            );
            aucs.entry(kind).or_default().push(result.auc);
            if a.pairs {
                for p in &mut result.pairs {
                    (p.u, p.v) = (view.nodes[p.u], view.nodes[p.v]);
                }
                result.write_csv(&out.join(format!("pairs_{kind}_{index}.csv")))?;
            }
        }
    }
    write_text(&out.join(ATTACKS_FILE), &csv)?;
    let summary: BTreeMap<String, MeanStd> = aucs.iter().map(|(k, v)| (k.to_string(), MeanStd::of(v))).collect();
    write_json(
        &out.join("attack.json"),
        &json!({
            "model": a.model,
            "data": a.data.data,
            "seed": a.seed,
            "seeds": a.seeds,
            "sampling": sampling,
            "delta": a.delta,
            "auc": summary,
        }),
    )?;
    for (kind, s) in &summary {
        println!("{kind}: AUC {:.4} ± {:.4} over {} seeds", s.mean, s.std, s.n);
    }
    Ok(false)
}

/// Configs compiled into the binary, runnable by name.
const BUNDLED: &[(&str, &str)] = &[(
    "bipartite-baselines",
    include_str!("../../../configs/bipartite-baselines.json"),
)];

fn load_experiment(path: &Path) -> Result<ExperimentConfig> {
    if !path.exists() {
        if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| Path::new(name) == path) {
            return Ok(ExperimentConfig::from_json(text)?);
        }
    }
    ExperimentConfig::load(path).with_context(|| format!("loading experiment config {}", path.display()))
}

fn experiment(a: ExperimentArgs) -> Result<bool> {
    let mut config = load_experiment(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| output_root().join("experiments").join(&config.name));
    if a.dry_run {
        let plan = json!({
            "name": config.name,
            "config_hash": config.hash()?,
            "output": out,
            "dataset": config.dataset,
            "setting": config.setting,
            "train_seeds": config.train_seeds,
            "attacks": config.attacks,
            "cells": config.cells()?,
        });
        print_json(&plan)?;
        return Ok(false);
    }
    let base_dir = a.config.parent().filter(|p| !p.as_os_str().is_empty());
    let report = run_experiment(&config, base_dir, &out, a.jobs)?;
    println!("{} -> {}", report.name, out.display());
    for cell in &report.cells {
        let mut line = format!(
            "{:<14} eps {:<5} micro-F1 {:.4} ± {:.4}",
            cell.model, cell.epsilon.to_string(), cell.micro_f1.mean, cell.micro_f1.std
        );
        for at in &cell.attacks {
            let _ = write!(line, "  {} {:.4} ± {:.4}", at.attack, at.auc.mean, at.auc.std);
        }
        println!("{line}");
    }
    for f in &report.failed {
        eprintln!("failed cell: {} at eps {}: {}", f.model, f.epsilon, f.error);
    }
    Ok(!report.failed.is_empty())
}

fn stats(a: StatsArgs) -> Result<bool> {
    let d = load_data(&a.data)?;
    let h = homophily_profile(&d.graph, &d.labels, d.num_classes)?;
    let mut class_sizes = vec![0usize; d.num_classes];
    d.labels.iter().for_each(|&l| class_sizes[l] += 1);
    let report = json!({
        "graph": graph_stats(&d.graph)?,
        "num_classes": d.num_classes,
        "num_features": d.num_features(),
        "class_sizes": class_sizes,
        "split": { "train": d.split.train.len(), "val": d.split.val.len(), "test": d.split.test.len() },
        "homophily": { "per_class_avg": h.per_cluster_avg, "per_class_nodes": h.per_cluster_nodes },
    });
    print_json(&report)?;
    Ok(false)
}

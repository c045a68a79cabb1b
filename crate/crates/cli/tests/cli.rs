use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lpgnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpgnet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("LPGNET_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// A small bipartite dataset in `dir/data`.
fn small_data(dir: &Path) {
    ok(lpgnet(
        &["generate", "bipartite", "--n1", "60", "--n2", "40", "--p-edge", "0.15", "--seed", "3", "--out", "data"],
        dir,
    ));
}

const FAST: &[&str] = &["--data", "data", "--epochs", "30"];

fn train(dir: &Path, extra: &[&str]) -> Value {
    let mut args = vec!["train"];
    args.extend_from_slice(extra);
    args.extend_from_slice(FAST);
    ok(lpgnet(&args, dir));
    let out = extra[extra.iter().position(|&a| a == "--out").unwrap() + 1];
    json(&dir.join(out).join("train.json"))
}

#[test]
fn generate_bipartite_is_loadable_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    ok(lpgnet(&["generate", "bipartite", "--seed", "7", "--out", "a"], tmp.path()));
    ok(lpgnet(&["generate", "bipartite", "--seed", "7", "--out", "b"], tmp.path()));
    for f in ["graph.txt", "features.txt", "labels.txt", "split.txt"] {
        assert_eq!(read(&tmp.path().join("a").join(f)), read(&tmp.path().join("b").join(f)), "{f}");
    }
    let stats = ok(lpgnet(&["stats", "--data", "a"], tmp.path()));
    let stats: Value = serde_json::from_str(&stats).unwrap();
    assert_eq!(stats["graph"]["nodes"], 900);
    assert_eq!(stats["class_sizes"], serde_json::json!([500, 400]));
}

#[test]
fn generate_erdos_renyi_has_requested_density() {
    let tmp = tempfile::tempdir().unwrap();
    ok(lpgnet(
        &["generate", "erdos-renyi", "--nodes", "2708", "--edges", "5429", "--out", "er"],
        tmp.path(),
    ));
    let meta = json(&tmp.path().join("er/generate.json"));
    let density = meta["stats"]["density"].as_f64().unwrap();
    assert!((density - 0.0015).abs() < 0.0001, "{density}");
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lpgnet"))
        .args(["generate", "bipartite", "--seed", "2"])
        .current_dir(tmp.path())
        .env("LPGNET_OUTPUT_ROOT", "elsewhere")
        .output()
        .unwrap();
    ok(out);
    assert!(tmp.path().join("elsewhere/data/bipartite-seed2/graph.txt").exists());
}

#[test]
fn stacked_model_spends_the_whole_budget() {
    let tmp = tempfile::tempdir().unwrap();
    small_data(tmp.path());
    let meta = train(
        tmp.path(),
        &["lpgnet", "--nl", "2", "--eps", "4", "--setting", "transductive", "--out", "run"],
    );
    assert_eq!(meta["ledger_total"].as_f64().unwrap(), 4.0);
    let ledger = json(&tmp.path().join("run/ledger.json"));
    assert_eq!(ledger["entries"].as_array().unwrap().len(), 2);
    for f in ["run.json", "lpgnet/manifest.json", "lpgnet/degree_vectors_train_0.bin"] {
        assert!(tmp.path().join("run").join(f).exists(), "{f}");
    }
}

#[test]
fn noiseless_dpgcn_matches_gcn() {
    let tmp = tempfile::tempdir().unwrap();
    small_data(tmp.path());
    let dp = train(tmp.path(), &["dpgcn", "--eps", "inf", "--seed", "4", "--out", "dp"]);
    let plain = train(tmp.path(), &["gcn", "--seed", "4", "--out", "plain"]);
    assert_eq!(dp["test_micro_f1"], plain["test_micro_f1"]);
    assert_eq!(read(&tmp.path().join("dp/weights.json")), read(&tmp.path().join("plain/weights.json")));
}

#[test]
fn training_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    small_data(tmp.path());
    train(tmp.path(), &["lpgnet", "--eps", "2", "--seed", "1", "--out", "a"]);
    train(tmp.path(), &["lpgnet", "--eps", "2", "--seed", "1", "--out", "b"]);
    for f in ["run.json", "ledger.json", "lpgnet/mlp_0.json", "lpgnet/mlp_1.json", "lpgnet/degree_vectors_train_0.bin"] {
        assert_eq!(read(&tmp.path().join("a").join(f)), read(&tmp.path().join("b").join(f)), "{f}");
    }
}

#[test]
fn missing_dataset_names_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lpgnet(&["train", "gcn", "--data", "no-such-dir"], tmp.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-dir"));
}

#[test]
fn attack_writes_one_row_per_attack_and_seed() {
    let tmp = tempfile::tempdir().unwrap();
    small_data(tmp.path());
    train(tmp.path(), &["mlp", "--out", "mlp"]);
    ok(lpgnet(
        &["attack", "--model", "mlp", "--data", "data", "--attacks", "lpa,linkteller", "--seeds", "5", "--k", "50"],
        tmp.path(),
    ));
    let csv = std::fs::read_to_string(tmp.path().join("mlp/attacks.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 10);
    let linkteller: Vec<&str> = rows.iter().filter(|r| r[4] == "linkteller").map(|r| r[7]).collect();
    assert_eq!(linkteller, vec!["0.5"; 5]);
}

#[test]
fn unknown_attack_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lpgnet(&["attack", "--model", "m", "--data", "d", "--attacks", "lpa,telepathy"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("telepathy"));
}

#[test]
fn infer_reproduces_training_scores() {
    let tmp = tempfile::tempdir().unwrap();
    small_data(tmp.path());
    let meta = train(tmp.path(), &["lpgnet", "--eps", "3", "--setting", "inductive_different", "--out", "run"]);
    ok(lpgnet(&["infer", "--model", "run", "--data", "data", "--out", "inf"], tmp.path()));
    let inf = json(&tmp.path().join("inf/infer.json"));
    assert_eq!(inf["test_micro_f1"], meta["test_micro_f1"]);
    // the inference graph was already paid for at training time
    assert_eq!(inf["ledger_totals"], meta["ledger_totals"]);
}

const TINY_EXPERIMENT: &str = r#"{
    "name": "tiny",
    "dataset": {"kind": "bipartite", "params": {"n1": 40, "n2": 30, "p_edge": 0.2}, "seed": 1},
    "models": [{"kind": "mlp"}, {"kind": "lpgnet"}],
    "epsilons": [2, "inf"],
    "train": {"epochs": 10},
    "attacks": ["lpa"],
    "pairs": {"k": 30},
    "train_seeds": 2,
    "attack_seeds": 2
}"#;

#[test]
fn experiment_dry_run_resume_and_failures() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("tiny.json"), TINY_EXPERIMENT).unwrap();

    let plan: Value = serde_json::from_str(&ok(lpgnet(&["experiment", "tiny.json", "--dry-run"], tmp.path()))).unwrap();
    assert_eq!(plan["cells"].as_array().unwrap().len(), 3);
    assert_eq!(plan["cells"][1]["plan"]["train"], 2.0);
    assert!(!tmp.path().join("output").exists());

    ok(lpgnet(&["experiment", "tiny.json", "--out", "res"], tmp.path()));
    let utility = std::fs::read_to_string(tmp.path().join("res/utility.csv")).unwrap();
    assert_eq!(utility.lines().count(), 1 + 3 * 2);
    // same config resumes into the same directory; a different seed does not
    ok(lpgnet(&["experiment", "tiny.json", "--out", "res", "--jobs", "2"], tmp.path()));
    assert_eq!(std::fs::read_to_string(tmp.path().join("res/utility.csv")).unwrap(), utility);
    let clash = lpgnet(&["experiment", "tiny.json", "--out", "res", "--seed", "9"], tmp.path());
    assert!(!clash.status.success());
    assert!(String::from_utf8_lossy(&clash.stderr).contains("different config"));

    let failing = TINY_EXPERIMENT.replace(r#"{"kind": "lpgnet"}"#, r#"{"kind": "dpgcn"}"#).replace("[2, ", "[0.005, ");
    std::fs::write(tmp.path().join("failing.json"), failing).unwrap();
    let out = lpgnet(&["experiment", "failing.json", "--out", "bad"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed cell: dpgcn at eps 0.005"));
    assert!(tmp.path().join("bad/report.json").exists());
}

#[test]
fn bundled_config_is_available_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let plan: Value =
        serde_json::from_str(&ok(lpgnet(&["experiment", "bipartite-baselines", "--dry-run"], tmp.path()))).unwrap();
    let models: Vec<&str> = plan["cells"].as_array().unwrap().iter().map(|c| c["model"].as_str().unwrap()).collect();
    assert_eq!(models, ["mlp", "gcn", "lpgnet-1", "gcn-1layer"]);
}

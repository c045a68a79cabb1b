use lpgnet::dp::{BudgetPlan, Epsilon, Phase, Setting};
use lpgnet::graph::{generate_bipartite, BipartiteParams};
use lpgnet::models::{train_on_views, ModelKind, ModelSpec, SettingViews};
use lpgnet::nn::TrainConfig;

fn eps(v: f64) -> Epsilon {
    Epsilon::new(v).unwrap()
}

#[test]
fn plan_rows() {
    let p = BudgetPlan::new(Setting::Transductive, eps(4.0), 2).unwrap();
    assert_eq!((p.train, p.validation, p.inference), (2.0, 0.0, 0.0));
    let p = BudgetPlan::new(Setting::InductiveDifferent, eps(3.0), 1).unwrap();
    assert_eq!((p.train, p.validation, p.inference), (3.0, 0.0, 3.0));
    let p = BudgetPlan::new(Setting::InductiveEvolving, eps(6.0), 2).unwrap();
    assert_eq!((p.train, p.validation, p.inference), (1.0, 1.0, 1.0));
    let p = BudgetPlan::new(Setting::InductiveEvolving, Epsilon::INFINITE, 2).unwrap();
    assert!(p.train.is_infinite() && p.validation.is_infinite() && p.inference.is_infinite());
    assert!(BudgetPlan::new(Setting::Transductive, eps(1.0), 0).is_err());
}

#[test]
fn full_cycles_spend_exactly_the_budget() {
    let d = generate_bipartite(
        &BipartiteParams {
            n1: 40,
            n2: 30,
            p_edge: 0.2,
            ..BipartiteParams::default()
        },
        3,
    )
    .unwrap();
    for setting in Setting::ALL {
        let views = SettingViews::new(&d, setting).unwrap();
        for kind in [ModelKind::Lpgnet, ModelKind::Dpgcn] {
            for nl in [1, 2] {
                if kind == ModelKind::Dpgcn && nl == 2 {
                    continue;
                }
                for e in [1.0, 4.0, 6.0] {
                    let spec = ModelSpec {
                        nl,
                        config: TrainConfig {
                            epochs: 5,
                            ..TrainConfig::default()
                        },
                        ..ModelSpec::new(kind, setting, eps(e))
                    };
                    let mut run = train_on_views(&views, 2, &spec).unwrap();
                    run.evaluate(&views.inference).unwrap();
                    // a second query reuses the released graph or cached vectors
                    run.evaluate(&views.inference).unwrap();
                    let label = format!("{kind} {setting} nl={nl} ε={e}");
                    for pool in run.ledger.plan.pools() {
                        assert!((run.ledger.pool_total(pool) - e).abs() < 1e-12, "{label} {pool:?}");
                    }
                    let depth = if kind == ModelKind::Lpgnet { nl } else { 1 };
                    let queries = match setting {
                        Setting::Transductive => depth,
                        Setting::InductiveDifferent => 2 * depth,
                        Setting::InductiveEvolving => 3 * depth,
                    };
                    assert_eq!(run.ledger.entries.len(), queries, "{label}");
                    if setting == Setting::InductiveEvolving {
                        for entry in &run.ledger.entries {
                            assert_eq!(entry.epsilon, e / (3 * depth) as f64, "{label}");
                        }
                        for phase in Phase::ALL {
                            assert_eq!(run.ledger.entries.iter().filter(|x| x.phase == phase).count(), depth, "{label}");
                        }
                    }
                }
            }
        }
    }
}

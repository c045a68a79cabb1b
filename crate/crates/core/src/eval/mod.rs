//! Utility metrics, grid search and experiment orchestration.

mod experiment;
mod grid;
mod metrics;

pub use experiment::{
    attack_seed, run_experiment, train_seed, AttackAggregate, AttackRow, CellSummary, DatasetSpec, ExperimentConfig,
    ExperimentReport, FailedCell, HomophilyRow, LedgerRecord, ModelEntry, PlannedCell, ResolvedModel, UtilityRow,
    ATTACKS_FILE, ATTACKS_HEADER, CONFIG_FILE, HOMOPHILY_FILE, HOMOPHILY_HEADER, LEDGER_FILE, REPORT_FILE,
    UTILITY_FILE, UTILITY_HEADER,
};
pub use grid::{grid_search, Grid, GridResult};
pub use metrics::{accuracy, micro_f1, rare_f1, MeanStd};

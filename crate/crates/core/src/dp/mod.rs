//! Laplace mechanism and privacy budget accounting.

mod budget;
mod epsilon;
mod laplace;

pub use budget::{BudgetError, BudgetLedger, BudgetPlan, LedgerEntry, Phase, Pool, Setting};
pub use epsilon::Epsilon;
pub use laplace::{
    laplace_cdf, laplace_from_uniform, laplace_sample, Laplace, ADJACENCY_ENTRY_SENSITIVITY,
    DEGREE_VECTOR_SENSITIVITY, EDGE_COUNT_SENSITIVITY,
};

//! Black-box link inference against trained models and its evaluation
//! protocol.

mod auc;
mod linkteller;
mod lpa;
mod pairs;
mod report;

pub use auc::auc;
pub use linkteller::{influence_scores, linkteller_scores, DEFAULT_DELTA};
pub use lpa::{lpa_scores, similarity, SimilarityMetric};
pub use pairs::{sample_eval_pairs, DegreeBand, EvalPairs, PairMode, PairSampling};
pub use report::{AttackKind, AttackResult, AttackSummary, ScoredPair};

use crate::error::Result;
use crate::matrix::DenseMatrix;

/// Query access to a deployed model: a full feature matrix in, `N × C`
/// posteriors out.
pub trait PosteriorOracle: Sync {
    fn posteriors(&self, features: &DenseMatrix) -> Result<DenseMatrix>;
}

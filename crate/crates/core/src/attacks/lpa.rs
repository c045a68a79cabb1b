use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pairs::EvalPairs;
use super::report::{AttackKind, AttackResult};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityMetric {
    #[default]
    Cosine,
    NegEuclidean,
    Correlation,
}

impl SimilarityMetric {
    pub const ALL: [SimilarityMetric; 3] = [Self::Cosine, Self::NegEuclidean, Self::Correlation];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cosine => "cosine",
            Self::NegEuclidean => "neg_euclidean",
            Self::Correlation => "correlation",
        }
    }
}

impl fmt::Display for SimilarityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown similarity metric {s:?}")))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let norms = dot(a, a).sqrt() * dot(b, b).sqrt();
    if norms == 0.0 {
        0.0
    } else {
        dot(a, b) / norms
    }
}

/// Similarity of two posterior rows; a zero-norm (or, for correlation,
/// constant) row scores 0.
pub fn similarity(metric: SimilarityMetric, a: &[f64], b: &[f64]) -> f64 {
    match metric {
        SimilarityMetric::Cosine => cosine(a, b),
        SimilarityMetric::NegEuclidean => -a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        SimilarityMetric::Correlation => {
            let center = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| x - m).collect::<Vec<_>>()
            };
            cosine(&center(a), &center(b))
        }
    }
}

/// Scores each pair by the similarity of its endpoints' posteriors.
pub fn lpa_scores(posteriors: &DenseMatrix, pairs: &EvalPairs, metric: SimilarityMetric, seed: u64) -> Result<AttackResult> {
    if let Some(((u, v), _)) = pairs.labeled().find(|&((u, v), _)| u.max(v) >= posteriors.rows()) {
        return Err(Error::shape(format!("pair ({u}, {v}) outside {} posterior rows", posteriors.rows())));
    }
    AttackResult::from_scores(AttackKind::Lpa(metric), pairs, seed, |u, v| {
        similarity(metric, posteriors.row(u), posteriors.row(v))
    })
}

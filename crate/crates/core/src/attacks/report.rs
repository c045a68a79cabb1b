use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::lpa::SimilarityMetric;
use super::pairs::EvalPairs;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AttackKind {
    Lpa(SimilarityMetric),
    LinkTeller,
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lpa(SimilarityMetric::Cosine) => f.write_str("lpa"),
            Self::Lpa(m) => write!(f, "lpa_{m}"),
            Self::LinkTeller => f.write_str("linkteller"),
        }
    }
}

impl From<AttackKind> for String {
    fn from(a: AttackKind) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for AttackKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.to_ascii_lowercase().replace('-', "_");
        match s.as_str() {
            "linkteller" => Ok(Self::LinkTeller),
            "lpa" => Ok(Self::Lpa(SimilarityMetric::Cosine)),
            _ => match s.strip_prefix("lpa_") {
                Some(metric) => Ok(Self::Lpa(metric.parse()?)),
                None => Err(Error::invalid(format!("unknown attack {s:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredPair {
    pub u: usize,
    pub v: usize,
    pub is_edge: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub attack: AttackKind,
    pub pairs: Vec<ScoredPair>,
    pub auc: f64,
    pub seed: u64,
}

/// One row of a JSON attack summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub attack: String,
    pub model: String,
    pub epsilon: String,
    pub seed: u64,
    pub auc: f64,
}

impl AttackResult {
    pub(crate) fn from_scores(
        attack: AttackKind,
        pairs: &EvalPairs,
        seed: u64,
        score: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let scored: Vec<ScoredPair> = pairs
            .labeled()
            .map(|((u, v), is_edge)| ScoredPair {
                u,
                v,
                is_edge,
                score: score(u, v),
            })
            .collect();
        let pos: Vec<f64> = scored.iter().filter(|p| p.is_edge).map(|p| p.score).collect();
        let neg: Vec<f64> = scored.iter().filter(|p| !p.is_edge).map(|p| p.score).collect();
        Ok(Self {
            attack,
            auc: auc(&pos, &neg)?,
            pairs: scored,
            seed,
        })
    }

    /// CSV with header `u,v,is_edge,score`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("u,v,is_edge,score\n");
        for p in &self.pairs {
            out.push_str(&format!("{},{},{},{}\n", p.u, p.v, u8::from(p.is_edge), p.score));
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn summary(&self, model: &str, epsilon: &str) -> AttackSummary {
        AttackSummary {
            attack: self.attack.to_string(),
            model: model.to_string(),
            epsilon: epsilon.to_string(),
            seed: self.seed,
            auc: self.auc,
        }
    }
}

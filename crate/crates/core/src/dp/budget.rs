//! Per-phase privacy budget plan and the ledger that enforces it.
//!
//! | setting             | train  | validation | inference |
//! |---------------------|--------|------------|-----------|
//! | transductive        | ε/nl   | reuse      | reuse     |
//! | inductive_different | ε/nl   | reuse      | ε/nl      |
//! | inductive_evolving  | ε/3nl  | ε/3nl      | ε/3nl     |
//!
//! Charges add up by sequential composition. In the inductive-different
//! setting the inference graph is a separate graph, so its charges go to a
//! separate pool and each pool is capped at the full ε.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Epsilon;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Transductive,
    InductiveDifferent,
    InductiveEvolving,
}

impl Setting {
    pub const ALL: [Setting; 3] = [
        Setting::Transductive,
        Setting::InductiveDifferent,
        Setting::InductiveEvolving,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Transductive => "transductive",
            Setting::InductiveDifferent => "inductive_different",
            Setting::InductiveEvolving => "inductive_evolving",
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.replace('-', "_").as_str() {
            "transductive" => Ok(Setting::Transductive),
            "inductive_different" => Ok(Setting::InductiveDifferent),
            "inductive_evolving" => Ok(Setting::InductiveEvolving),
            _ => Err(Error::invalid(format!("unknown setting {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Validation,
    Inference,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Train, Phase::Validation, Phase::Inference];
}

/// Which graph a charge is spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    TrainingGraph,
    InferenceGraph,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BudgetError {
    #[error("stack depth must be at least 1")]
    ZeroDepth,
    #[error("{phase:?} layer {layer}: charging {eps} would bring the {pool:?} pool to {total}, above epsilon {limit}")]
    OverSpend {
        phase: Phase,
        layer: usize,
        pool: Pool,
        eps: f64,
        total: f64,
        limit: f64,
    },
    #[error("{phase:?} layer {layer} was already charged")]
    DoubleCharge { phase: Phase, layer: usize },
    #[error("{phase:?} reuses cached vectors in this setting and must not query the graph")]
    NotPlanned { phase: Phase },
    #[error("{phase:?} layer {layer}: charged {eps} but the plan allocates {planned}")]
    AllocationMismatch {
        phase: Phase,
        layer: usize,
        eps: f64,
        planned: f64,
    },
    #[error("layer {layer} outside a stack of depth {nl}")]
    LayerOutOfRange { layer: usize, nl: usize },
    #[error("a non-private plan cannot be charged")]
    NonPrivate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetPlan {
    pub setting: Setting,
    pub total_epsilon: Epsilon,
    pub nl: usize,
    /// Per-layer ε of each fresh query. `0` means the phase reuses cached
    /// vectors; every entry is infinite for a non-private plan.
    #[serde(with = "allocation")]
    pub train: f64,
    #[serde(with = "allocation")]
    pub validation: f64,
    #[serde(with = "allocation")]
    pub inference: f64,
}

/// JSON has no infinity; non-private allocations are written as `"inf"`.
mod allocation {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("invalid allocation {t:?}"))),
        }
    }
}

impl BudgetPlan {
    pub fn new(setting: Setting, total_epsilon: Epsilon, nl: usize) -> Result<Self, BudgetError> {
        if nl == 0 {
            return Err(BudgetError::ZeroDepth);
        }
        let eps = total_epsilon.value();
        let layers = nl as f64;
        let (train, validation, inference) = if !total_epsilon.is_finite() {
            (f64::INFINITY, f64::INFINITY, f64::INFINITY)
        } else {
            match setting {
                Setting::Transductive => (eps / layers, 0.0, 0.0),
                Setting::InductiveDifferent => (eps / layers, 0.0, eps / layers),
                Setting::InductiveEvolving => {
                    let share = eps / (3.0 * layers);
                    (share, share, share)
                }
            }
        };
        Ok(Self {
            setting,
            total_epsilon,
            nl,
            train,
            validation,
            inference,
        })
    }

    pub fn is_private(&self) -> bool {
        self.total_epsilon.is_finite()
    }

    pub fn allocation(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Train => self.train,
            Phase::Validation => self.validation,
            Phase::Inference => self.inference,
        }
    }

    /// Budget for one fresh degree query in `phase`, or `None` when the phase
    /// reuses cached vectors.
    pub fn query_epsilon(&self, phase: Phase) -> Option<Epsilon> {
        let a = self.allocation(phase);
        if a == 0.0 {
            None
        } else {
            Some(if a.is_finite() { Epsilon::new(a).ok()? } else { Epsilon::INFINITE })
        }
    }

    pub fn pool(&self, phase: Phase) -> Pool {
        match (self.setting, phase) {
            (Setting::InductiveDifferent, Phase::Inference) => Pool::InferenceGraph,
            _ => Pool::TrainingGraph,
        }
    }

    pub fn pools(&self) -> Vec<Pool> {
        match self.setting {
            Setting::InductiveDifferent => vec![Pool::TrainingGraph, Pool::InferenceGraph],
            _ => vec![Pool::TrainingGraph],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub phase: Phase,
    pub layer: usize,
    pub pool: Pool,
    pub epsilon: f64,
    /// Running total of the entry's pool after this charge.
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub plan: BudgetPlan,
    pub entries: Vec<LedgerEntry>,
}

/// Slack for floating-point sums such as six charges of ε/6.
const SUM_TOLERANCE: f64 = 1e-9;

impl BudgetLedger {
    pub fn new(plan: BudgetPlan) -> Self {
        Self {
            plan,
            entries: Vec::new(),
        }
    }

    pub fn pool_total(&self, pool: Pool) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.pool == pool)
            .map(|e| e.epsilon)
            .sum()
    }

    pub fn is_charged(&self, phase: Phase, layer: usize) -> bool {
        self.entries.iter().any(|e| e.phase == phase && e.layer == layer)
    }

    /// Records one fresh query. A non-private plan records nothing.
    pub fn charge(&mut self, phase: Phase, layer: usize, eps: f64) -> Result<(), BudgetError> {
        if !self.plan.is_private() {
            return if eps.is_infinite() {
                Ok(())
            } else {
                Err(BudgetError::NonPrivate)
            };
        }
        let limit = self.plan.total_epsilon.value();
        let pool = self.plan.pool(phase);
        let total = self.pool_total(pool) + eps;
        if total > limit * (1.0 + SUM_TOLERANCE) {
            return Err(BudgetError::OverSpend {
                phase,
                layer,
                pool,
                eps,
                total,
                limit,
            });
        }
        if self.is_charged(phase, layer) {
            return Err(BudgetError::DoubleCharge { phase, layer });
        }
        if layer >= self.plan.nl {
            return Err(BudgetError::LayerOutOfRange {
                layer,
                nl: self.plan.nl,
            });
        }
        let planned = self.plan.allocation(phase);
        if planned == 0.0 {
            return Err(BudgetError::NotPlanned { phase });
        }
        if (eps - planned).abs() > 1e-12 * planned.max(1.0) {
            return Err(BudgetError::AllocationMismatch {
                phase,
                layer,
                eps,
                planned,
            });
        }
        self.entries.push(LedgerEntry {
            phase,
            layer,
            pool,
            epsilon: eps,
            cumulative: total,
        });
        Ok(())
    }

    /// Charges the planned allocation of `phase` and returns the query budget.
    pub fn charge_planned(&mut self, phase: Phase, layer: usize) -> Result<Epsilon, BudgetError> {
        let eps = self
            .plan
            .query_epsilon(phase)
            .ok_or(BudgetError::NotPlanned { phase })?;
        self.charge(phase, layer, eps.value())?;
        Ok(eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(v: f64) -> Epsilon {
        Epsilon::new(v).unwrap()
    }

    #[test]
    fn plan_rows() {
        let t = BudgetPlan::new(Setting::Transductive, eps(4.0), 2).unwrap();
        assert_eq!((t.train, t.validation, t.inference), (2.0, 0.0, 0.0));
        let d = BudgetPlan::new(Setting::InductiveDifferent, eps(3.0), 1).unwrap();
        assert_eq!((d.train, d.validation, d.inference), (3.0, 0.0, 3.0));
        let e = BudgetPlan::new(Setting::InductiveEvolving, eps(6.0), 2).unwrap();
        assert_eq!((e.train, e.validation, e.inference), (1.0, 1.0, 1.0));
        let inf = BudgetPlan::new(Setting::InductiveEvolving, Epsilon::INFINITE, 3).unwrap();
        assert!(inf.train.is_infinite() && inf.validation.is_infinite() && inf.inference.is_infinite());
        assert_eq!(
            BudgetPlan::new(Setting::Transductive, eps(1.0), 0),
            Err(BudgetError::ZeroDepth)
        );
    }

    #[test]
    fn plan_is_pure() {
        let a = BudgetPlan::new(Setting::InductiveEvolving, eps(1.0), 3).unwrap();
        let b = BudgetPlan::new(Setting::InductiveEvolving, eps(1.0), 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn transductive_charges_sum_to_eps() {
        let mut l = BudgetLedger::new(BudgetPlan::new(Setting::Transductive, eps(4.0), 2).unwrap());
        l.charge(Phase::Train, 0, 2.0).unwrap();
        l.charge(Phase::Train, 1, 2.0).unwrap();
        assert_eq!(l.pool_total(Pool::TrainingGraph), 4.0);
        assert!(matches!(
            l.charge(Phase::Train, 0, 2.0),
            Err(BudgetError::OverSpend { .. })
        ));
    }

    #[test]
    fn evolving_charges_each_phase() {
        let mut l = BudgetLedger::new(BudgetPlan::new(Setting::InductiveEvolving, eps(3.0), 1).unwrap());
        for p in Phase::ALL {
            l.charge(p, 0, 1.0).unwrap();
        }
        assert_eq!(l.pool_total(Pool::TrainingGraph), 3.0);
    }

    #[test]
    fn different_uses_two_pools() {
        let mut l = BudgetLedger::new(BudgetPlan::new(Setting::InductiveDifferent, eps(3.0), 1).unwrap());
        l.charge(Phase::Train, 0, 3.0).unwrap();
        l.charge(Phase::Inference, 0, 3.0).unwrap();
        assert_eq!(l.pool_total(Pool::TrainingGraph), 3.0);
        assert_eq!(l.pool_total(Pool::InferenceGraph), 3.0);
        assert!(matches!(
            l.charge(Phase::Validation, 0, 0.5),
            Err(BudgetError::OverSpend { .. })
        ));
        let mut fresh = BudgetLedger::new(l.plan.clone());
        assert_eq!(
            fresh.charge(Phase::Validation, 0, 0.5),
            Err(BudgetError::NotPlanned { phase: Phase::Validation })
        );
    }

    #[test]
    fn rejects_double_and_mismatched_charges() {
        let mut l = BudgetLedger::new(BudgetPlan::new(Setting::InductiveEvolving, eps(6.0), 2).unwrap());
        l.charge(Phase::Train, 0, 1.0).unwrap();
        assert_eq!(
            l.charge(Phase::Train, 0, 1.0),
            Err(BudgetError::DoubleCharge { phase: Phase::Train, layer: 0 })
        );
        assert!(matches!(
            l.charge(Phase::Train, 1, 0.5),
            Err(BudgetError::AllocationMismatch { .. })
        ));
        assert!(matches!(
            l.charge(Phase::Train, 2, 1.0),
            Err(BudgetError::LayerOutOfRange { .. })
        ));
    }

    #[test]
    fn non_private_ledger_stays_empty() {
        let mut l = BudgetLedger::new(BudgetPlan::new(Setting::Transductive, Epsilon::INFINITE, 2).unwrap());
        l.charge_planned(Phase::Train, 0).unwrap();
        assert!(l.entries.is_empty());
    }
}

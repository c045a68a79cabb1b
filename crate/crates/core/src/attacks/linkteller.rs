use std::collections::BTreeMap;

use super::pairs::EvalPairs;
use super::report::{AttackKind, AttackResult};
use super::PosteriorOracle;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::par;

pub const DEFAULT_DELTA: f64 = 1e-4;

/// Influence of each target's features on its partners: for target `v`,
/// scale row `v` by `1 + delta` and report `‖(P'_u − P_u) / delta‖₂` for
/// every partner `u`. Targets are probed in parallel.
pub fn influence_scores(
    oracle: &dyn PosteriorOracle,
    features: &DenseMatrix,
    partners: &BTreeMap<usize, Vec<usize>>,
    delta: f64,
) -> Result<BTreeMap<(usize, usize), f64>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!("delta {delta} must be positive")));
    }
    let base = oracle.posteriors(features)?;
    if base.rows() != features.rows() {
        return Err(Error::shape("oracle returned a different number of rows"));
    }
    let targets: Vec<(&usize, &Vec<usize>)> = partners.iter().collect();
    let per_target = par::map_slice(&targets, |&(&v, us)| -> Result<Vec<((usize, usize), f64)>> {
        let mut probed = features.clone();
        probed.row_mut(v).iter_mut().for_each(|x| *x *= 1.0 + delta);
        let after = oracle.posteriors(&probed)?;
        Ok(us
            .iter()
            .map(|&u| {
                let norm = after
                    .row(u)
                    .iter()
                    .zip(base.row(u))
                    .map(|(a, b)| ((a - b) / delta).powi(2))
                    .sum::<f64>()
                    .sqrt();
                ((v, u), norm)
            })
            .collect())
    });
    let mut out = BTreeMap::new();
    for scores in per_target {
        out.extend(scores?);
    }
    Ok(out)
}

/// Scores each pair by the larger of the two directed influences.
pub fn linkteller_scores(
    oracle: &dyn PosteriorOracle,
    features: &DenseMatrix,
    pairs: &EvalPairs,
    delta: f64,
    seed: u64,
) -> Result<AttackResult> {
    let mut partners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for ((u, v), _) in pairs.labeled() {
        if u.max(v) >= features.rows() {
            return Err(Error::shape(format!("pair ({u}, {v}) outside {} nodes", features.rows())));
        }
        partners.entry(u).or_default().push(v);
        partners.entry(v).or_default().push(u);
    }
    let influence = influence_scores(oracle, features, &partners, delta)?;
    AttackResult::from_scores(AttackKind::LinkTeller, pairs, seed, |u, v| influence[&(u, v)].max(influence[&(v, u)]))
}

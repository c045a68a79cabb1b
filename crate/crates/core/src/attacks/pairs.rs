use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::purpose_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// `k` uniform edges and `k` uniform non-edges.
    #[default]
    TransductiveSampled,
    /// `k` sampled nodes; every pair among them, split by edge presence.
    InductiveSubgraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeBand {
    #[default]
    All,
    Low,
    High,
}

impl fmt::Display for DegreeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::Low => "low",
            Self::High => "high",
        })
    }
}

impl FromStr for DegreeBand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Self::All),
            "low" => Ok(Self::Low),
            "high" => Ok(Self::High),
            _ => Err(Error::invalid(format!("unknown degree band {s:?}"))),
        }
    }
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "transductive_sampled" | "transductive" => Ok(Self::TransductiveSampled),
            "inductive_subgraph" | "inductive" => Ok(Self::InductiveSubgraph),
            _ => Err(Error::invalid(format!("unknown pair mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PairSampling {
    pub mode: PairMode,
    /// Edges and non-edges sampled (transductive) or nodes sampled (inductive).
    pub k: usize,
    pub band: DegreeBand,
    /// Number of lowest- or highest-degree candidates a band keeps.
    pub band_size: usize,
}

impl Default for PairSampling {
    fn default() -> Self {
        Self {
            mode: PairMode::TransductiveSampled,
            k: 500,
            band: DegreeBand::All,
            band_size: 500,
        }
    }
}

/// Node pairs `(u, v)` with `u < v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPairs {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
    pub mode: PairMode,
    pub degree_band: DegreeBand,
}

impl EvalPairs {
    /// Every pair with its edge flag, positives first.
    pub fn labeled(&self) -> impl Iterator<Item = ((usize, usize), bool)> + '_ {
        self.positives
            .iter()
            .map(|&p| (p, true))
            .chain(self.negatives.iter().map(|&p| (p, false)))
    }
}

/// `band_size` lowest- or highest-degree candidates (ties by id), or all.
fn band_nodes(graph: &Graph, candidates: &[usize], band: DegreeBand, band_size: usize) -> Vec<usize> {
    let mut nodes = candidates.to_vec();
    nodes.sort_unstable();
    nodes.dedup();
    match band {
        DegreeBand::All => nodes,
        DegreeBand::Low | DegreeBand::High => {
            nodes.sort_by_key(|&v| {
                let d = graph.degree(v);
                (if band == DegreeBand::Low { d as isize } else { -(d as isize) }, v)
            });
            nodes.truncate(band_size);
            nodes.sort_unstable();
            nodes
        }
    }
}

/// Samples evaluation pairs among `candidates` (all nodes when empty).
pub fn sample_eval_pairs(graph: &Graph, candidates: &[usize], sampling: &PairSampling, seed: u64) -> Result<EvalPairs> {
    let all: Vec<usize>;
    let candidates = if candidates.is_empty() {
        all = (0..graph.num_nodes()).collect();
        &all[..]
    } else {
        candidates
    };
    if let Some(&v) = candidates.iter().find(|&&v| v >= graph.num_nodes()) {
        return Err(Error::invalid(format!("candidate node {v} out of range")));
    }
    let k = sampling.k;
    if k == 0 {
        return Err(Error::invalid("pair sampling needs k >= 1"));
    }
    let nodes = band_nodes(graph, candidates, sampling.band, sampling.band_size);
    let mut rng = purpose_rng(seed, "eval-pairs", 0);
    let (positives, negatives) = match sampling.mode {
        PairMode::InductiveSubgraph => {
            if nodes.len() < k {
                return Err(Error::Insufficient(format!("{k} nodes requested, {} available", nodes.len())));
            }
            let mut sample: Vec<usize> = index::sample(&mut rng, nodes.len(), k).into_iter().map(|i| nodes[i]).collect();
            sample.sort_unstable();
            let mut pos = Vec::new();
            let mut neg = Vec::new();
            for (i, &u) in sample.iter().enumerate() {
                for &v in &sample[i + 1..] {
                    if graph.has_edge(u, v) {
                        pos.push((u, v));
                    } else {
                        neg.push((u, v));
                    }
                }
            }
            (pos, neg)
        }
        PairMode::TransductiveSampled => {
            let mut member = vec![false; graph.num_nodes()];
            nodes.iter().for_each(|&v| member[v] = true);
            let edges: Vec<(usize, usize)> = graph.edges().filter(|&(u, v)| member[u] && member[v]).collect();
            let total_pairs = nodes.len() * nodes.len().saturating_sub(1) / 2;
            let non_edges = total_pairs - edges.len();
            // bands take what they can get; the whole graph must supply k of each
            let (kp, kn) = match sampling.band {
                DegreeBand::All => (k, k),
                _ => (k.min(edges.len()), k.min(non_edges)),
            };
            if edges.len() < kp.max(1) || non_edges < kn.max(1) {
                return Err(Error::Insufficient(format!(
                    "{kp} edges and {kn} non-edges requested, {} and {non_edges} available",
                    edges.len()
                )));
            }
            let pos: Vec<_> = index::sample(&mut rng, edges.len(), kp).into_iter().map(|i| edges[i]).collect();
            let neg = sample_non_edges(graph, &nodes, non_edges, kn, &mut rng);
            (pos, neg)
        }
    };
    Ok(EvalPairs {
        positives,
        negatives,
        mode: sampling.mode,
        degree_band: sampling.band,
    })
}

/// `k` distinct non-edges among `nodes`: rejection sampling when they are
/// plentiful, enumeration otherwise.
fn sample_non_edges(graph: &Graph, nodes: &[usize], available: usize, k: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    if available <= 4 * k {
        let all: Vec<(usize, usize)> = nodes
            .iter()
            .enumerate()
            .flat_map(|(i, &u)| nodes[i + 1..].iter().map(move |&v| (u, v)))
            .filter(|&(u, v)| !graph.has_edge(u, v))
            .collect();
        return index::sample(rng, all.len(), k).into_iter().map(|i| all[i]).collect();
    }
    let mut seen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let a = nodes[rng.gen_range(0..nodes.len())];
        let b = nodes[rng.gen_range(0..nodes.len())];
        let pair = (a.min(b), a.max(b));
        if a != b && !graph.has_edge(a, b) && seen.insert(pair) {
            out.push(pair);
        }
    }
    out
}

//! Purity, collocation and their harmonic mean for induced role clusters.
//!
//! PU = (1/N) Σ_c max_g |c ∩ g| and CO = (1/N) Σ_g max_c |c ∩ g|, with N
//! the number of arguments, c ranging over clusters and g over gold roles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::PredictionRecord;
use super::supervised::f1;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterScores {
    pub arguments: usize,
    pub clusters: usize,
    pub gold_roles: usize,
    pub purity: f64,
    pub collocation: f64,
    pub f1: f64,
}

/// Scores (cluster, gold) pairs.
pub fn cluster_pair_scores<C: Ord, G: Ord>(pairs: impl IntoIterator<Item = (C, G)>) -> Result<ClusterScores> {
    let mut table: BTreeMap<C, BTreeMap<G, usize>> = BTreeMap::new();
    let mut n = 0usize;
    for (c, g) in pairs {
        *table.entry(c).or_default().entry(g).or_default() += 1;
        n += 1;
    }
    if n == 0 {
        return Err(Error::Evaluation("no arguments to cluster-score".into()));
    }
    let purity_hits: usize = table.values().map(|row| row.values().copied().max().unwrap_or(0)).sum();
    let mut best_per_gold: BTreeMap<&G, usize> = BTreeMap::new();
    for row in table.values() {
        for (g, &count) in row {
            let best = best_per_gold.entry(g).or_default();
            *best = (*best).max(count);
        }
    }
    let collocation_hits: usize = best_per_gold.values().sum();
    let (purity, collocation) = (purity_hits as f64 / n as f64, collocation_hits as f64 / n as f64);
    Ok(ClusterScores {
        arguments: n,
        clusters: table.len(),
        gold_roles: best_per_gold.len(),
        purity,
        collocation,
        f1: f1(purity, collocation),
    })
}

/// Scores prediction records, treating each predicted label (role or cluster) as a cluster.
pub fn clustering_scores(records: &[PredictionRecord], drop_self_loops: bool) -> Result<ClusterScores> {
    let mut pairs = Vec::new();
    for rec in records {
        for a in &rec.arguments {
            if drop_self_loops && rec.is_self_loop(a) {
                continue;
            }
            let gold = a.gold.clone().ok_or_else(|| Error::Evaluation(format!("no gold role in {}", rec.instance)))?;
            pairs.push((a.predicted.key(), gold));
        }
    }
    cluster_pair_scores(pairs)
}

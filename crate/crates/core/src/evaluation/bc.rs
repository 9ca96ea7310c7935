//! Bhattacharyya coefficients between verbal and nominal argument-lemma
//! samples of each (predicate, role) pair, with per-lemma contributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Lemma counts.
pub type Sample = BTreeMap<String, u64>;

/// Σ_x √(p(x)·q(x)) over the empirical distributions of two samples;
/// `None` when either is empty. Rounding above 1 is clamped.
pub fn bhattacharyya(p: &Sample, q: &Sample) -> Option<f64> {
    let np: u64 = p.values().sum();
    let nq: u64 = q.values().sum();
    if np == 0 || nq == 0 {
        return None;
    }
    let bc: f64 = p
        .iter()
        .filter_map(|(x, &cp)| q.get(x).map(|&cq| ((cp as f64 / np as f64) * (cq as f64 / nq as f64)).sqrt()))
        .fold(0.0, |a, b| a + b);
    Some(bc.min(1.0))
}

/// BC(p, q) − BC(p, q with every occurrence of `lemma` removed); `None` when
/// a sample is or becomes empty.
pub fn argument_contribution(p: &Sample, q: &Sample, lemma: &str) -> Option<f64> {
    let before = bhattacharyya(p, q)?;
    let drop =
        |s: &Sample| s.iter().filter(|(x, _)| x.as_str() != lemma).map(|(x, &c)| (x.clone(), c)).collect::<Sample>();
    let after = bhattacharyya(&drop(p), &drop(q))?;
    Some(before - after)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BcConfig {
    /// Both domains need at least this many arguments for the pair.
    pub min_pair_instances: u64,
    /// Lemmas rarer than this over both samples of a pair are dropped.
    pub min_lemma_frequency: u64,
}

impl Default for BcConfig {
    fn default() -> Self {
        BcConfig { min_pair_instances: 100, min_lemma_frequency: 20 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub lemma: String,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcEntry {
    pub predicate: String,
    pub role: String,
    pub verbal_size: u64,
    pub nominal_size: u64,
    /// The filtered samples the coefficient is computed on.
    pub verbal: Sample,
    pub nominal: Sample,
    pub bc: Option<f64>,
    /// Every lemma of the filtered samples, largest ΔBC first; undefined last.
    pub contributions: Vec<Contribution>,
}

impl BcEntry {
    /// Recomputes every contribution from the stored samples.
    pub fn contributions_reproduce(&self) -> bool {
        self.bc == bhattacharyya(&self.verbal, &self.nominal)
            && self
                .contributions
                .iter()
                .all(|c| argument_contribution(&self.verbal, &self.nominal, &c.lemma) == c.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcReport {
    pub config: BcConfig,
    /// (predicate, role) pairs seen in both domains but under the size cut-off.
    pub below_cutoff: usize,
    pub entries: Vec<BcEntry>,
}

fn samples(corpus: &Corpus) -> Result<BTreeMap<(String, String), Sample>> {
    let mut out: BTreeMap<(String, String), Sample> = BTreeMap::new();
    for (s, p) in corpus.instances() {
        for a in &p.arguments {
            let role =
                a.gold_role.ok_or_else(|| Error::Evaluation(format!("unlabeled argument in {}", s.instance_id(p))))?;
            let key = (p.lemma.clone(), corpus.roles().label(role).to_string());
            *out.entry(key).or_default().entry(a.lemma.clone()).or_default() += 1;
        }
    }
    Ok(out)
}

/// Compares gold-labeled verbal and nominal corpora pair by pair.
pub fn analyze_bc(verbal: &Corpus, nominal: &Corpus, cfg: BcConfig) -> Result<BcReport> {
    if verbal.roles() != nominal.roles() {
        return Err(Error::Incompatible("role inventories differ".into()));
    }
    let vs = samples(verbal)?;
    let ns = samples(nominal)?;
    let mut entries = Vec::new();
    let mut below_cutoff = 0;
    for (key, v) in &vs {
        let Some(n) = ns.get(key) else { continue };
        let (verbal_size, nominal_size) = (v.values().sum::<u64>(), n.values().sum::<u64>());
        if verbal_size < cfg.min_pair_instances || nominal_size < cfg.min_pair_instances {
            below_cutoff += 1;
            continue;
        }
        let frequent =
            |x: &str| v.get(x).copied().unwrap_or(0) + n.get(x).copied().unwrap_or(0) >= cfg.min_lemma_frequency;
        let keep = |s: &Sample| s.iter().filter(|(x, _)| frequent(x)).map(|(x, &c)| (x.clone(), c)).collect::<Sample>();
        let (fv, fn_) = (keep(v), keep(n));
        let bc = bhattacharyya(&fv, &fn_);
        let lemmas: Vec<&String> = {
            let mut l: Vec<&String> = fv.keys().chain(fn_.keys()).collect();
            l.sort();
            l.dedup();
            l
        };
        let mut contributions: Vec<Contribution> = lemmas
            .into_iter()
            .map(|l| Contribution { lemma: l.clone(), delta: argument_contribution(&fv, &fn_, l) })
            .collect();
        contributions.sort_by(|a, b| match (a.delta, b.delta) {
            (Some(x), Some(y)) => y.total_cmp(&x).then_with(|| a.lemma.cmp(&b.lemma)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.lemma.cmp(&b.lemma),
        });
        entries.push(BcEntry {
            predicate: key.0.clone(),
            role: key.1.clone(),
            verbal_size,
            nominal_size,
            verbal: fv,
            nominal: fn_,
            bc,
            contributions,
        });
    }
    Ok(BcReport { config: cfg, below_cutoff, entries })
}

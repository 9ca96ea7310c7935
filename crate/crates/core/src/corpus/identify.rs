//! Rule-based argument and predicate identification over gold dependency trees.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, Corpus};
use crate::error::{Error, Result};

/// How the preposition-sibling rule conditions on the predicate's dependents.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule3Reading {
    /// Siblings count only when the predicate has no dependents.
    #[default]
    NoDependents,
    /// Literal reading: siblings count only when the predicate has dependents.
    HasDependents,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyConfig {
    /// Determiner and punctuation tags never labeled as arguments.
    pub excluded_tags: BTreeSet<String>,
    pub prep_tags: BTreeSet<String>,
    pub subject_label: String,
    pub object_label: String,
    pub rule3: Rule3Reading,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        IdentifyConfig {
            excluded_tags: set(&["DT", ",", ".", ":", "``", "''", "-LRB-", "-RRB-", "HYPH"]),
            prep_tags: set(&["IN", "TO"]),
            subject_label: "SBJ".into(),
            object_label: "OBJ".into(),
            rule3: Rule3Reading::NoDependents,
        }
    }
}

/// Candidate arguments of the predicate at `pred_index`.
pub fn identify_arguments(
    sentence: &AnnotatedSentence,
    pred_index: usize,
    cfg: &IdentifyConfig,
) -> Result<BTreeSet<usize>> {
    let n = sentence.tokens.len();
    if pred_index >= n {
        return Err(Error::Index { index: pred_index, len: n });
    }
    let tokens = &sentence.tokens;
    let is_prep = |i: usize| cfg.prep_tags.contains(&tokens[i].pos);

    let deps: Vec<usize> = sentence.dependents(pred_index).collect();
    let siblings = sentence.siblings(pred_index);
    let has_deps = !deps.is_empty();
    let has_preceding_deps = deps.iter().any(|&d| d < pred_index);

    let mut args = BTreeSet::new();
    // dependents before the predicate; after it only prepositions
    for &d in &deps {
        if d < pred_index || is_prep(d) {
            args.insert(d);
        }
    }
    let rule3_applies = match cfg.rule3 {
        Rule3Reading::NoDependents => !has_deps,
        Rule3Reading::HasDependents => has_deps,
    };
    if rule3_applies {
        args.extend(siblings.iter().copied().filter(|&s| is_prep(s)));
    }
    if tokens[pred_index].deprel == cfg.object_label {
        args.extend(siblings.iter().copied().filter(|&s| tokens[s].deprel == cfg.subject_label));
    }
    if !has_preceding_deps {
        if let Some(j) = (0..pred_index).rev().find(|&j| tokens[j].deprel == cfg.subject_label) {
            args.insert(j);
        }
    }
    args.remove(&pred_index);
    args.retain(|&i| !cfg.excluded_tags.contains(&tokens[i].pos));
    Ok(args)
}

/// Tokens whose (lemma, POS) pair is in the lexicon.
pub fn identify_predicates(sentence: &AnnotatedSentence, lexicon: &BTreeSet<(String, String)>) -> Vec<usize> {
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.contains(&(t.lemma.to_lowercase(), t.pos.clone())))
        .map(|(i, _)| i)
        .collect()
}

/// (lemma, POS) pairs of every predicate token in the corpus.
pub fn predicate_lexicon(corpus: &Corpus) -> BTreeSet<(String, String)> {
    corpus
        .instances()
        .map(|(s, p)| {
            let t = &s.tokens[p.token_index];
            (t.lemma.to_lowercase(), t.pos.clone())
        })
        .collect()
}

/// Identified argument sets against the gold slots of every predicate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentificationCounts {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
}

impl IdentificationCounts {
    pub fn precision(&self) -> f64 {
        if self.predicted == 0 {
            0.0
        } else {
            self.correct as f64 / self.predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.correct as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

pub fn identification_counts(corpus: &Corpus, cfg: &IdentifyConfig) -> Result<IdentificationCounts> {
    let mut c = IdentificationCounts::default();
    for (s, p) in corpus.instances() {
        let found = identify_arguments(s, p.token_index, cfg)?;
        let gold: BTreeSet<usize> = p.argument_indices().into_iter().collect();
        c.correct += found.intersection(&gold).count();
        c.predicted += found.len();
        c.gold += gold.len();
    }
    Ok(c)
}

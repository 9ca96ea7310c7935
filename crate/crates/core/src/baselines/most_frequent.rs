//! Most frequent role of a (predicate, argument) pair in the labeled verbal
//! data, backing off to the predicate and then to the whole corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RoleId, RoleInventory};
use crate::error::{Error, Result};
use crate::evaluation::{records_with, Label, PredictionRecord};

/// Which table answered a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backoff {
    Pair,
    Predicate,
    Global,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MostFrequent {
    pub roles: RoleInventory,
    /// predicate -> argument lemma -> role
    pub pairs: BTreeMap<String, BTreeMap<String, RoleId>>,
    pub predicates: BTreeMap<String, RoleId>,
    pub global: RoleId,
}

/// Highest count; ties go to the earlier role in the inventory.
fn modal(counts: &[u64]) -> RoleId {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    RoleId(best as u16)
}

impl MostFrequent {
    pub fn fit(verbal: &Corpus) -> Result<Self> {
        let k = verbal.roles().len();
        let mut pairs: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
        let mut preds: BTreeMap<String, Vec<u64>> = BTreeMap::new();
        let mut global = vec![0u64; k];
        for (_, p) in verbal.instances() {
            for a in &p.arguments {
                let Some(r) = a.gold_role else { continue };
                pairs.entry((p.lemma.clone(), a.lemma.clone())).or_insert_with(|| vec![0; k])[r.index()] += 1;
                preds.entry(p.lemma.clone()).or_insert_with(|| vec![0; k])[r.index()] += 1;
                global[r.index()] += 1;
            }
        }
        if global.iter().all(|&c| c == 0) {
            return Err(Error::Evaluation("most-frequent baseline needs labeled arguments".into()));
        }
        Ok(MostFrequent {
            roles: verbal.roles().clone(),
            pairs: pairs.into_iter().fold(BTreeMap::new(), |mut m, ((p, a), c)| {
                m.entry(p).or_insert_with(BTreeMap::new).insert(a, modal(&c));
                m
            }),
            predicates: preds.into_iter().map(|(key, c)| (key, modal(&c))).collect(),
            global: modal(&global),
        })
    }

    pub fn predict(&self, predicate: &str, argument: &str) -> (RoleId, Backoff) {
        if let Some(&r) = self.pairs.get(predicate).and_then(|m| m.get(argument)) {
            (r, Backoff::Pair)
        } else if let Some(&r) = self.predicates.get(predicate) {
            (r, Backoff::Predicate)
        } else {
            (self.global, Backoff::Global)
        }
    }

    /// Records for `corpus`; global fallbacks are flagged.
    pub fn records(&self, corpus: &Corpus) -> Result<Vec<PredictionRecord>> {
        records_with(corpus, |_, p| {
            Ok(p.arguments
                .iter()
                .map(|a| {
                    let (r, b) = self.predict(&p.lemma, &a.lemma);
                    (Label::Role(self.roles.label(r).to_string()), b == Backoff::Global)
                })
                .collect())
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::tests::toy_corpus;

    #[test]
    fn counts_pick_the_modal_role() {
        let c = toy_corpus(&[
            ("eat", "apple", 1),
            ("eat", "apple", 1),
            ("eat", "apple", 0),
            ("eat", "apple", 1),
            ("eat", "man", 0),
        ]);
        let mf = MostFrequent::fit(&c).unwrap();
        assert_eq!(mf.predict("eat", "apple"), (RoleId(1), Backoff::Pair));
    }

    #[test]
    fn backs_off_to_predicate_then_global() {
        let c =
            toy_corpus(&[("eat", "man", 0), ("eat", "dog", 0), ("eat", "apple", 1), ("see", "x", 2), ("see", "y", 2)]);
        let mf = MostFrequent::fit(&c).unwrap();
        assert_eq!(mf.predict("eat", "pie"), (RoleId(0), Backoff::Predicate));
        // global counts tie A0 and A2 at 2; inventory order wins
        assert_eq!(mf.predict("run", "pie"), (RoleId(0), Backoff::Global));
    }

    #[test]
    fn single_instance_applies_everywhere_for_its_pair() {
        let c = toy_corpus(&[("eat", "apple", 2)]);
        let mf = MostFrequent::fit(&c).unwrap();
        assert_eq!(mf.predict("eat", "apple").0, RoleId(2));
        assert_eq!(mf.predict("eat", "other").0, RoleId(2));
    }

    #[test]
    fn ties_break_by_inventory_order() {
        let c = toy_corpus(&[("eat", "apple", 2), ("eat", "apple", 1)]);
        assert_eq!(MostFrequent::fit(&c).unwrap().predict("eat", "apple").0, RoleId(1));
    }

    #[test]
    fn global_fallback_is_flagged_in_records() {
        let train = toy_corpus(&[("eat", "apple", 1)]);
        let test = toy_corpus(&[("run", "apple", 0), ("eat", "apple", 1)]);
        let recs = MostFrequent::fit(&train).unwrap().records(&test).unwrap();
        assert!(recs[0].arguments[0].flagged && !recs[1].arguments[0].flagged);
    }

    #[test]
    fn unlabeled_corpus_is_rejected() {
        let c = toy_corpus(&[("eat", "apple", 1)]).without_labels();
        assert!(MostFrequent::fit(&c).is_err());
    }

    #[test]
    fn tables_round_trip_through_json() {
        let mf = MostFrequent::fit(&toy_corpus(&[("eat", "apple", 1), ("eat", "pear", 2), ("run", "dog", 0)])).unwrap();
        let back: MostFrequent = serde_json::from_str(&serde_json::to_string(&mf).unwrap()).unwrap();
        assert_eq!(back, mf);
    }
}

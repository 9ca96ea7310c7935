//! Pseudo-labeled verbal data: a trained labeler annotates unlabeled verbal
//! sentences, and a seeded sample per target predicate is kept.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    identify_arguments, AnnotatedSentence, ArgumentSlot, Corpus, Domain, IdentifyConfig, PredicateInstance, RoleId,
};
use crate::error::{Error, Result};

/// Anything that assigns one role per argument slot of a predicate instance.
pub trait ArgumentLabeler {
    fn label(&self, sentence: &AnnotatedSentence, predicate: &PredicateInstance) -> Result<Vec<RoleId>>;
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub n_per_pred: usize,
    /// Sentences longer than this are skipped.
    pub max_len: usize,
    /// Recompute argument slots with the identification rules instead of
    /// using the slots already present in the pool.
    pub reidentify: bool,
    pub identify: IdentifyConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig { n_per_pred: 1000, max_len: 45, reidentify: false, identify: IdentifyConfig::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AugmentReport {
    /// predicate -> (available, selected)
    pub per_predicate: BTreeMap<String, (usize, usize)>,
    /// Target predicates with no instance in the pool.
    pub missing: Vec<String>,
    pub skipped_long: usize,
}

/// Labels every pool instance of a target predicate and samples
/// `min(n_per_pred, available)` of them without replacement.
/// Each selected instance becomes its own sentence in the returned labeled corpus.
pub fn pseudo_label_augment(
    labeler: &dyn ArgumentLabeler,
    pool: &Corpus,
    targets: &BTreeSet<String>,
    cfg: &AugmentConfig,
    seed: u64,
) -> Result<(Corpus, AugmentReport)> {
    let mut report = AugmentReport::default();
    let mut candidates: BTreeMap<&str, Vec<(&AnnotatedSentence, PredicateInstance)>> = BTreeMap::new();
    for s in pool.sentences() {
        if s.tokens.len() > cfg.max_len {
            report.skipped_long += 1;
            continue;
        }
        for p in &s.predicates {
            let Some(lemma) = targets.get(&p.lemma) else { continue };
            let mut p = p.clone();
            if cfg.reidentify {
                p.arguments = identify_arguments(s, p.token_index, &cfg.identify)?
                    .into_iter()
                    .map(|i| ArgumentSlot { token_index: i, lemma: s.tokens[i].lemma.to_lowercase(), gold_role: None })
                    .collect();
            }
            if !p.arguments.is_empty() {
                candidates.entry(lemma.as_str()).or_default().push((s, p));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::new();
    for target in targets {
        let pool_for = candidates.get(target.as_str()).map(Vec::as_slice).unwrap_or(&[]);
        if pool_for.is_empty() {
            log::info!("augmentation: predicate `{target}` absent from the unlabeled pool");
            report.missing.push(target.clone());
        }
        let k = cfg.n_per_pred.min(pool_for.len());
        let mut picked = index::sample(&mut rng, pool_for.len(), k).into_vec();
        picked.sort_unstable();
        for i in picked {
            let (s, p) = &pool_for[i];
            let roles = labeler.label(s, p)?;
            if roles.len() != p.arguments.len() {
                return Err(Error::Incompatible(format!(
                    "labeler returned {} roles for {} arguments",
                    roles.len(),
                    p.arguments.len()
                )));
            }
            let mut p = p.clone();
            for (a, r) in p.arguments.iter_mut().zip(roles) {
                if !pool.roles().contains(r) {
                    return Err(Error::Incompatible(format!("labeler emitted role id {} outside inventory", r.0)));
                }
                a.gold_role = Some(r);
            }
            let id = format!("{}#{}", s.id, p.token_index);
            sentences.push(AnnotatedSentence { id, tokens: s.tokens.clone(), predicates: vec![p] });
        }
        report.per_predicate.insert(target.clone(), (pool_for.len(), k));
    }
    Ok((Corpus::new(Domain::Verbal, pool.roles().clone(), sentences)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticConfig};

    struct FirstRole;
    impl ArgumentLabeler for FirstRole {
        fn label(&self, _: &AnnotatedSentence, p: &PredicateInstance) -> Result<Vec<RoleId>> {
            Ok(vec![RoleId(0); p.arguments.len()])
        }
    }

    fn pool(n: usize) -> Corpus {
        let cfg = SyntheticConfig { n_verbal: n, n_nominal: 1, ..SyntheticConfig::small() };
        generate_synthetic(&cfg, 3).unwrap().0.without_labels()
    }

    fn targets(c: &Corpus) -> BTreeSet<String> {
        c.predicate_lemmas()
    }

    #[test]
    fn caps_at_n_per_pred_and_never_repeats() {
        let pool = pool(300);
        let cfg = AugmentConfig { n_per_pred: 20, ..AugmentConfig::default() };
        let (aug, report) = pseudo_label_augment(&FirstRole, &pool, &targets(&pool), &cfg, 1).unwrap();
        for (lemma, (available, selected)) in &report.per_predicate {
            assert!(*available > 20, "{lemma}");
            assert_eq!(*selected, 20);
        }
        let ids: BTreeSet<_> = aug.sentences().iter().map(|s| s.id.clone()).collect();
        assert_eq!(ids.len(), aug.len());
        assert!(aug.instances().all(|(_, p)| p.is_labeled()));
    }

    #[test]
    fn takes_everything_when_pool_is_small() {
        let pool = pool(30);
        let cfg = AugmentConfig { n_per_pred: 1000, ..AugmentConfig::default() };
        let (aug, _) = pseudo_label_augment(&FirstRole, &pool, &targets(&pool), &cfg, 1).unwrap();
        assert_eq!(aug.num_instances(), pool.num_instances());
    }

    #[test]
    fn zero_budget_is_empty() {
        let pool = pool(30);
        let cfg = AugmentConfig { n_per_pred: 0, ..AugmentConfig::default() };
        let (aug, _) = pseudo_label_augment(&FirstRole, &pool, &targets(&pool), &cfg, 1).unwrap();
        assert_eq!(aug.num_instances(), 0);
    }

    #[test]
    fn seeded_selection_is_reproducible() {
        let pool = pool(200);
        let cfg = AugmentConfig { n_per_pred: 5, ..AugmentConfig::default() };
        let run = |seed| pseudo_label_augment(&FirstRole, &pool, &targets(&pool), &cfg, seed).unwrap().0;
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn missing_predicate_is_reported_not_fatal() {
        let pool = pool(30);
        let mut t = targets(&pool);
        t.insert("nonexistent".into());
        let cfg = AugmentConfig { n_per_pred: 3, ..AugmentConfig::default() };
        let (_, report) = pseudo_label_augment(&FirstRole, &pool, &t, &cfg, 1).unwrap();
        assert_eq!(report.missing, vec!["nonexistent".to_string()]);
        assert_eq!(report.per_predicate["nonexistent"], (0, 0));
    }

    #[test]
    fn rejects_roles_outside_inventory() {
        struct Bad;
        impl ArgumentLabeler for Bad {
            fn label(&self, _: &AnnotatedSentence, p: &PredicateInstance) -> Result<Vec<RoleId>> {
                Ok(vec![RoleId(99); p.arguments.len()])
            }
        }
        let pool = pool(10);
        let cfg = AugmentConfig { n_per_pred: 3, ..AugmentConfig::default() };
        assert!(pseudo_label_augment(&Bad, &pool, &targets(&pool), &cfg, 1).is_err());
    }
}

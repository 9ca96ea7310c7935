//! Comparison systems: Most-frequent, Factorization and Direct-transfer
//! role labelers, and the AllA0, SyntFun and Arg2vec clusterers.

mod clusters;
mod direct_transfer;
mod factorization;
mod most_frequent;

pub use clusters::{agglomerate, all_a0, arg2vec, cosine_distance, syntfun, Embeddings};
pub use direct_transfer::{direct_transfer_config, direct_transfer_trainer};
pub use factorization::{
    factorization_examples, factorization_fit, Example, FactorizationConfig, FactorizationGrads, FactorizationParams,
};
pub use most_frequent::{Backoff, MostFrequent};

#[cfg(test)]
pub(crate) mod tests {
    use crate::corpus::{
        AnnotatedSentence, ArgumentSlot, Corpus, Domain, PredicateInstance, RoleId, RoleInventory, Token,
    };

    /// One single-argument sentence per (predicate, argument, role id); the
    /// argument's dependency relation is its role label.
    pub(crate) fn toy_corpus(rows: &[(&str, &str, u16)]) -> Corpus {
        let roles = RoleInventory::first(3).unwrap();
        let sentences = rows
            .iter()
            .enumerate()
            .map(|(i, &(p, a, r))| {
                let tok = |w: &str, head, deprel: &str| Token {
                    surface: w.into(),
                    lemma: w.into(),
                    pos: "NN".into(),
                    head,
                    deprel: deprel.into(),
                };
                AnnotatedSentence {
                    id: format!("t{i}"),
                    tokens: vec![tok(p, None, "ROOT"), tok(a, Some(0), roles.label(RoleId(r)))],
                    predicates: vec![PredicateInstance {
                        token_index: 0,
                        lemma: p.into(),
                        domain: Domain::Verbal,
                        arguments: vec![ArgumentSlot { token_index: 1, lemma: a.into(), gold_role: Some(RoleId(r)) }],
                    }],
                }
            })
            .collect();
        Corpus::new(Domain::Verbal, roles, sentences).unwrap()
    }
}

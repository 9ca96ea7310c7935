//! Corpus data model and the data-preparation pipeline.
//!
//! A [`Corpus`] holds dependency-parsed sentences whose predicate instances
//! all belong to one [`Domain`]. Argument slots carry the lemma used by the
//! selectional-preference decoder and, on labeled data, a gold role from the
//! corpus' [`RoleInventory`].

mod augment;
mod conll;
mod identify;
mod jsonl;
mod preprocess;
mod synthetic;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use augment::{pseudo_label_augment, ArgumentLabeler, AugmentConfig, AugmentReport};
pub use conll::parse_conll;
pub use identify::{
    identification_counts, identify_arguments, identify_predicates, predicate_lexicon, IdentificationCounts,
    IdentifyConfig, Rule3Reading,
};
pub use jsonl::{read_corpus, read_corpus_file, write_corpus, write_corpus_file, CORPUS_VERSION};
pub use preprocess::{
    apply_preposition_headwords, apply_verbalization, filter_corpus, preposition_headword, verbalize, FilterConfig,
    FilterReport, Headword, VerbalizationMap,
};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticOracle};
pub use vocab::{Vocab, UNK};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Verbal,
    Nominal,
}

impl Domain {
    /// Coarse POS prefix test used when splitting CoNLL predicates by type.
    pub fn of_pos(pos: &str) -> Option<Domain> {
        if pos.starts_with("VB") {
            Some(Domain::Verbal)
        } else if pos.starts_with("NN") {
            Some(Domain::Nominal)
        } else {
            None
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Verbal => f.write_str("verbal"),
            Domain::Nominal => f.write_str("nominal"),
        }
    }
}

/// Index into a [`RoleInventory`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleId(pub u16);

impl RoleId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The fixed role labels shared across domains.
pub const STANDARD_ROLES: [&str; 15] = [
    "A0", "A1", "A2", "A3", "A4", "A5", "AM-ADV", "AM-CAU", "AM-DIR", "AM-EXT", "AM-LOC", "AM-MNR", "AM-NEG", "AM-PRD",
    "AM-TMP",
];

/// Ordered set of role labels. Order defines role ids and tie-breaking.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoleInventory {
    labels: Vec<String>,
}

impl RoleInventory {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for l in &labels {
            if l.is_empty() || !seen.insert(l.as_str()) {
                return Err(Error::config(format!("invalid or duplicate role label `{l}`")));
            }
        }
        if labels.len() > u16::MAX as usize {
            return Err(Error::config("role inventory too large"));
        }
        Ok(RoleInventory { labels })
    }

    /// The 15 frequent roles kept in both domains.
    pub fn standard() -> Self {
        RoleInventory { labels: STANDARD_ROLES.iter().map(|s| s.to_string()).collect() }
    }

    /// The first `k` standard roles; used for small synthetic setups.
    pub fn first(k: usize) -> Result<Self> {
        if k == 0 || k > STANDARD_ROLES.len() {
            return Err(Error::config(format!("role count {k} outside 1..=15")));
        }
        Ok(RoleInventory { labels: STANDARD_ROLES[..k].iter().map(|s| s.to_string()).collect() })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<RoleId> {
        self.labels.iter().position(|l| l == label).map(|i| RoleId(i as u16))
    }

    pub fn label(&self, id: RoleId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ids(&self) -> impl Iterator<Item = RoleId> {
        (0..self.labels.len()).map(|i| RoleId(i as u16))
    }

    pub fn contains(&self, id: RoleId) -> bool {
        id.index() < self.labels.len()
    }

    /// Id of `label`, appending it when absent.
    pub(crate) fn intern(&mut self, label: &str) -> RoleId {
        match self.id(label) {
            Some(id) => id,
            None => {
                self.labels.push(label.to_string());
                RoleId((self.labels.len() - 1) as u16)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    /// Zero-based head index, `None` for the root.
    pub head: Option<usize>,
    pub deprel: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArgumentSlot {
    pub token_index: usize,
    pub lemma: String,
    pub gold_role: Option<RoleId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateInstance {
    pub token_index: usize,
    /// Canonical (verbalized) predicate lemma.
    pub lemma: String,
    pub domain: Domain,
    pub arguments: Vec<ArgumentSlot>,
}

impl PredicateInstance {
    pub fn is_labeled(&self) -> bool {
        !self.arguments.is_empty() && self.arguments.iter().all(|a| a.gold_role.is_some())
    }

    pub fn argument_indices(&self) -> Vec<usize> {
        self.arguments.iter().map(|a| a.token_index).collect()
    }

    pub fn gold_roles(&self) -> Option<Vec<RoleId>> {
        self.arguments.iter().map(|a| a.gold_role).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedSentence {
    pub id: String,
    pub tokens: Vec<Token>,
    pub predicates: Vec<PredicateInstance>,
}

impl AnnotatedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Dependents of `index` in sentence order.
    pub fn dependents(&self, index: usize) -> impl Iterator<Item = usize> + '_ {
        self.tokens.iter().enumerate().filter(move |(_, t)| t.head == Some(index)).map(|(i, _)| i)
    }

    /// Tokens sharing `index`'s head, excluding `index` itself. The root has no siblings.
    pub fn siblings(&self, index: usize) -> Vec<usize> {
        match self.tokens[index].head {
            None => Vec::new(),
            Some(h) => self.dependents(h).filter(|&i| i != index).collect(),
        }
    }

    /// Checks the head links form a single-rooted tree.
    pub fn validate_tree(&self) -> std::result::Result<(), String> {
        validate_heads(&self.tokens)
    }

    /// Instance id used in prediction records.
    pub fn instance_id(&self, pred: &PredicateInstance) -> String {
        format!("{}:{}", self.id, pred.token_index)
    }
}

pub(crate) fn validate_heads(tokens: &[Token]) -> std::result::Result<(), String> {
    let n = tokens.len();
    if n == 0 {
        return Ok(());
    }
    let mut roots = 0;
    for (i, t) in tokens.iter().enumerate() {
        match t.head {
            None => roots += 1,
            Some(h) if h >= n => return Err(format!("token {} has head {} outside sentence", i + 1, h + 1)),
            Some(h) if h == i => return Err(format!("token {} is its own head", i + 1)),
            Some(_) => {}
        }
    }
    if roots != 1 {
        return Err(format!("expected exactly one root, found {roots}"));
    }
    // Walk up from every token; a path longer than n means a cycle.
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while let Some(h) = tokens[cur].head {
            cur = h;
            steps += 1;
            if steps > n {
                return Err(format!("cyclic head links through token {}", start + 1));
            }
        }
    }
    Ok(())
}

/// Sentences of a single domain with a shared role inventory and argument-lemma vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    domain: Domain,
    roles: RoleInventory,
    sentences: Vec<AnnotatedSentence>,
    lemma_vocab: Vocab,
}

impl Corpus {
    pub fn new(domain: Domain, roles: RoleInventory, sentences: Vec<AnnotatedSentence>) -> Result<Self> {
        let lemma_vocab = Vocab::from_tokens(
            sentences
                .iter()
                .flat_map(|s| s.predicates.iter())
                .flat_map(|p| p.arguments.iter())
                .map(|a| a.lemma.as_str()),
        );
        let corpus = Corpus { domain, roles, sentences, lemma_vocab };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn empty(domain: Domain, roles: RoleInventory) -> Self {
        Corpus { domain, roles, sentences: Vec::new(), lemma_vocab: Vocab::new() }
    }

    pub(crate) fn with_vocab(
        domain: Domain,
        roles: RoleInventory,
        sentences: Vec<AnnotatedSentence>,
        lemma_vocab: Vocab,
    ) -> Result<Self> {
        let corpus = Corpus { domain, roles, sentences, lemma_vocab };
        corpus.validate()?;
        Ok(corpus)
    }

    fn validate(&self) -> Result<()> {
        for s in &self.sentences {
            for p in &s.predicates {
                if p.token_index >= s.tokens.len() {
                    return Err(Error::Index { index: p.token_index, len: s.tokens.len() });
                }
                let mut seen = BTreeSet::new();
                for a in &p.arguments {
                    if a.token_index >= s.tokens.len() {
                        return Err(Error::Index { index: a.token_index, len: s.tokens.len() });
                    }
                    if !seen.insert(a.token_index) {
                        return Err(Error::Incompatible(format!(
                            "duplicate argument index {} in {}",
                            a.token_index,
                            s.instance_id(p)
                        )));
                    }
                    if a.lemma.is_empty() {
                        return Err(Error::Incompatible(format!("empty argument lemma in {}", s.instance_id(p))));
                    }
                    if self.lemma_vocab.id(&a.lemma).is_none() {
                        return Err(Error::Vocabulary { kind: "argument lemma", value: a.lemma.clone() });
                    }
                    if let Some(r) = a.gold_role {
                        if !self.roles.contains(r) {
                            return Err(Error::Incompatible(format!("role id {} outside inventory", r.0)));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn roles(&self) -> &RoleInventory {
        &self.roles
    }

    pub fn sentences(&self) -> &[AnnotatedSentence] {
        &self.sentences
    }

    pub fn into_sentences(self) -> Vec<AnnotatedSentence> {
        self.sentences
    }

    pub fn lemma_vocab(&self) -> &Vocab {
        &self.lemma_vocab
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// All (sentence, predicate) pairs in corpus order.
    pub fn instances(&self) -> impl Iterator<Item = (&AnnotatedSentence, &PredicateInstance)> {
        self.sentences.iter().flat_map(|s| s.predicates.iter().map(move |p| (s, p)))
    }

    pub fn num_instances(&self) -> usize {
        self.sentences.iter().map(|s| s.predicates.len()).sum()
    }

    pub fn num_arguments(&self) -> usize {
        self.instances().map(|(_, p)| p.arguments.len()).sum()
    }

    pub fn predicate_lemmas(&self) -> BTreeSet<String> {
        self.instances().map(|(_, p)| p.lemma.clone()).collect()
    }

    /// Copy with every gold role removed.
    pub fn without_labels(&self) -> Corpus {
        let mut sentences = self.sentences.clone();
        for s in &mut sentences {
            for p in &mut s.predicates {
                for a in &mut p.arguments {
                    a.gold_role = None;
                }
            }
        }
        Corpus { sentences, ..self.clone() }
    }

    /// Concatenation of two corpora of the same domain and inventory.
    pub fn concat(&self, other: &Corpus) -> Result<Corpus> {
        if self.domain != other.domain || self.roles != other.roles {
            return Err(Error::Incompatible("cannot concatenate corpora with different domain or roles".into()));
        }
        let mut sentences = self.sentences.clone();
        sentences.extend(other.sentences.iter().cloned());
        Corpus::new(self.domain, self.roles.clone(), sentences)
    }

    /// Remaps gold roles into `target` by label; slots whose label is missing from
    /// `target` are dropped and instances left without arguments are removed.
    pub fn remap_roles(&self, target: &RoleInventory) -> Result<Corpus> {
        let mut sentences = Vec::with_capacity(self.sentences.len());
        for s in &self.sentences {
            let mut s = s.clone();
            for p in &mut s.predicates {
                p.arguments.retain_mut(|a| match a.gold_role {
                    None => true,
                    Some(r) => match target.id(self.roles.label(r)) {
                        Some(t) => {
                            a.gold_role = Some(t);
                            true
                        }
                        None => false,
                    },
                });
            }
            s.predicates.retain(|p| !p.arguments.is_empty());
            sentences.push(s);
        }
        Corpus::new(self.domain, target.clone(), sentences)
    }
}

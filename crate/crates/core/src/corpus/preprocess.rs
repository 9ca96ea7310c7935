use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, Corpus, RoleInventory};
use crate::error::{Error, Result};

/// Noun lemma -> verb lemma.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerbalizationMap {
    entries: BTreeMap<String, String>,
}

impl VerbalizationMap {
    pub fn from_pairs<K: Into<String>, V: Into<String>>(pairs: impl IntoIterator<Item = (K, V)>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, v) in pairs {
            let (k, v) = (k.into(), v.into());
            if k.is_empty() || v.is_empty() {
                return Err(Error::config(format!("empty verbalization entry `{k}` -> `{v}`")));
            }
            entries.insert(k, v);
        }
        Ok(VerbalizationMap { entries })
    }

    /// Two-column tab-separated text; blank lines and `#` comments are skipped.
    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 2 || cols[0].is_empty() || cols[1].is_empty() {
                return Err(Error::Parse { line: i + 1, message: "expected `noun<TAB>verb`".into() });
            }
            pairs.push((cols[0].to_string(), cols[1].to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn get(&self, noun: &str) -> Option<&str> {
        self.entries.get(noun).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn verbalize(lemma: &str, map: &VerbalizationMap) -> String {
    map.get(lemma).unwrap_or(lemma).to_string()
}

/// Rewrites every predicate lemma through the verbalization map.
pub fn apply_verbalization(corpus: &Corpus, map: &VerbalizationMap) -> Result<Corpus> {
    let mut sentences = corpus.sentences().to_vec();
    for s in &mut sentences {
        for p in &mut s.predicates {
            p.lemma = verbalize(&p.lemma, map);
        }
    }
    Corpus::new(corpus.domain(), corpus.roles().clone(), sentences)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Headword {
    pub index: usize,
    /// Set when the argument is a preposition with no dependents.
    pub unresolved: bool,
}

/// Replaces a prepositional argument by the head of the noun phrase it governs:
/// the rightmost nominal dependent of the preposition, else its rightmost dependent.
pub fn preposition_headword(
    sentence: &AnnotatedSentence,
    arg_index: usize,
    prep_tags: &BTreeSet<String>,
    nominal_prefixes: &[String],
) -> Result<Headword> {
    let token = sentence.tokens.get(arg_index).ok_or(Error::Index { index: arg_index, len: sentence.tokens.len() })?;
    if !prep_tags.contains(&token.pos) {
        return Ok(Headword { index: arg_index, unresolved: false });
    }
    let deps: Vec<usize> = sentence.dependents(arg_index).collect();
    let Some(&last) = deps.last() else {
        return Ok(Headword { index: arg_index, unresolved: true });
    };
    let nominal = deps
        .iter()
        .rev()
        .copied()
        .find(|&d| nominal_prefixes.iter().any(|p| sentence.tokens[d].pos.starts_with(p.as_str())));
    Ok(Headword { index: nominal.unwrap_or(last), unresolved: false })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub roles: RoleInventory,
    pub min_nominal: usize,
    pub min_verbal: usize,
    pub prep_tags: BTreeSet<String>,
    pub nominal_prefixes: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            roles: RoleInventory::standard(),
            min_nominal: 20,
            min_verbal: 10,
            prep_tags: ["IN", "TO"].iter().map(|s| s.to_string()).collect(),
            nominal_prefixes: ["NN", "PRP", "CD", "WP"].iter().map(|s| s.to_string()).collect(),
        }
    }
}

/// Rewrites prepositional argument slots to their noun-phrase headwords.
/// Returns the new corpus and the ids of instances with an unresolved preposition.
pub fn apply_preposition_headwords(corpus: &Corpus, cfg: &FilterConfig) -> Result<(Corpus, Vec<String>)> {
    let mut flagged = Vec::new();
    let mut sentences = corpus.sentences().to_vec();
    for s in &mut sentences {
        let original = s.clone();
        for p in &mut s.predicates {
            let taken: BTreeSet<usize> = p.arguments.iter().map(|a| a.token_index).collect();
            let mut unresolved = false;
            for a in &mut p.arguments {
                let h = preposition_headword(&original, a.token_index, &cfg.prep_tags, &cfg.nominal_prefixes)?;
                unresolved |= h.unresolved;
                if h.index != a.token_index && !taken.contains(&h.index) {
                    a.token_index = h.index;
                    a.lemma = original.tokens[h.index].lemma.to_lowercase();
                }
            }
            if unresolved {
                flagged.push(original.instance_id(p));
            }
        }
    }
    Ok((Corpus::new(corpus.domain(), corpus.roles().clone(), sentences)?, flagged))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub kept_predicates: Vec<String>,
    pub dropped_slots_verbal: usize,
    pub dropped_slots_nominal: usize,
    pub dropped_instances_verbal: usize,
    pub dropped_instances_nominal: usize,
}

/// Keeps predicates frequent in both domains and roles from the configured inventory.
pub fn filter_corpus(verbal: &Corpus, nominal: &Corpus, cfg: &FilterConfig) -> Result<(Corpus, Corpus, FilterReport)> {
    let v = verbal.remap_roles(&cfg.roles)?;
    let n = nominal.remap_roles(&cfg.roles)?;

    let counts = |c: &Corpus| {
        let mut m: BTreeMap<String, usize> = BTreeMap::new();
        for (_, p) in c.instances() {
            *m.entry(p.lemma.clone()).or_default() += 1;
        }
        m
    };
    let (cv, cn) = (counts(&v), counts(&n));
    let kept: BTreeSet<String> = cn
        .iter()
        .filter(|(lemma, &count_n)| {
            let count_v = cv.get(*lemma).copied().unwrap_or(0);
            count_n >= cfg.min_nominal.max(1) && count_v >= cfg.min_verbal.max(1)
        })
        .map(|(l, _)| l.clone())
        .collect();
    if kept.is_empty() {
        return Err(Error::NoSharedPredicates);
    }

    let restrict = |c: &Corpus| -> Result<Corpus> {
        let mut sentences = Vec::new();
        for s in c.sentences() {
            let mut s = s.clone();
            s.predicates.retain(|p| kept.contains(&p.lemma));
            if !s.predicates.is_empty() {
                sentences.push(s);
            }
        }
        Corpus::new(c.domain(), cfg.roles.clone(), sentences)
    };
    let (fv, fn_) = (restrict(&v)?, restrict(&n)?);
    let report = FilterReport {
        kept_predicates: kept.into_iter().collect(),
        dropped_slots_verbal: verbal.num_arguments() - fv.num_arguments(),
        dropped_slots_nominal: nominal.num_arguments() - fn_.num_arguments(),
        dropped_instances_verbal: verbal.num_instances() - fv.num_instances(),
        dropped_instances_nominal: nominal.num_instances() - fn_.num_instances(),
    };
    Ok((fv, fn_, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArgumentSlot, Domain, PredicateInstance, RoleId, Token};

    fn tok(surface: &str, pos: &str, head: Option<usize>, deprel: &str) -> Token {
        Token { surface: surface.into(), lemma: surface.to_lowercase(), pos: pos.into(), head, deprel: deprel.into() }
    }

    #[test]
    fn verbalize_examples() {
        let map = VerbalizationMap::parse_tsv("acquisition\tacquire\nearning\tearn\n# comment\n").unwrap();
        assert_eq!(verbalize("acquisition", &map), "acquire");
        assert_eq!(verbalize("earning", &map), "earn");
        assert_eq!(verbalize("zebra", &map), "zebra");
    }

    #[test]
    fn verbalization_tsv_rejects_bad_rows() {
        assert!(VerbalizationMap::parse_tsv("a\tb\tc\n").is_err());
        assert!(VerbalizationMap::parse_tsv("a\t\n").is_err());
    }

    fn library_sentence() -> AnnotatedSentence {
        // He read at the library
        AnnotatedSentence {
            id: "t".into(),
            tokens: vec![
                tok("He", "PRP", Some(1), "SBJ"),
                tok("read", "VBD", None, "ROOT"),
                tok("at", "IN", Some(1), "LOC"),
                tok("the", "DT", Some(4), "NMOD"),
                tok("library", "NN", Some(2), "PMOD"),
            ],
            predicates: vec![],
        }
    }

    fn cfg() -> FilterConfig {
        FilterConfig::default()
    }

    #[test]
    fn preposition_replaced_by_noun_head() {
        let s = library_sentence();
        let c = cfg();
        let h = preposition_headword(&s, 2, &c.prep_tags, &c.nominal_prefixes).unwrap();
        assert_eq!(h, Headword { index: 4, unresolved: false });
        // non-preposition is unchanged
        let h = preposition_headword(&s, 0, &c.prep_tags, &c.nominal_prefixes).unwrap();
        assert_eq!(h, Headword { index: 0, unresolved: false });
    }

    #[test]
    fn rightmost_nominal_dependent_wins() {
        // "for books and magazines" flattened: books, magazines both depend on `for`
        let s = AnnotatedSentence {
            id: "t".into(),
            tokens: vec![
                tok("paid", "VBD", None, "ROOT"),
                tok("for", "IN", Some(0), "ADV"),
                tok("books", "NNS", Some(1), "PMOD"),
                tok("and", "CC", Some(1), "COORD"),
                tok("magazines", "NNS", Some(1), "PMOD"),
                tok("quickly", "RB", Some(1), "ADV"),
            ],
            predicates: vec![],
        };
        let c = cfg();
        let h = preposition_headword(&s, 1, &c.prep_tags, &c.nominal_prefixes).unwrap();
        assert_eq!(h.index, 4);
    }

    #[test]
    fn bare_preposition_is_flagged() {
        let s = AnnotatedSentence {
            id: "t".into(),
            tokens: vec![tok("came", "VBD", None, "ROOT"), tok("in", "IN", Some(0), "DIR")],
            predicates: vec![],
        };
        let c = cfg();
        let h = preposition_headword(&s, 1, &c.prep_tags, &c.nominal_prefixes).unwrap();
        assert_eq!(h, Headword { index: 1, unresolved: true });
    }

    fn instance(lemma: &str, domain: Domain, roles: &[u16]) -> AnnotatedSentence {
        let mut tokens = vec![tok("p", "VB", None, "ROOT")];
        let mut arguments = Vec::new();
        for (i, &r) in roles.iter().enumerate() {
            tokens.push(tok(&format!("w{i}"), "NN", Some(0), "OBJ"));
            arguments.push(ArgumentSlot { token_index: i + 1, lemma: format!("w{i}"), gold_role: Some(RoleId(r)) });
        }
        AnnotatedSentence {
            id: "x".into(),
            tokens,
            predicates: vec![PredicateInstance { token_index: 0, lemma: lemma.into(), domain, arguments }],
        }
    }

    fn corpus(domain: Domain, roles: &RoleInventory, spec: &[(&str, usize, &[u16])]) -> Corpus {
        let mut sentences = Vec::new();
        for (lemma, n, r) in spec {
            for _ in 0..*n {
                sentences.push(instance(lemma, domain, r));
            }
        }
        Corpus::new(domain, roles.clone(), sentences).unwrap()
    }

    #[test]
    fn filter_thresholds_and_roles() {
        let mut roles = RoleInventory::standard();
        let rec = roles.intern("AM-REC");
        let v =
            corpus(Domain::Verbal, &roles, &[("acquire", 12, &[0, 1]), ("only_verbal", 30, &[0]), ("rare", 3, &[0])]);
        let n = corpus(
            Domain::Nominal,
            &roles,
            &[("acquire", 24, &[1]), ("acquire", 1, &[0, rec.0]), ("rare", 30, &[0]), ("reflexive", 25, &[rec.0])],
        );
        let (fv, fn_, report) = filter_corpus(&v, &n, &FilterConfig::default()).unwrap();
        assert_eq!(report.kept_predicates, vec!["acquire".to_string()]);
        assert_eq!(fv.num_instances(), 12);
        assert_eq!(fn_.num_instances(), 25);
        // the AM-REC slot is dropped, its instance kept through the remaining A0 slot
        assert_eq!(fn_.num_arguments(), 25);
        assert_eq!(fn_.roles(), &RoleInventory::standard());
        for c in [&fv, &fn_] {
            for (_, p) in c.instances() {
                assert_eq!(p.lemma, "acquire");
            }
        }
    }

    #[test]
    fn no_shared_predicates_is_an_error() {
        let roles = RoleInventory::standard();
        let v = corpus(Domain::Verbal, &roles, &[("a", 30, &[0])]);
        let n = corpus(Domain::Nominal, &roles, &[("b", 30, &[0])]);
        assert!(matches!(filter_corpus(&v, &n, &FilterConfig::default()), Err(Error::NoSharedPredicates)));
    }
}

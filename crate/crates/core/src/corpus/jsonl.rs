//! Line-delimited corpus format: one header record, then one record per sentence.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, ArgumentSlot, Corpus, Domain, PredicateInstance, RoleInventory, Token, Vocab};
use crate::error::{Error, Result};

pub const CORPUS_VERSION: u32 = 1;
const FORMAT: &str = "srl-transfer-corpus";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    domain: Domain,
    roles: RoleInventory,
    lemma_vocab: Vocab,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    id: String,
    tokens: Vec<Token>,
    predicates: Vec<PredicateRecord>,
}

#[derive(Serialize, Deserialize)]
struct PredicateRecord {
    token: usize,
    lemma: String,
    domain: Domain,
    arguments: Vec<ArgumentRecord>,
}

#[derive(Serialize, Deserialize)]
struct ArgumentRecord {
    token: usize,
    lemma: String,
    role: Option<String>,
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    let header = Header {
        format: FORMAT.to_string(),
        version: CORPUS_VERSION,
        domain: corpus.domain(),
        roles: corpus.roles().clone(),
        lemma_vocab: corpus.lemma_vocab().clone(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for s in corpus.sentences() {
        let rec = SentenceRecord {
            id: s.id.clone(),
            tokens: s.tokens.clone(),
            predicates: s
                .predicates
                .iter()
                .map(|p| PredicateRecord {
                    token: p.token_index,
                    lemma: p.lemma.clone(),
                    domain: p.domain,
                    arguments: p
                        .arguments
                        .iter()
                        .map(|a| ArgumentRecord {
                            token: a.token_index,
                            lemma: a.lemma.clone(),
                            role: a.gold_role.map(|r| corpus.roles().label(r).to_string()),
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Corpus> {
    let mut lines = input.lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            None => return Err(Error::Parse { line: 1, message: "missing corpus header".into() }),
            Some((_, l)) => {
                let l = l?;
                if l.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&l).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
            }
        }
    };
    if header.format != FORMAT {
        return Err(Error::Parse { line: 1, message: format!("unexpected format `{}`", header.format) });
    }
    if header.version != CORPUS_VERSION {
        return Err(Error::Parse { line: 1, message: format!("unsupported corpus version {}", header.version) });
    }
    let roles = header.roles;
    let mut sentences = Vec::new();
    for (i, l) in lines {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let line = i + 1;
        let rec: SentenceRecord =
            serde_json::from_str(&l).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        let mut predicates = Vec::with_capacity(rec.predicates.len());
        for p in rec.predicates {
            let mut arguments = Vec::with_capacity(p.arguments.len());
            for a in p.arguments {
                let gold_role = match a.role {
                    None => None,
                    Some(label) => Some(roles.id(&label).ok_or_else(|| Error::Parse {
                        line,
                        message: format!("role `{label}` not in header inventory"),
                    })?),
                };
                arguments.push(ArgumentSlot { token_index: a.token, lemma: a.lemma, gold_role });
            }
            predicates.push(PredicateInstance { token_index: p.token, lemma: p.lemma, domain: p.domain, arguments });
        }
        let sentence = AnnotatedSentence { id: rec.id, tokens: rec.tokens, predicates };
        sentence.validate_tree().map_err(|message| Error::Structure { line, message })?;
        sentences.push(sentence);
    }
    Corpus::with_vocab(header.domain, roles, sentences, header.lemma_vocab)
}

pub fn write_corpus_file(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    write_corpus(corpus, BufWriter::new(File::create(path)?))
}

pub fn read_corpus_file(path: impl AsRef<Path>) -> Result<Corpus> {
    read_corpus(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, parse_conll, SyntheticConfig};
    use proptest::prelude::*;

    fn round_trip(c: &Corpus) -> Corpus {
        let mut buf = Vec::new();
        write_corpus(c, &mut buf).unwrap();
        read_corpus(buf.as_slice()).unwrap()
    }

    #[test]
    fn conll_corpus_round_trips() {
        let c = parse_conll(super::super::conll::tests::MINIMAL, Domain::Verbal).unwrap();
        assert_eq!(round_trip(&c), c);
    }

    #[test]
    fn rejects_future_version() {
        let c = Corpus::empty(Domain::Verbal, RoleInventory::standard());
        let mut buf = Vec::new();
        write_corpus(&c, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"version\":1", "\"version\":99");
        assert!(matches!(read_corpus(text.as_bytes()), Err(Error::Parse { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn synthetic_corpora_round_trip(seed in 0u64..10_000, n in 1usize..40) {
            let cfg = SyntheticConfig { n_verbal: n, n_nominal: n, ..SyntheticConfig::small() };
            let (v, nom, _) = generate_synthetic(&cfg, seed).unwrap();
            prop_assert_eq!(round_trip(&v), v);
            prop_assert_eq!(round_trip(&nom), nom);
        }
    }
}

//! CoNLL-2009 ingestion.
//!
//! Columns: ID FORM LEMMA PLEMMA POS PPOS FEAT PFEAT HEAD PHEAD DEPREL PDEPREL
//! FILLPRED PRED APRED1..APREDn, one APRED column per filled predicate. Gold
//! columns (LEMMA, POS, HEAD, DEPREL) are used. Lines starting with `#` are
//! comments.

use super::{validate_heads, AnnotatedSentence, ArgumentSlot, Corpus, Domain, PredicateInstance, RoleInventory, Token};
use crate::error::{Error, Result};

const FIXED_COLUMNS: usize = 14;

/// Parses CoNLL-2009 text, keeping the predicates of `domain`.
pub fn parse_conll(text: &str, domain: Domain) -> Result<Corpus> {
    let mut roles = RoleInventory::standard();
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, Vec<&str>)> = Vec::new();

    let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    for (line_no, line) in lines.chain(std::iter::once((0, ""))) {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.trim().is_empty() {
            if !block.is_empty() {
                let id = format!("s{}", sentences.len());
                sentences.push(parse_block(&block, id, domain, &mut roles)?);
                block.clear();
            }
            continue;
        }
        block.push((line_no, trimmed.split('\t').collect()));
    }
    Corpus::new(domain, roles, sentences)
}

fn parse_block(
    block: &[(usize, Vec<&str>)],
    id: String,
    domain: Domain,
    roles: &mut RoleInventory,
) -> Result<AnnotatedSentence> {
    let first_line = block[0].0;
    for (line, cols) in block {
        if cols.len() < FIXED_COLUMNS {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected at least {FIXED_COLUMNS} columns, found {}", cols.len()),
            });
        }
    }
    let n_preds = block.iter().filter(|(_, c)| c[12] == "Y").count();
    let expected = FIXED_COLUMNS + n_preds;
    for (line, cols) in block {
        if cols.len() != expected {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {expected} columns for {n_preds} predicates, found {}", cols.len()),
            });
        }
    }

    let mut tokens = Vec::with_capacity(block.len());
    for (pos, (line, cols)) in block.iter().enumerate() {
        let tid: usize = cols[0]
            .parse()
            .map_err(|_| Error::Parse { line: *line, message: format!("bad token id `{}`", cols[0]) })?;
        if tid != pos + 1 {
            return Err(Error::Parse { line: *line, message: format!("token id {tid}, expected {}", pos + 1) });
        }
        let head: usize =
            cols[8].parse().map_err(|_| Error::Parse { line: *line, message: format!("bad head `{}`", cols[8]) })?;
        tokens.push(Token {
            surface: cols[1].to_string(),
            lemma: cols[2].to_string(),
            pos: cols[4].to_string(),
            head: if head == 0 { None } else { Some(head - 1) },
            deprel: cols[10].to_string(),
        });
    }
    validate_heads(&tokens).map_err(|message| Error::Structure { line: first_line, message })?;

    let mut predicates = Vec::new();
    let pred_tokens = block.iter().enumerate().filter(|(_, (_, c))| c[12] == "Y").map(|(i, _)| i);
    for (k, pi) in pred_tokens.enumerate() {
        let Some(pred_domain) = Domain::of_pos(&tokens[pi].pos) else { continue };
        if pred_domain != domain {
            continue;
        }
        let pred_col = block[pi].1[13];
        let lemma = if pred_col == "_" { tokens[pi].lemma.clone() } else { strip_sense(pred_col).to_string() };
        let mut arguments = Vec::new();
        for (ti, (_, cols)) in block.iter().enumerate() {
            let label = cols[FIXED_COLUMNS + k];
            if label == "_" {
                continue;
            }
            arguments.push(ArgumentSlot {
                token_index: ti,
                lemma: tokens[ti].lemma.to_lowercase(),
                gold_role: Some(roles.intern(label)),
            });
        }
        predicates.push(PredicateInstance { token_index: pi, lemma: lemma.to_lowercase(), domain, arguments });
    }
    Ok(AnnotatedSentence { id, tokens, predicates })
}

/// `acquire.01` -> `acquire`; predicate senses are ignored.
fn strip_sense(pred: &str) -> &str {
    match pred.rsplit_once('.') {
        Some((lemma, sense)) if !lemma.is_empty() && !sense.is_empty() && sense.chars().all(|c| c.is_ascii_digit()) => {
            lemma
        }
        _ => pred,
    }
}

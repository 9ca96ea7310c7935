//! Prediction records: one line-delimited JSON record per predicate instance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, Corpus, PredicateInstance};
use crate::error::{Error, Result};
use crate::model::Model;

/// A predicted role label or an induced cluster id.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Role(String),
    Cluster(usize),
}

impl Label {
    /// The key clustering metrics group by.
    pub fn key(&self) -> String {
        match self {
            Label::Role(r) => r.clone(),
            Label::Cluster(c) => format!("#{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgumentPrediction {
    pub token: usize,
    pub lemma: String,
    pub predicted: Label,
    pub gold: Option<String>,
    /// Set when a baseline fell back to a default (unseen predicate, missing embedding).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub instance: String,
    pub predicate: String,
    pub predicate_token: usize,
    pub arguments: Vec<ArgumentPrediction>,
}

impl PredictionRecord {
    pub fn is_self_loop(&self, arg: &ArgumentPrediction) -> bool {
        arg.token == self.predicate_token
    }
}

/// Builds one record per instance of `corpus`; `predict` returns a label and
/// a fallback flag per argument.
pub fn records_with<F>(corpus: &Corpus, mut predict: F) -> Result<Vec<PredictionRecord>>
where
    F: FnMut(&AnnotatedSentence, &PredicateInstance) -> Result<Vec<(Label, bool)>>,
{
    let mut out = Vec::with_capacity(corpus.num_instances());
    for (s, p) in corpus.instances() {
        let labels = predict(s, p)?;
        if labels.len() != p.arguments.len() {
            return Err(Error::Evaluation(format!(
                "{} predictions for {} arguments in {}",
                labels.len(),
                p.arguments.len(),
                s.instance_id(p)
            )));
        }
        let arguments = p
            .arguments
            .iter()
            .zip(labels)
            .map(|(a, (predicted, flagged))| ArgumentPrediction {
                token: a.token_index,
                lemma: a.lemma.clone(),
                predicted,
                gold: a.gold_role.map(|r| corpus.roles().label(r).to_string()),
                flagged,
            })
            .collect();
        out.push(PredictionRecord {
            instance: s.instance_id(p),
            predicate: p.lemma.clone(),
            predicate_token: p.token_index,
            arguments,
        });
    }
    Ok(out)
}

/// Labels every instance of `corpus` with the model's role argmax.
pub fn model_records(model: &Model, corpus: &Corpus) -> Result<Vec<PredictionRecord>> {
    records_with(corpus, |s, p| {
        let inst = model.prepare_instance(s, p);
        Ok(model.predict(&inst)?.into_iter().map(|r| (Label::Role(model.roles.label(r).to_string()), false)).collect())
    })
}

pub fn write_predictions<W: Write>(records: &[PredictionRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_predictions_file(records: &[PredictionRecord], path: &Path) -> Result<()> {
    write_predictions(records, BufWriter::new(File::create(path)?))
}

pub fn read_predictions_file(path: &Path) -> Result<Vec<PredictionRecord>> {
    read_predictions(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticConfig};

    #[test]
    fn records_round_trip_through_text() {
        let (v, _, _) = generate_synthetic(&SyntheticConfig::small(), 1).unwrap();
        let recs = records_with(&v, |_, p| {
            Ok(p.arguments.iter().enumerate().map(|(i, _)| (Label::Cluster(i), i == 0)).collect())
        })
        .unwrap();
        assert_eq!(recs.len(), v.num_instances());
        let mut buf = Vec::new();
        write_predictions(&recs, &mut buf).unwrap();
        assert_eq!(read_predictions(&buf[..]).unwrap(), recs);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().next().unwrap().contains("\"cluster\":0"));
    }

    #[test]
    fn prediction_count_must_match_arguments() {
        let (v, _, _) = generate_synthetic(&SyntheticConfig::small(), 1).unwrap();
        assert!(records_with(&v, |_, _| Ok(vec![])).is_err());
    }

    #[test]
    fn model_records_carry_gold_and_roles() {
        let (m, v, _) = crate::model::tests::tiny_model(2);
        let recs = model_records(&m, &v).unwrap();
        for (r, (_, p)) in recs.iter().zip(v.instances()) {
            assert_eq!(r.arguments.len(), p.arguments.len());
            for a in &r.arguments {
                assert!(a.gold.is_some());
                assert!(matches!(&a.predicted, Label::Role(l) if v.roles().id(l).is_some()));
            }
        }
    }

    #[test]
    fn bad_line_reports_its_number() {
        let err = read_predictions(&b"\n{\"x\":1}\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}

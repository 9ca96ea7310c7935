//! Supervised role-classification scores over prediction records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::records::{Label, PredictionRecord};
use crate::error::{Error, Result};

pub const ADJUNCT_PREFIX: &str = "AM-";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub correct: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let (precision, recall) = (ratio(correct, predicted), ratio(correct, gold));
        Prf { correct, predicted, gold, precision, recall, f1: f1(precision, recall) }
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SupervisedConfig {
    /// Skip arguments whose token is the predicate itself.
    pub drop_self_loops: bool,
    /// Report "All" as the unweighted mean over roles instead of micro F1.
    pub macro_all: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupervisedReport {
    pub config: SupervisedConfig,
    pub arguments: usize,
    pub self_loops_dropped: usize,
    pub accuracy: f64,
    pub per_role: BTreeMap<String, Prf>,
    /// Counts of every `AM-*` role summed, then scored.
    pub adjuncts: Prf,
    pub all: Prf,
}

pub fn supervised_scores(records: &[PredictionRecord], cfg: SupervisedConfig) -> Result<SupervisedReport> {
    // per label: (correct, predicted, gold)
    let mut counts: BTreeMap<String, (usize, usize, usize)> = BTreeMap::new();
    let (mut n, mut correct, mut dropped) = (0usize, 0usize, 0usize);
    for rec in records {
        for a in &rec.arguments {
            if cfg.drop_self_loops && rec.is_self_loop(a) {
                dropped += 1;
                continue;
            }
            let gold = a.gold.as_ref().ok_or_else(|| Error::Evaluation(format!("no gold role in {}", rec.instance)))?;
            let pred = match &a.predicted {
                Label::Role(r) => r,
                Label::Cluster(_) => {
                    return Err(Error::Evaluation(format!(
                        "cluster prediction in {}; use clustering scores",
                        rec.instance
                    )))
                }
            };
            n += 1;
            counts.entry(pred.clone()).or_default().1 += 1;
            counts.entry(gold.clone()).or_default().2 += 1;
            if pred == gold {
                correct += 1;
                counts.get_mut(gold).expect("inserted above").0 += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::Evaluation("no arguments to score".into()));
    }
    let per_role: BTreeMap<String, Prf> =
        counts.iter().map(|(l, &(c, p, g))| (l.clone(), Prf::from_counts(c, p, g))).collect();
    let adj = counts
        .iter()
        .filter(|(l, _)| l.starts_with(ADJUNCT_PREFIX))
        .fold((0, 0, 0), |acc, (_, &(c, p, g))| (acc.0 + c, acc.1 + p, acc.2 + g));
    let all = if cfg.macro_all {
        let k = per_role.len() as f64;
        let mean = |f: fn(&Prf) -> f64| per_role.values().map(f).sum::<f64>() / k;
        Prf {
            correct,
            predicted: n,
            gold: n,
            precision: mean(|x| x.precision),
            recall: mean(|x| x.recall),
            f1: mean(|x| x.f1),
        }
    } else {
        Prf::from_counts(correct, n, n)
    };
    Ok(SupervisedReport {
        config: cfg,
        arguments: n,
        self_loops_dropped: dropped,
        accuracy: correct as f64 / n as f64,
        per_role,
        adjuncts: Prf::from_counts(adj.0, adj.1, adj.2),
        all,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::evaluation::records::ArgumentPrediction;

    pub(crate) fn record(id: &str, pairs: &[(&str, &str)]) -> PredictionRecord {
        PredictionRecord {
            instance: id.into(),
            predicate: "p".into(),
            predicate_token: 0,
            arguments: pairs
                .iter()
                .enumerate()
                .map(|(i, (p, g))| ArgumentPrediction {
                    token: i + 1,
                    lemma: format!("l{i}"),
                    predicted: Label::Role(p.to_string()),
                    gold: Some(g.to_string()),
                    flagged: false,
                })
                .collect(),
        }
    }

    #[test]
    fn perfect_predictions_score_one() {
        let r =
            supervised_scores(&[record("a", &[("A0", "A0"), ("A1", "A1"), ("AM-TMP", "AM-TMP")])], Default::default())
                .unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.all.f1, 1.0);
        assert!(r.per_role.values().all(|p| p.f1 == 1.0));
        assert_eq!(r.adjuncts.f1, 1.0);
    }

    #[test]
    fn two_of_three() {
        let r =
            supervised_scores(&[record("a", &[("A0", "A0"), ("A1", "A1"), ("A0", "A2")])], Default::default()).unwrap();
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hand_built_a0_f1() {
        // A0 predicted 3 times (2 right) and gold 4 times: P = 2/3, R = 1/2
        let pairs = [("A0", "A0"), ("A0", "A0"), ("A0", "A1"), ("A1", "A0"), ("A2", "A0"), ("A1", "A1")];
        let r = supervised_scores(&[record("a", &pairs)], Default::default()).unwrap();
        let a0 = &r.per_role["A0"];
        assert!((a0.precision - 2.0 / 3.0).abs() < 1e-15 && (a0.recall - 0.5).abs() < 1e-15);
        assert!((a0.f1 - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn adjuncts_are_micro_aggregated() {
        let pairs = [("AM-TMP", "AM-TMP"), ("AM-LOC", "AM-TMP"), ("A0", "AM-LOC"), ("AM-LOC", "A0")];
        let r = supervised_scores(&[record("a", &pairs)], Default::default()).unwrap();
        assert_eq!((r.adjuncts.correct, r.adjuncts.predicted, r.adjuncts.gold), (1, 3, 3));
    }

    #[test]
    fn macro_flag_averages_roles() {
        let pairs = [("A0", "A0"), ("A0", "A1")];
        let micro = supervised_scores(&[record("a", &pairs)], Default::default()).unwrap();
        let mac = supervised_scores(&[record("a", &pairs)], SupervisedConfig { macro_all: true, ..Default::default() })
            .unwrap();
        assert!((micro.all.f1 - 0.5).abs() < 1e-15);
        // A0: P 1/2, R 1 -> 2/3; A1: 0
        assert!((mac.all.f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn self_loops_can_be_dropped() {
        let mut rec = record("a", &[("A0", "A0"), ("A1", "A2")]);
        rec.predicate_token = rec.arguments[1].token;
        let kept = supervised_scores(&[rec.clone()], Default::default()).unwrap();
        let dropped =
            supervised_scores(&[rec], SupervisedConfig { drop_self_loops: true, ..Default::default() }).unwrap();
        assert_eq!((kept.arguments, kept.accuracy), (2, 0.5));
        assert_eq!((dropped.arguments, dropped.self_loops_dropped, dropped.accuracy), (1, 1, 1.0));
    }

    #[test]
    fn clusters_and_missing_gold_are_rejected() {
        let mut rec = record("a", &[("A0", "A0")]);
        rec.arguments[0].predicted = Label::Cluster(0);
        assert!(supervised_scores(&[rec], Default::default()).is_err());
        let mut rec = record("a", &[("A0", "A0")]);
        rec.arguments[0].gold = None;
        assert!(supervised_scores(&[rec], Default::default()).is_err());
        assert!(supervised_scores(&[], Default::default()).is_err());
    }
}

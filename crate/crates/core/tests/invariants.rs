use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use srl_transfer::baselines::MostFrequent;
use srl_transfer::corpus::{
    generate_synthetic, identify_arguments, write_corpus, AnnotatedSentence, Corpus, IdentifyConfig, SyntheticConfig,
    Token,
};
use srl_transfer::evaluation::{
    bhattacharyya, clustering_scores, read_predictions, supervised_scores, write_predictions, ArgumentPrediction,
    Label, PredictionRecord, Sample, SupervisedConfig,
};
use srl_transfer::objective::{gumbel_softmax, GumbelConfig};

fn sample_strategy() -> impl Strategy<Value = Sample> {
    prop::collection::btree_map("[a-f]", 1u64..50, 0..6)
}

const ROLES: [&str; 5] = ["A0", "A1", "A2", "AM-TMP", "AM-LOC"];

fn records_strategy() -> impl Strategy<Value = Vec<PredictionRecord>> {
    prop::collection::vec(prop::collection::vec((0usize..5, 0usize..5), 1..6), 1..12).prop_map(|instances| {
        instances
            .into_iter()
            .enumerate()
            .map(|(i, args)| PredictionRecord {
                instance: format!("s{i}#0"),
                predicate: format!("p{}", i % 3),
                predicate_token: 0,
                arguments: args
                    .into_iter()
                    .enumerate()
                    .map(|(j, (p, g))| ArgumentPrediction {
                        token: j + 1,
                        lemma: format!("w{j}"),
                        predicted: Label::Role(ROLES[p].to_string()),
                        gold: Some(ROLES[g].to_string()),
                        flagged: false,
                    })
                    .collect(),
            })
            .collect()
    })
}

fn as_clusters(records: &[PredictionRecord]) -> Vec<PredictionRecord> {
    let mut out = records.to_vec();
    for r in &mut out {
        for a in &mut r.arguments {
            let k = ROLES.iter().position(|x| Label::Role(x.to_string()) == a.predicted).unwrap();
            a.predicted = Label::Cluster(k);
        }
    }
    out
}

/// Random dependency tree: every token but the first attaches to an earlier one.
fn tree_strategy() -> impl Strategy<Value = AnnotatedSentence> {
    let tags = ["NN", "VB", "IN", "DT", "PRP", ","];
    let rels = ["SBJ", "OBJ", "NMOD", "ADV", "P"];
    (1usize..12)
        .prop_flat_map(move |n| {
            (
                Just(n),
                prop::collection::vec(0usize..1000, n),
                prop::collection::vec(0usize..tags.len(), n),
                prop::collection::vec(0usize..rels.len(), n),
            )
        })
        .prop_map(move |(n, heads, pos, rel)| AnnotatedSentence {
            id: "t".into(),
            tokens: (0..n)
                .map(|i| Token {
                    surface: format!("w{i}"),
                    lemma: format!("w{i}"),
                    pos: tags[pos[i]].to_string(),
                    head: if i == 0 { None } else { Some(heads[i] % i) },
                    deprel: rels[rel[i]].to_string(),
                })
                .collect(),
            predicates: vec![],
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bc_is_symmetric_bounded_and_scale_invariant(p in sample_strategy(), q in sample_strategy(), k in 1u64..7) {
        let pq = bhattacharyya(&p, &q);
        prop_assert_eq!(pq, bhattacharyya(&q, &p));
        if let Some(v) = pq {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let scale = |s: &Sample| s.iter().map(|(x, &c)| (x.clone(), c * k)).collect::<BTreeMap<_, _>>();
        prop_assert_eq!(pq, bhattacharyya(&scale(&p), &scale(&q)));
    }

    #[test]
    fn purity_and_collocation_lie_in_the_unit_interval(records in records_strategy()) {
        let s = clustering_scores(&as_clusters(&records), false).unwrap();
        for v in [s.purity, s.collocation, s.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn one_cluster_gives_full_collocation_and_modal_purity(records in records_strategy()) {
        let mut one = records.clone();
        let mut gold: BTreeMap<String, usize> = BTreeMap::new();
        for r in &mut one {
            for a in &mut r.arguments {
                a.predicted = Label::Cluster(0);
                *gold.entry(a.gold.clone().unwrap()).or_default() += 1;
            }
        }
        let n: usize = gold.values().sum();
        let s = clustering_scores(&one, false).unwrap();
        prop_assert_eq!(s.collocation, 1.0);
        prop_assert_eq!(s.purity, *gold.values().max().unwrap() as f64 / n as f64);
    }

    #[test]
    fn accuracy_is_one_minus_hamming(records in records_strategy()) {
        let r = supervised_scores(&records, SupervisedConfig::default()).unwrap();
        let (mut wrong, mut n) = (0usize, 0usize);
        for a in records.iter().flat_map(|r| &r.arguments) {
            wrong += (a.predicted.key() != *a.gold.as_ref().unwrap()) as usize;
            n += 1;
        }
        prop_assert_eq!(r.accuracy, (n - wrong) as f64 / n as f64);
        prop_assert!((r.accuracy - (1.0 - wrong as f64 / n as f64)).abs() < 1e-12);
        prop_assert_eq!(r.arguments, n);
    }

    #[test]
    fn prediction_files_round_trip(records in records_strategy()) {
        let mut buf = Vec::new();
        write_predictions(&records, &mut buf).unwrap();
        prop_assert_eq!(read_predictions(&buf[..]).unwrap(), records);
    }

    #[test]
    fn gumbel_samples_are_on_the_simplex(
        logits in prop::collection::vec(-5.0f64..5.0, 2..8),
        tau in 0.05f64..5.0,
        seed in any::<u64>(),
    ) {
        let z: f64 = logits.iter().map(|l| l.exp()).sum();
        let pi: Vec<f64> = logits.iter().map(|l| l.exp() / z).collect();
        let cfg = GumbelConfig { temperature: tau, straight_through: false, seed };
        let y = gumbel_softmax(&pi, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(y.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn identified_arguments_exclude_the_predicate(s in tree_strategy(), pick in 0usize..1000) {
        let pred = pick % s.tokens.len();
        let cfg = IdentifyConfig::default();
        let args = identify_arguments(&s, pred, &cfg).unwrap();
        prop_assert!(!args.contains(&pred));
        prop_assert!(args.iter().all(|&i| i < s.tokens.len() && !cfg.excluded_tags.contains(&s.tokens[i].pos)));
    }
}

fn shuffled(c: &Corpus, seed: u64) -> Corpus {
    let mut s = c.sentences().to_vec();
    s.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Corpus::new(c.domain(), c.roles().clone(), s).unwrap()
}

#[test]
fn most_frequent_ignores_training_order() {
    let (v, n, o) = generate_synthetic(&SyntheticConfig::small(), 4).unwrap();
    let test = o.reveal(&n).unwrap();
    let base = MostFrequent::fit(&v).unwrap().records(&test).unwrap();
    for seed in 0..5 {
        assert_eq!(MostFrequent::fit(&shuffled(&v, seed)).unwrap().records(&test).unwrap(), base);
    }
}

#[test]
fn synthetic_generation_is_a_function_of_config_and_seed() {
    let bytes = |seed| {
        let (v, n, _) = generate_synthetic(&SyntheticConfig::small(), seed).unwrap();
        let mut out = Vec::new();
        write_corpus(&v, &mut out).unwrap();
        write_corpus(&n, &mut out).unwrap();
        out
    };
    assert_eq!(bytes(9), bytes(9));
    assert_ne!(bytes(9), bytes(10));
}

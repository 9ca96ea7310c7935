use srl_transfer::baselines::direct_transfer_trainer;
use srl_transfer::corpus::{generate_synthetic, Domain, SyntheticConfig};
use srl_transfer::evaluation::{model_records, supervised_scores, SupervisedConfig};
use srl_transfer::model::ModelConfig;
use srl_transfer::trainer::{Trainer, TrainingConfig};

fn small_training(seed: u64) -> TrainingConfig {
    TrainingConfig {
        model: ModelConfig { labeler_layers: 1, ..ModelConfig::with_width(16) },
        max_epochs: 3,
        patience: 3,
        seed,
        ..Default::default()
    }
}

fn accuracy(model: &srl_transfer::model::Model, corpus: &srl_transfer::corpus::Corpus) -> f64 {
    supervised_scores(&model_records(model, corpus).unwrap(), SupervisedConfig::default()).unwrap().accuracy
}

/// With nominal sentences rendered like verbal ones there is no domain gap,
/// so a verbal-only labeler scores about as well on both.
#[test]
fn without_a_domain_gap_direct_transfer_matches_in_domain_accuracy() {
    let cfg = SyntheticConfig { shared_context: true, n_verbal: 800, n_nominal: 10, ..Default::default() };
    let (v, _, o) = generate_synthetic(&cfg, 21).unwrap();
    let mut t = direct_transfer_trainer(&small_training(21), &v, None).unwrap();
    t.train(None).unwrap();
    let verbal = accuracy(&t.model, &o.held_out(600, Domain::Verbal, 5).unwrap());
    let nominal = accuracy(&t.model, &o.held_out(600, Domain::Nominal, 6).unwrap());
    assert!(verbal > 0.6, "verbal accuracy {verbal}");
    assert!((verbal - nominal).abs() < 0.05, "verbal {verbal} nominal {nominal}");
}

#[test]
fn full_training_beats_chance_on_nominal_data() {
    let cfg = SyntheticConfig { n_verbal: 600, n_nominal: 600, ..Default::default() };
    let (v, n, o) = generate_synthetic(&cfg, 8).unwrap();
    let mut t = Trainer::new(small_training(8), &v, &n, None).unwrap();
    let outcome = t.train(None).unwrap();
    assert_eq!(outcome.state.epochs.len(), 3);
    let acc = accuracy(&t.model, &o.held_out(400, Domain::Nominal, 3).unwrap());
    assert!(acc > 1.0 / cfg.n_roles as f64 + 0.2, "nominal accuracy {acc}");
}

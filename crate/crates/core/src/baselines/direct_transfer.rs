//! The labeler trained on verbal data alone: the joint trainer with no
//! nominal batches and only the discriminative term.

use crate::corpus::Corpus;
use crate::error::Result;
use crate::trainer::{Trainer, TrainingConfig};

pub fn direct_transfer_config(cfg: &TrainingConfig) -> TrainingConfig {
    let mut c = cfg.clone();
    c.objective.generative = false;
    c.use_augmentation = false;
    c
}

/// A trainer whose vocabularies and batches come from `verbal` only.
pub fn direct_transfer_trainer(cfg: &TrainingConfig, verbal: &Corpus, dev: Option<&Corpus>) -> Result<Trainer> {
    let empty = Corpus::empty(crate::corpus::Domain::Nominal, verbal.roles().clone());
    Trainer::new(direct_transfer_config(cfg), verbal, &empty, dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, SyntheticConfig};
    use crate::model::ModelConfig;

    fn cfg() -> TrainingConfig {
        TrainingConfig { model: ModelConfig::with_width(4), max_epochs: 1, batch_verbal: 8, ..Default::default() }
    }

    #[test]
    fn equals_training_with_an_empty_nominal_batch() {
        let (v, _, _) = generate_synthetic(&SyntheticConfig::small(), 2).unwrap();
        let mut a = direct_transfer_trainer(&cfg(), &v, None).unwrap();
        let mut plain = cfg();
        plain.objective.generative = false;
        plain.use_augmentation = false;
        let empty = Corpus::empty(crate::corpus::Domain::Nominal, v.roles().clone());
        let mut b = Trainer::new(plain, &v, &empty, None).unwrap();
        a.train(None).unwrap();
        b.train(None).unwrap();
        assert_eq!(a.model.store.digest(), b.model.store.digest());
        assert!(a.state.epochs[0].mean_loss.is_finite());
    }

    #[test]
    fn only_the_discriminative_term_is_active() {
        let (v, _, _) = generate_synthetic(&SyntheticConfig::small(), 2).unwrap();
        let mut t = direct_transfer_trainer(&cfg(), &v, None).unwrap();
        let rec = t.step().unwrap();
        assert_eq!((rec.loss.reconstruction, rec.loss.kl_z, rec.loss.kl_y), (0.0, 0.0, 0.0));
        assert!(rec.loss.discriminative < 0.0);
    }
}

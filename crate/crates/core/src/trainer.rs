//! Optimization loop: Adadelta over interleaved verbal and nominal batches,
//! early stopping on development accuracy, checkpointing and ablations.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, PreparedInstance, Vocabularies};
use crate::nn::{Grads, ParamStore};
use crate::objective::{joint_loss, LossBreakdown, ObjectiveConfig};

const SLOT_G2: &str = "adadelta.g2";
const SLOT_DX2: &str = "adadelta.dx2";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdadeltaConfig {
    pub rho: f64,
    pub eps: f64,
    pub learning_rate: f64,
}

impl Default for AdadeltaConfig {
    fn default() -> Self {
        AdadeltaConfig { rho: 0.95, eps: 1e-6, learning_rate: 1.0 }
    }
}

impl AdadeltaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) || !(self.eps > 0.0) || !(self.learning_rate > 0.0) {
            return Err(Error::config("Adadelta needs 0 <= rho < 1, eps > 0 and a positive learning rate"));
        }
        Ok(())
    }
}

/// One Adadelta update of every parameter. A non-finite gradient aborts the
/// step before anything is modified.
pub fn adadelta_step(store: &mut ParamStore, grads: &Grads, cfg: &AdadeltaConfig) -> Result<()> {
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradient".into()));
    }
    let ids: Vec<_> = store.iter().map(|(id, _)| id).collect();
    for id in ids {
        let g = grads.dense(id, store);
        let p = store.get_mut(id);
        let n = p.value.len();
        let mut g2 = p.slots.remove(SLOT_G2).unwrap_or_else(|| vec![0.0; n]);
        let mut dx2 = p.slots.remove(SLOT_DX2).unwrap_or_else(|| vec![0.0; n]);
        for i in 0..n {
            g2[i] = cfg.rho * g2[i] + (1.0 - cfg.rho) * g[i] * g[i];
            let dx = -((dx2[i] + cfg.eps).sqrt() / (g2[i] + cfg.eps).sqrt()) * g[i];
            dx2[i] = cfg.rho * dx2[i] + (1.0 - cfg.rho) * dx * dx;
            p.value[i] += cfg.learning_rate * dx;
        }
        p.slots.insert(SLOT_G2.into(), g2);
        p.slots.insert(SLOT_DX2.into(), dx2);
    }
    Ok(())
}

/// Rescales `grads` so its L2 norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_gradients(grads: &mut Grads, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if max_norm > 0.0 && norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ablation {
    /// No latent code: z fixed at zero, KL_z dropped.
    Z,
    /// No joint context in the decoder.
    Joint,
    /// No augmentation corpus.
    Augment,
}

impl std::str::FromStr for Ablation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(Ablation::Z),
            "joint" => Ok(Ablation::Joint),
            "augment" => Ok(Ablation::Augment),
            other => Err(Error::config(format!("unknown ablation `{other}` (expected z, joint or augment)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub model: ModelConfig,
    pub objective: ObjectiveConfig,
    pub optimizer: AdadeltaConfig,
    pub batch_verbal: usize,
    pub batch_nominal: usize,
    pub max_epochs: usize,
    /// Epochs without dev improvement before stopping; 0 stops after the first epoch.
    pub patience: usize,
    /// Gradient L2-norm bound; 0 disables clipping.
    pub clip_norm: f64,
    pub seed: u64,
    pub use_augmentation: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            model: ModelConfig::default(),
            objective: ObjectiveConfig::default(),
            optimizer: AdadeltaConfig::default(),
            batch_verbal: 32,
            batch_nominal: 32,
            max_epochs: 50,
            patience: 5,
            clip_norm: 5.0,
            seed: 0,
            use_augmentation: true,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.objective.validate()?;
        self.optimizer.validate()?;
        if self.batch_verbal == 0 || self.batch_nominal == 0 || self.max_epochs == 0 {
            return Err(Error::config("batch sizes and max_epochs must be positive"));
        }
        if !(self.clip_norm >= 0.0) {
            return Err(Error::config("clip_norm must be nonnegative"));
        }
        Ok(())
    }

    pub fn ablate(mut self, a: Ablation) -> Self {
        match a {
            Ablation::Z => self.model.use_z = false,
            Ablation::Joint => self.model.joint_context = false,
            Ablation::Augment => self.use_augmentation = false,
        }
        self
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainingConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("training config serializes to TOML")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("training config serializes to JSON");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One optimizer step as written to the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: usize,
    pub temperature: f64,
    pub instances: usize,
    /// Loss terms averaged over the contributing instances.
    pub loss: LossBreakdown,
    pub grad_norm: f64,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub dev_accuracy: Option<f64>,
    pub improved: bool,
}

/// Everything besides parameters needed to continue training bit-exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub epoch: usize,
    pub step: u64,
    /// Next step within the current epoch.
    pub position: usize,
    pub epoch_loss: f64,
    pub epoch_instances: usize,
    pub best_dev: Option<f64>,
    pub best_epoch: Option<usize>,
    pub since_improvement: usize,
    pub finished: bool,
    pub epochs: Vec<EpochRecord>,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: TrainState,
    pub steps: Vec<StepRecord>,
}

/// Share of arguments whose predicted role equals the gold role.
pub fn labeling_accuracy(model: &Model, instances: &[PreparedInstance]) -> Result<f64> {
    let (mut correct, mut total) = (0usize, 0usize);
    for inst in instances {
        let Some(gold) = &inst.gold else { continue };
        if gold.is_empty() {
            continue;
        }
        let pred = model.role_posterior(inst)?.argmax();
        correct += pred.iter().zip(gold).filter(|(p, g)| p == g).count();
        total += gold.len();
    }
    if total == 0 {
        return Err(Error::Evaluation("no labeled arguments to score".into()));
    }
    Ok(correct as f64 / total as f64)
}

fn shuffle_seed(seed: u64, epoch: usize, domain: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((epoch as u64) << 8) ^ domain
}

pub struct Trainer {
    pub config: TrainingConfig,
    pub model: Model,
    pub state: TrainState,
    best: Option<ParamStore>,
    verbal: Vec<PreparedInstance>,
    nominal: Vec<PreparedInstance>,
    dev: Vec<PreparedInstance>,
}

impl Trainer {
    /// Builds vocabularies over all training corpora and a fresh model.
    pub fn new(config: TrainingConfig, verbal: &Corpus, nominal: &Corpus, dev: Option<&Corpus>) -> Result<Self> {
        config.validate()?;
        if verbal.roles() != nominal.roles() || dev.is_some_and(|d| d.roles() != verbal.roles()) {
            return Err(Error::Incompatible("corpora use different role inventories".into()));
        }
        let vocab = Vocabularies::build(&[verbal, nominal], config.model.lowercase);
        let model = Model::new(config.model.clone(), verbal.roles().clone(), vocab, config.seed)?;
        Trainer::with_model(config, model, verbal, nominal, dev)
    }

    pub fn with_model(
        config: TrainingConfig,
        model: Model,
        verbal: &Corpus,
        nominal: &Corpus,
        dev: Option<&Corpus>,
    ) -> Result<Self> {
        config.validate()?;
        if model.config != config.model {
            return Err(Error::Incompatible("model and training configuration disagree".into()));
        }
        let verbal = model.prepare(verbal);
        if verbal.iter().any(|i| i.gold.is_none()) {
            return Err(Error::Incompatible("verbal training instances must be labeled".into()));
        }
        let nominal = if config.objective.generative { model.prepare(&nominal.without_labels()) } else { Vec::new() };
        let dev = dev.map(|d| model.prepare(d)).unwrap_or_default();
        let state = TrainState::default();
        Ok(Trainer { config, model, state, best: None, verbal, nominal, dev })
    }

    fn batches_per_epoch(&self) -> (usize, usize) {
        (self.verbal.len().div_ceil(self.config.batch_verbal), self.nominal.len().div_ceil(self.config.batch_nominal))
    }

    pub fn steps_per_epoch(&self) -> usize {
        let (v, n) = self.batches_per_epoch();
        v.max(n)
    }

    fn order(&self, len: usize, domain: u64) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed(self.config.seed, self.state.epoch, domain)));
        idx
    }

    fn batch<'a>(
        &'a self,
        pool: &'a [PreparedInstance],
        order: &[usize],
        size: usize,
        k: usize,
    ) -> Vec<&'a PreparedInstance> {
        let n_batches = pool.len().div_ceil(size);
        if n_batches == 0 {
            return Vec::new();
        }
        let b = k % n_batches;
        order[b * size..((b + 1) * size).min(pool.len())].iter().map(|&i| &pool[i]).collect()
    }

    /// One optimizer step over the next verbal and nominal batches. Epoch
    /// bookkeeping (dev evaluation, early stopping) runs after the last step
    /// of an epoch.
    pub fn step(&mut self) -> Result<StepRecord> {
        if self.state.finished {
            return Err(Error::Incompatible("training already finished".into()));
        }
        if self.steps_per_epoch() == 0 {
            return Err(Error::Incompatible("no training instances".into()));
        }
        let k = self.state.position;
        let v_order = self.order(self.verbal.len(), 1);
        let n_order = self.order(self.nominal.len(), 2);
        let vb = self.batch(&self.verbal, &v_order, self.config.batch_verbal, k);
        let nb = self.batch(&self.nominal, &n_order, self.config.batch_nominal, k);
        let obj = &self.config.objective;
        let batch = joint_loss(&self.model, &nb, &vb, obj, self.config.seed, self.state.step)?;
        let mut record = StepRecord {
            step: self.state.step,
            epoch: self.state.epoch,
            temperature: obj.temperature_at(self.state.step),
            instances: batch.instances,
            loss: batch.breakdown,
            grad_norm: 0.0,
            nodes: batch.nodes,
        };
        if batch.instances > 0 {
            let inv = 1.0 / batch.instances as f64;
            for x in [&mut record.loss.reconstruction, &mut record.loss.kl_z, &mut record.loss.kl_y] {
                *x *= inv;
            }
            record.loss.discriminative *= inv;
            record.loss.total *= inv;
            let mut grads = batch.grads;
            grads.scale(inv);
            if !batch.breakdown.is_finite() || !grads.all_finite() {
                return Err(Error::Diverged(format!("non-finite loss or gradient at step {}", self.state.step)));
            }
            record.grad_norm = clip_gradients(&mut grads, self.config.clip_norm);
            adadelta_step(&mut self.model.store, &grads, &self.config.optimizer)?;
            self.state.epoch_loss += batch.breakdown.total;
            self.state.epoch_instances += batch.instances;
        }
        self.state.step += 1;
        self.state.position += 1;
        if self.state.position >= self.steps_per_epoch() {
            self.end_epoch()?;
        }
        Ok(record)
    }

    fn end_epoch(&mut self) -> Result<()> {
        let dev_accuracy = if self.dev.is_empty() { None } else { Some(labeling_accuracy(&self.model, &self.dev)?) };
        let improved = match (dev_accuracy, self.state.best_dev) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            (None, _) => false,
        };
        if improved {
            self.state.best_dev = dev_accuracy;
            self.state.best_epoch = Some(self.state.epoch);
            self.state.since_improvement = 0;
            self.best = Some(self.model.store.clone());
        } else {
            self.state.since_improvement += 1;
        }
        let mean_loss = self.state.epoch_loss / self.state.epoch_instances.max(1) as f64;
        log::info!("epoch {} loss {:.6} dev {:?}", self.state.epoch, mean_loss, dev_accuracy);
        self.state.epochs.push(EpochRecord { epoch: self.state.epoch, mean_loss, dev_accuracy, improved });
        self.state.epoch += 1;
        self.state.position = 0;
        self.state.epoch_loss = 0.0;
        self.state.epoch_instances = 0;
        let stop_early = dev_accuracy.is_some() && self.state.since_improvement >= self.config.patience;
        let stop_patience_zero = self.config.patience == 0;
        if stop_early || stop_patience_zero || self.state.epoch >= self.config.max_epochs {
            self.state.finished = true;
        }
        Ok(())
    }

    /// Runs to completion. With `out`, writes the step log and, after every
    /// epoch, the `last` checkpoint; on divergence the last good checkpoint
    /// is written before the error is returned.
    pub fn train(&mut self, out: Option<&Path>) -> Result<TrainOutcome> {
        let mut log_file = match out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Some(fs::OpenOptions::new().create(true).append(true).open(dir.join("train_log.jsonl"))?)
            }
            None => None,
        };
        let mut steps = Vec::new();
        while !self.state.finished {
            let epoch = self.state.epoch;
            match self.step() {
                Ok(r) => {
                    if let Some(f) = log_file.as_mut() {
                        writeln!(f, "{}", serde_json::to_string(&r)?)?;
                    }
                    steps.push(r);
                }
                // A failed step leaves parameters and state untouched.
                Err(e @ (Error::Diverged(_) | Error::NonFinite(_))) => {
                    if let Some(dir) = out {
                        self.save_checkpoint(&dir.join("last"))?;
                    }
                    return Err(Error::Diverged(e.to_string()));
                }
                Err(e) => return Err(e),
            }
            if let Some(dir) = out {
                if self.state.epoch != epoch {
                    self.save_checkpoint(&dir.join("last"))?;
                }
            }
        }
        if let Some(best) = &self.best {
            self.model.store = best.clone();
        }
        if let Some(dir) = out {
            self.model.save(&dir.join("best"))?;
        }
        Ok(TrainOutcome { state: self.state.clone(), steps })
    }

    /// Parameters with optimizer slots, model metadata, training state and the
    /// best parameters so far.
    pub fn save_checkpoint(&self, dir: &Path) -> Result<()> {
        self.model.save(dir)?;
        fs::write(dir.join("state.json"), serde_json::to_string_pretty(&self.state)?)?;
        fs::write(dir.join("config.toml"), self.config.to_toml())?;
        match &self.best {
            Some(b) => crate::nn::save_params(b, dir.join("best_params.bin"))?,
            None => {
                let _ = fs::remove_file(dir.join("best_params.bin"));
            }
        }
        Ok(())
    }

    /// Continues from a checkpoint written by [`Trainer::save_checkpoint`].
    pub fn resume(dir: &Path, verbal: &Corpus, nominal: &Corpus, dev: Option<&Corpus>) -> Result<Self> {
        let config = TrainingConfig::from_toml(&fs::read_to_string(dir.join("config.toml"))?)?;
        let model = Model::load(dir)?;
        let mut t = Trainer::with_model(config, model, verbal, nominal, dev)?;
        t.state = serde_json::from_str(&fs::read_to_string(dir.join("state.json"))?)?;
        let best = dir.join("best_params.bin");
        if best.exists() {
            t.best = Some(crate::nn::load_params(best)?);
        }
        Ok(t)
    }
}

/// Trains a fresh model per seed and scores each with `score`.
pub fn seed_sweep<F>(
    config: &TrainingConfig,
    seeds: &[u64],
    verbal: &Corpus,
    nominal: &Corpus,
    dev: Option<&Corpus>,
    out: Option<&Path>,
    mut score: F,
) -> Result<SweepReport>
where
    F: FnMut(&Model) -> Result<f64>,
{
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let cfg = TrainingConfig { seed, ..config.clone() };
        let mut trainer = Trainer::new(cfg, verbal, nominal, dev)?;
        let dir: Option<PathBuf> = out.map(|o| o.join(format!("seed{seed}")));
        trainer.train(dir.as_deref())?;
        runs.push(SeedRun { seed, score: score(&trainer.model)?, digest: trainer.model.store.digest() });
    }
    Ok(SweepReport::from_runs(runs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub score: f64,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<SeedRun>,
    pub mean: f64,
    /// Unbiased (n − 1) standard deviation; 0 for a single run.
    pub std: f64,
}

impl SweepReport {
    pub fn from_runs(runs: Vec<SeedRun>) -> Self {
        let scores: Vec<f64> = runs.iter().map(|r| r.score).collect();
        let (mean, std) = mean_std(&scores);
        SweepReport { runs, mean, std }
    }
}

/// Mean and unbiased standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    (mean, (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

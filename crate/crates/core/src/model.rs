//! The full network: shared role labeler, latent-code encoder and
//! argument reconstruction decoder over one parameter store.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnnotatedSentence, Corpus, Domain, PredicateInstance, RoleId, RoleInventory};
use crate::corpus::{ArgumentLabeler, Vocab};
use crate::decoder::{Decoder, DecoderConfig};
use crate::encoder::{
    mask_arguments, Labeler, LabelerConfig, LatentConfig, LatentEncoder, LatentPosterior, MaskedSentence,
    RolePosterior, SentenceInput,
};
use crate::error::{Error, Result};
use crate::nn::{load_params, restore_into, save_params, ParamStore};

pub const MASK: &str = "<mask>";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub labeler_hidden: usize,
    pub labeler_layers: usize,
    pub highway: bool,
    pub pos_feature: bool,
    pub pos_dim: usize,
    pub latent_hidden: usize,
    pub z_dim: usize,
    /// Width of the decoder's predicate, argument and role embeddings.
    pub decoder_dim: usize,
    /// Decoder hidden width; the decoder input width when unset.
    pub decoder_hidden: Option<usize>,
    /// When false the latent code is fixed at zero and its KL term is dropped.
    pub use_z: bool,
    pub joint_context: bool,
    pub autoregressive: bool,
    pub lowercase: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 100,
            labeler_hidden: 100,
            labeler_layers: 2,
            highway: true,
            pos_feature: false,
            pos_dim: 16,
            latent_hidden: 100,
            z_dim: 100,
            decoder_dim: 100,
            decoder_hidden: None,
            use_z: true,
            joint_context: true,
            autoregressive: false,
            lowercase: true,
        }
    }
}

impl ModelConfig {
    /// All widths set to `d`.
    pub fn with_width(d: usize) -> Self {
        ModelConfig { word_dim: d, labeler_hidden: d, latent_hidden: d, z_dim: d, decoder_dim: d, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.word_dim, self.labeler_hidden, self.latent_hidden, self.z_dim, self.decoder_dim];
        if dims.contains(&0)
            || self.labeler_layers == 0
            || self.decoder_hidden == Some(0)
            || (self.pos_feature && self.pos_dim == 0)
        {
            return Err(Error::config("model dimensions and layer counts must be positive"));
        }
        Ok(())
    }

    pub fn labeler(&self) -> LabelerConfig {
        LabelerConfig {
            word_dim: self.word_dim,
            hidden: self.labeler_hidden,
            layers: self.labeler_layers,
            highway: self.highway,
            pos_feature: self.pos_feature,
            pos_dim: self.pos_dim,
        }
    }

    pub fn latent(&self) -> LatentConfig {
        LatentConfig { word_dim: self.word_dim, hidden: self.latent_hidden, layers: 1, z_dim: self.z_dim }
    }

    pub fn decoder(&self) -> DecoderConfig {
        DecoderConfig {
            dim: self.decoder_dim,
            z_dim: self.z_dim,
            hidden: self.decoder_hidden,
            joint_context: self.joint_context,
            autoregressive: self.autoregressive,
        }
    }
}

/// Token, POS, argument-lemma and predicate vocabularies. Id 0 is UNK in each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub words: Vocab,
    pub pos: Vocab,
    pub lemmas: Vocab,
    pub predicates: Vocab,
}

impl Vocabularies {
    pub fn build(corpora: &[&Corpus], lowercase: bool) -> Self {
        let mut words = Vocab::new();
        words.reserve_entry(MASK);
        let (mut pos, mut lemmas, mut predicates) = (Vocab::new(), Vocab::new(), Vocab::new());
        for c in corpora {
            for s in c.sentences() {
                for t in &s.tokens {
                    words.add(&normalize(&t.surface, lowercase));
                    pos.add(&t.pos);
                }
            }
            for (_, p) in c.instances() {
                predicates.add(&p.lemma);
                for a in &p.arguments {
                    lemmas.add(&a.lemma);
                }
            }
        }
        Vocabularies { words, pos, lemmas, predicates }
    }

    pub fn mask(&self) -> usize {
        self.words.id(MASK).expect("mask symbol is reserved at construction")
    }
}

fn normalize(s: &str, lowercase: bool) -> String {
    if lowercase {
        s.to_lowercase()
    } else {
        s.to_string()
    }
}

/// One predicate instance mapped to vocabulary ids.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedInstance {
    pub id: String,
    pub domain: Domain,
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub predicate_index: usize,
    pub predicate: usize,
    pub arg_indices: Vec<usize>,
    pub lemmas: Vec<usize>,
    pub gold: Option<Vec<usize>>,
}

impl PreparedInstance {
    pub fn num_args(&self) -> usize {
        self.arg_indices.len()
    }

    pub fn sentence_input(&self) -> SentenceInput {
        SentenceInput { words: self.words.clone(), pos: self.pos.clone(), predicate: self.predicate_index }
    }
}

#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub roles: RoleInventory,
    pub vocab: Vocabularies,
    pub store: ParamStore,
    pub labeler: Labeler,
    pub latent: LatentEncoder,
    pub decoder: Decoder,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    config: ModelConfig,
    roles: Vec<String>,
    vocab: Vocabularies,
}

impl Model {
    pub fn new(config: ModelConfig, roles: RoleInventory, vocab: Vocabularies, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let k = roles.len();
        let labeler = Labeler::new(&mut store, config.labeler(), vocab.words.len(), vocab.pos.len(), k, &mut rng)?;
        let latent = LatentEncoder::new(&mut store, config.latent(), vocab.words.len(), &mut rng)?;
        let decoder =
            Decoder::new(&mut store, config.decoder(), vocab.predicates.len(), vocab.lemmas.len(), k, &mut rng)?;
        Ok(Model { config, roles, vocab, store, labeler, latent, decoder })
    }

    pub fn n_roles(&self) -> usize {
        self.roles.len()
    }

    pub fn prepare_instance(&self, s: &AnnotatedSentence, p: &PredicateInstance) -> PreparedInstance {
        let lc = self.config.lowercase;
        PreparedInstance {
            id: s.instance_id(p),
            domain: p.domain,
            words: s.tokens.iter().map(|t| self.vocab.words.id_or_unk(&normalize(&t.surface, lc))).collect(),
            pos: s.tokens.iter().map(|t| self.vocab.pos.id_or_unk(&t.pos)).collect(),
            predicate_index: p.token_index,
            predicate: self.vocab.predicates.id_or_unk(&p.lemma),
            arg_indices: p.argument_indices(),
            lemmas: p.arguments.iter().map(|a| self.vocab.lemmas.id_or_unk(&a.lemma)).collect(),
            gold: p.gold_roles().map(|g| g.iter().map(|r| r.index()).collect()),
        }
    }

    /// Every instance of `corpus` in corpus order.
    pub fn prepare(&self, corpus: &Corpus) -> Vec<PreparedInstance> {
        corpus.instances().map(|(s, p)| self.prepare_instance(s, p)).collect()
    }

    pub fn masked(&self, inst: &PreparedInstance) -> Result<MaskedSentence<usize>> {
        mask_arguments(&inst.words, &inst.arg_indices, self.vocab.mask())
    }

    pub fn role_posterior(&self, inst: &PreparedInstance) -> Result<RolePosterior> {
        self.labeler.posterior(&self.store, &inst.sentence_input(), &inst.arg_indices)
    }

    pub fn latent_posterior(&self, inst: &PreparedInstance) -> Result<LatentPosterior> {
        self.latent.posterior(&self.store, &self.masked(inst)?, inst.predicate_index)
    }

    /// Most probable role per argument.
    pub fn predict(&self, inst: &PreparedInstance) -> Result<Vec<RoleId>> {
        if inst.arg_indices.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.role_posterior(inst)?.argmax().into_iter().map(|r| RoleId(r as u16)).collect())
    }

    /// Copy of `corpus` with every argument labeled by the model.
    pub fn label_corpus(&self, corpus: &Corpus) -> Result<Corpus> {
        if corpus.roles() != &self.roles {
            return Err(Error::Incompatible("corpus and model role inventories differ".into()));
        }
        let mut sentences = corpus.sentences().to_vec();
        for s in &mut sentences {
            for pi in 0..s.predicates.len() {
                let inst = self.prepare_instance(s, &s.predicates[pi]);
                let roles = self.predict(&inst)?;
                for (a, r) in s.predicates[pi].arguments.iter_mut().zip(roles) {
                    a.gold_role = Some(r);
                }
            }
        }
        Corpus::new(corpus.domain(), corpus.roles().clone(), sentences)
    }

    /// Writes `params.bin` and `model.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        save_params(&self.store, &dir.join("params.bin"))?;
        let meta =
            ModelMeta { config: self.config.clone(), roles: self.roles.labels().to_vec(), vocab: self.vocab.clone() };
        fs::write(dir.join("model.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: ModelMeta = serde_json::from_str(&fs::read_to_string(dir.join("model.json"))?)?;
        let mut model = Model::new(meta.config, RoleInventory::new(meta.roles)?, meta.vocab, 0)?;
        let saved = load_params(&dir.join("params.bin"))?;
        restore_into(&mut model.store, &saved)?;
        Ok(model)
    }
}

impl ArgumentLabeler for Model {
    fn label(&self, sentence: &AnnotatedSentence, predicate: &PredicateInstance) -> Result<Vec<RoleId>> {
        self.predict(&self.prepare_instance(sentence, predicate))
    }
}

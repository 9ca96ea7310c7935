//! Inference networks: the role labeler q(y | w), shared by both domains, and
//! the latent-code encoder q(z | w with arguments masked).

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{softmax, Embedding, HighwayBiLstm, Linear, ParamStore, Tape, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelerConfig {
    pub word_dim: usize,
    /// Per-direction LSTM width.
    pub hidden: usize,
    pub layers: usize,
    pub highway: bool,
    /// Adds a POS-tag embedding to each token input.
    pub pos_feature: bool,
    pub pos_dim: usize,
}

impl Default for LabelerConfig {
    fn default() -> Self {
        LabelerConfig { word_dim: 100, hidden: 100, layers: 2, highway: true, pos_feature: false, pos_dim: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LatentConfig {
    pub word_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub z_dim: usize,
}

impl Default for LatentConfig {
    fn default() -> Self {
        LatentConfig { word_dim: 100, hidden: 100, layers: 1, z_dim: 100 }
    }
}

/// Token-level inputs of one predicate instance.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceInput {
    pub words: Vec<usize>,
    pub pos: Vec<usize>,
    pub predicate: usize,
}

/// Per-argument role distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct RolePosterior {
    pub probs: Vec<Vec<f64>>,
}

impl RolePosterior {
    /// Most probable role per argument; ties go to the lower role id.
    pub fn argmax(&self) -> Vec<usize> {
        self.probs
            .iter()
            .map(|p| p.iter().enumerate().fold(0, |best, (i, &x)| if x > p[best] { i } else { best }))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatentPosterior {
    pub mean: Vec<f64>,
    pub log_variance: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Labeler {
    pub config: LabelerConfig,
    pub words: Embedding,
    pub pos: Option<Embedding>,
    pub encoder: HighwayBiLstm,
    pub output: Linear,
    pub n_roles: usize,
}

impl Labeler {
    pub fn new(
        store: &mut ParamStore,
        config: LabelerConfig,
        n_words: usize,
        n_pos: usize,
        n_roles: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let words = Embedding::new(store, "labeler.word_emb", n_words, config.word_dim, rng)?;
        let pos = if config.pos_feature {
            Some(Embedding::new(store, "labeler.pos_emb", n_pos, config.pos_dim, rng)?)
        } else {
            None
        };
        let d_in = config.word_dim + 1 + if config.pos_feature { config.pos_dim } else { 0 };
        let encoder =
            HighwayBiLstm::new(store, "labeler.bilstm", d_in, config.hidden, config.layers, config.highway, rng)?;
        let output = Linear::new(store, "labeler.out", encoder.output_dim(), n_roles, true, rng)?;
        Ok(Labeler { config, words, pos, encoder, output, n_roles })
    }

    /// Pre-softmax role scores for each argument position.
    pub fn logits(&self, t: &mut Tape, input: &SentenceInput, args: &[usize]) -> Result<Vec<Var>> {
        let n = input.words.len();
        if let Some(&bad) = args.iter().chain(std::iter::once(&input.predicate)).find(|&&i| i >= n) {
            return Err(Error::Index { index: bad, len: n });
        }
        let mut xs = Vec::with_capacity(n);
        for i in 0..n {
            let w = self.words.lookup(t, input.words[i])?;
            let flag = t.input(vec![if i == input.predicate { 1.0 } else { 0.0 }]);
            let x = match &self.pos {
                Some(pos) => {
                    let p = pos.lookup(t, input.pos[i])?;
                    t.concat(&[w, flag, p])
                }
                None => t.concat(&[w, flag]),
            };
            xs.push(x);
        }
        let hs = self.encoder.encode(t, &xs);
        Ok(args.iter().map(|&a| self.output.forward(t, hs[a])).collect())
    }

    /// Role probabilities per argument, on the tape.
    pub fn probabilities(&self, t: &mut Tape, input: &SentenceInput, args: &[usize]) -> Result<Vec<Var>> {
        let logits = self.logits(t, input, args)?;
        Ok(logits.into_iter().map(|l| t.softmax(l)).collect())
    }

    pub fn posterior(&self, store: &ParamStore, input: &SentenceInput, args: &[usize]) -> Result<RolePosterior> {
        let mut t = Tape::new(store);
        let logits = self.logits(&mut t, input, args)?;
        Ok(RolePosterior { probs: logits.iter().map(|&l| softmax(t.value(l))).collect() })
    }
}

/// A token sequence whose argument positions have been replaced by the mask symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedSentence<T> {
    tokens: Vec<T>,
}

impl<T> MaskedSentence<T> {
    pub fn tokens(&self) -> &[T] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Replaces every argument position by `mask`; other tokens, the predicate included, are kept.
pub fn mask_arguments<T: Clone>(tokens: &[T], args: &[usize], mask: T) -> Result<MaskedSentence<T>> {
    let mut out = tokens.to_vec();
    for &a in args {
        let slot = out.get_mut(a).ok_or(Error::Index { index: a, len: tokens.len() })?;
        *slot = mask.clone();
    }
    Ok(MaskedSentence { tokens: out })
}

#[derive(Clone, Debug)]
pub struct LatentEncoder {
    pub config: LatentConfig,
    pub words: Embedding,
    pub encoder: HighwayBiLstm,
    pub mean: Linear,
    pub log_variance: Linear,
}

impl LatentEncoder {
    pub fn new(store: &mut ParamStore, config: LatentConfig, n_words: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let words = Embedding::new(store, "zenc.word_emb", n_words, config.word_dim, rng)?;
        let encoder =
            HighwayBiLstm::new(store, "zenc.bilstm", config.word_dim + 1, config.hidden, config.layers, true, rng)?;
        let mean = Linear::new(store, "zenc.mean", encoder.output_dim(), config.z_dim, true, rng)?;
        let log_variance = Linear::new(store, "zenc.logvar", encoder.output_dim(), config.z_dim, true, rng)?;
        Ok(LatentEncoder { config, words, encoder, mean, log_variance })
    }

    /// Mean-pooled encoder states of the masked sentence.
    pub fn pooled(&self, t: &mut Tape, masked: &MaskedSentence<usize>, predicate: usize) -> Result<Var> {
        if masked.is_empty() {
            return Err(Error::Incompatible("latent encoder needs a non-empty sentence".into()));
        }
        let mut xs = Vec::with_capacity(masked.len());
        for (i, &w) in masked.tokens().iter().enumerate() {
            let e = self.words.lookup(t, w)?;
            let flag = t.input(vec![if i == predicate { 1.0 } else { 0.0 }]);
            xs.push(t.concat(&[e, flag]));
        }
        let hs = self.encoder.encode(t, &xs);
        Ok(pool(t, &hs, self.encoder.output_dim()))
    }

    /// `(μ, log σ²)` on the tape.
    pub fn infer(&self, t: &mut Tape, masked: &MaskedSentence<usize>, predicate: usize) -> Result<(Var, Var)> {
        let h = self.pooled(t, masked, predicate)?;
        Ok((self.mean.forward(t, h), self.log_variance.forward(t, h)))
    }

    pub fn posterior(
        &self,
        store: &ParamStore,
        masked: &MaskedSentence<usize>,
        predicate: usize,
    ) -> Result<LatentPosterior> {
        let mut t = Tape::new(store);
        let (m, lv) = self.infer(&mut t, masked, predicate)?;
        Ok(LatentPosterior { mean: t.value(m).to_vec(), log_variance: t.value(lv).to_vec() })
    }
}

/// Mean over time.
pub fn pool(t: &mut Tape, states: &[Var], dim: usize) -> Var {
    t.mean_vecs(states, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn labeler(pos_feature: bool) -> (ParamStore, Labeler) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = ParamStore::new();
        let cfg = LabelerConfig { word_dim: 5, hidden: 4, layers: 2, highway: true, pos_feature, pos_dim: 3 };
        let l = Labeler::new(&mut s, cfg, 12, 4, 5, &mut rng).unwrap();
        (s, l)
    }

    fn sentence() -> SentenceInput {
        SentenceInput { words: vec![1, 2, 3, 4, 5, 6], pos: vec![0, 1, 2, 3, 0, 1], predicate: 2 }
    }

    #[test]
    fn posterior_rows_are_distributions() {
        for pos in [false, true] {
            let (s, l) = labeler(pos);
            let p = l.posterior(&s, &sentence(), &[0, 4, 5]).unwrap();
            assert_eq!(p.probs.len(), 3);
            for row in &p.probs {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
                assert!(row.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn swapping_context_tokens_changes_the_posterior() {
        let (s, l) = labeler(false);
        let a = l.posterior(&s, &sentence(), &[0, 4]).unwrap();
        let mut swapped = sentence();
        swapped.words.swap(1, 5);
        let b = l.posterior(&s, &swapped, &[0, 4]).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn argmax_ignores_monotone_transforms_of_logits() {
        let (s, l) = labeler(false);
        let mut t = Tape::new(&s);
        let logits = l.logits(&mut t, &sentence(), &[0, 4, 5]).unwrap();
        let base = RolePosterior { probs: logits.iter().map(|&v| softmax(t.value(v))).collect() }.argmax();
        for f in [|x: f64| 3.0 * x + 1.0, |x: f64| x.powi(3), |x: f64| x.exp()] {
            let probs =
                logits.iter().map(|&v| softmax(&t.value(v).iter().map(|&x| f(x)).collect::<Vec<_>>())).collect();
            assert_eq!(RolePosterior { probs }.argmax(), base);
        }
    }

    #[test]
    fn out_of_range_argument_is_an_error() {
        let (s, l) = labeler(false);
        assert!(matches!(l.posterior(&s, &sentence(), &[6]), Err(Error::Index { .. })));
    }

    #[test]
    fn masking() {
        let words = ["Sony", "Pictures", "made", "a", "recent", "acquisition", "."];
        // arguments of `acquisition`: Sony, recent, Pictures
        let masked = mask_arguments(&words, &[0, 4, 1], "<mask>").unwrap();
        assert_eq!(masked.tokens(), &["<mask>", "<mask>", "made", "a", "<mask>", "acquisition", "."]);
        assert_eq!(mask_arguments(&words, &[], "<mask>").unwrap().tokens(), &words);
        let twice = mask_arguments(masked.tokens(), &[0, 4, 1], "<mask>").unwrap();
        assert_eq!(twice, masked);
        assert!(mask_arguments(&words, &[9], "<mask>").is_err());
    }

    fn latent() -> (ParamStore, LatentEncoder) {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut s = ParamStore::new();
        let cfg = LatentConfig { word_dim: 4, hidden: 3, layers: 1, z_dim: 2 };
        let e = LatentEncoder::new(&mut s, cfg, 10, &mut rng).unwrap();
        (s, e)
    }

    #[test]
    fn masked_argument_identity_does_not_matter() {
        let (s, e) = latent();
        let a = mask_arguments(&[1, 2, 3, 4], &[0, 3], 9).unwrap();
        let b = mask_arguments(&[7, 2, 3, 8], &[0, 3], 9).unwrap();
        assert_eq!(e.posterior(&s, &a, 1).unwrap(), e.posterior(&s, &b, 1).unwrap());
        assert_eq!(e.posterior(&s, &a, 1).unwrap().mean.len(), 2);
    }

    #[test]
    fn pooling_is_order_free() {
        let (s, _) = latent();
        let mut t = Tape::new(&s);
        let a = t.input(vec![1.0, 2.0]);
        let b = t.input(vec![-3.0, 0.5]);
        let c = t.input(vec![0.25, 4.0]);
        let p1 = pool(&mut t, &[a, b, c], 2);
        let p2 = pool(&mut t, &[c, a, b], 2);
        for (x, y) in t.value(p1).iter().zip(t.value(p2)) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}

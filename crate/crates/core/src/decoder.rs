//! Selectional-preference decoder: predicts each argument lemma from the
//! predicate, the latent code, the argument's role and the other arguments.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Embedding, FeedForward, Init, ParamId, ParamStore, Tape, Var};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecoderConfig {
    pub dim: usize,
    pub z_dim: usize,
    /// Feed-forward hidden width; the input width when absent.
    pub hidden: Option<usize>,
    /// Condition on the mean embeddings of the other arguments and roles.
    pub joint_context: bool,
    /// Condition on the preceding arguments only, in the given order.
    pub autoregressive: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig { dim: 100, z_dim: 100, hidden: None, joint_context: true, autoregressive: false }
    }
}

impl DecoderConfig {
    pub fn input_dim(&self) -> usize {
        let ctx = if self.joint_context { 2 * self.dim } else { 0 };
        self.dim + self.z_dim + self.dim + ctx
    }
}

/// One decoder query: `x_i = [v_p; z; v_{y_i}; c_a; c_y]`.
#[derive(Clone, Copy, Debug)]
pub struct DecoderInput {
    pub predicate: Var,
    pub z: Var,
    pub role: Var,
    pub context: Option<(Var, Var)>,
}

#[derive(Clone, Debug)]
pub struct Decoder {
    pub config: DecoderConfig,
    pub predicates: Embedding,
    pub arguments: Embedding,
    /// `n_roles x dim` role embedding matrix.
    pub roles: ParamId,
    pub n_roles: usize,
    pub n_lemmas: usize,
    pub ff: FeedForward,
}

impl Decoder {
    pub fn new(
        store: &mut ParamStore,
        config: DecoderConfig,
        n_predicates: usize,
        n_lemmas: usize,
        n_roles: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let predicates = Embedding::new(store, "dec.pred_emb", n_predicates, config.dim, rng)?;
        let arguments = Embedding::new(store, "dec.arg_emb", n_lemmas, config.dim, rng)?;
        let roles = store.add("dec.role_emb", n_roles, config.dim, Init::Uniform(0.1), rng)?;
        let d_in = config.input_dim();
        let ff = FeedForward::new(store, "dec.ff", d_in, config.hidden.unwrap_or(d_in), n_lemmas, rng)?;
        Ok(Decoder { config, predicates, arguments, roles, n_roles, n_lemmas, ff })
    }

    /// Expected role embedding `Σ_r π_r v_r` for role weights `π`.
    pub fn role_vector(&self, t: &mut Tape, weights: Var) -> Var {
        t.mat_t_vec(self.roles, weights)
    }

    /// Log-probabilities over the argument-lemma vocabulary.
    pub fn argument_log_probs(&self, t: &mut Tape, input: &DecoderInput) -> Var {
        let x = match input.context {
            Some((ca, cy)) if self.config.joint_context => t.concat(&[input.predicate, input.z, input.role, ca, cy]),
            _ => t.concat(&[input.predicate, input.z, input.role]),
        };
        let logits = self.ff.forward(t, x);
        t.log_softmax(logits)
    }

    /// `Σ_i log p(a_i | y, a_{-i}, z, p)` for lemma ids `lemmas` and per-argument
    /// role weights `roles` (one-hot or relaxed). Terms and context sums are
    /// taken in an order fixed by the content of each (lemma, role) pair, so
    /// jointly permuting `lemmas` and `roles` gives a bitwise identical value.
    pub fn pseudolikelihood(
        &self,
        t: &mut Tape,
        predicate: usize,
        lemmas: &[usize],
        roles: &[Var],
        z: Var,
    ) -> Result<Var> {
        if lemmas.is_empty() || lemmas.len() != roles.len() {
            return Err(Error::Incompatible(format!("{} lemmas for {} role vectors", lemmas.len(), roles.len())));
        }
        if let Some(&bad) = lemmas.iter().find(|&&l| l >= self.n_lemmas) {
            return Err(Error::Index { index: bad, len: self.n_lemmas });
        }
        let v_p = self.predicates.lookup(t, predicate)?;
        let arg_vecs = self.arguments.embed(t, lemmas)?;
        let role_vecs: Vec<Var> = roles.iter().map(|&r| self.role_vector(t, r)).collect();

        let order =
            if self.config.autoregressive { (0..lemmas.len()).collect() } else { canonical_order(t, lemmas, roles) };
        let mut terms = Vec::with_capacity(lemmas.len());
        for (rank, &i) in order.iter().enumerate() {
            let context = if !self.config.joint_context {
                None
            } else {
                let others: Vec<usize> = if self.config.autoregressive {
                    order[..rank].to_vec()
                } else {
                    order.iter().copied().filter(|&j| j != i).collect()
                };
                let a: Vec<Var> = others.iter().map(|&j| arg_vecs[j]).collect();
                let y: Vec<Var> = others.iter().map(|&j| role_vecs[j]).collect();
                Some(context_vectors(t, &a, &y, self.config.dim))
            };
            let input = DecoderInput { predicate: v_p, z, role: role_vecs[i], context };
            let lp = self.argument_log_probs(t, &input);
            terms.push(t.pick(lp, lemmas[i]));
        }
        Ok(t.sum_scalars(&terms))
    }
}

/// Means of the given argument and role vectors; zero vectors when empty.
pub fn context_vectors(t: &mut Tape, args: &[Var], roles: &[Var], dim: usize) -> (Var, Var) {
    (t.mean_vecs(args, dim), t.mean_vecs(roles, dim))
}

/// Positions sorted by (lemma id, role weight bits).
fn canonical_order(t: &Tape, lemmas: &[usize], roles: &[Var]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..lemmas.len()).collect();
    order.sort_by(|&a, &b| {
        lemmas[a].cmp(&lemmas[b]).then_with(|| {
            let (ra, rb) = (t.value(roles[a]), t.value(roles[b]));
            ra.iter().zip(rb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

/// One-hot vector of length `k`.
pub fn one_hot(k: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[i] = 1.0;
    v
}

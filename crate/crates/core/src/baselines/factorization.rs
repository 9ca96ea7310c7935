//! Supervised selectional-preference factorization: the compatibility of
//! argument a with role y of predicate p is s = v_aᵀ W_y v_p + v_aᵀ w_y, and
//! training maximizes log p(a | p, y), a softmax of s over all arguments.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, RoleId, RoleInventory, Vocab};
use crate::error::{Error, Result};
use crate::evaluation::{records_with, Label, PredictionRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FactorizationConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Argument lemmas seen fewer times are trained as the UNK row.
    pub min_count: u64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for FactorizationConfig {
    fn default() -> Self {
        FactorizationConfig { dim: 100, epochs: 10, learning_rate: 0.1, min_count: 2, init_scale: 0.1, seed: 0 }
    }
}

impl FactorizationConfig {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 || !(self.learning_rate > 0.0) || !(self.init_scale >= 0.0) {
            return Err(Error::config("factorization needs dim > 0, learning rate > 0 and init scale ≥ 0"));
        }
        Ok(())
    }
}

/// One training triple: (predicate id, role, argument id).
pub type Example = (usize, RoleId, usize);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationParams {
    pub dim: usize,
    pub roles: RoleInventory,
    pub lemmas: Vocab,
    pub predicates: Vocab,
    /// Argument embeddings, one row per lemma id.
    pub arg_emb: Vec<f64>,
    pub pred_emb: Vec<f64>,
    /// W_y row-major, one d×d block per role.
    pub role_mat: Vec<f64>,
    pub role_vec: Vec<f64>,
}

/// Gradients of the negative log-likelihood, laid out like the parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizationGrads {
    pub arg_emb: Vec<f64>,
    pub pred_emb: Vec<f64>,
    pub role_mat: Vec<f64>,
    pub role_vec: Vec<f64>,
}

impl FactorizationParams {
    pub fn new(
        dim: usize,
        roles: RoleInventory,
        lemmas: Vocab,
        predicates: Vocab,
        init_scale: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let normal = Normal::new(0.0, init_scale).map_err(|e| Error::config(e.to_string()))?;
        let mut draw = |n: usize| (0..n).map(|_| normal.sample(&mut *rng)).collect::<Vec<f64>>();
        let k = roles.len();
        Ok(FactorizationParams {
            dim,
            arg_emb: draw(lemmas.len() * dim),
            pred_emb: draw(predicates.len() * dim),
            role_mat: draw(k * dim * dim),
            role_vec: draw(k * dim),
            roles,
            lemmas,
            predicates,
        })
    }

    fn row(m: &[f64], i: usize, d: usize) -> &[f64] {
        &m[i * d..(i + 1) * d]
    }

    /// h = W_y v_p + w_y, so that s(a, y, p) = v_a · h.
    fn role_context(&self, y: RoleId, p: usize) -> Vec<f64> {
        let d = self.dim;
        let w = &self.role_mat[y.index() * d * d..(y.index() + 1) * d * d];
        let vp = Self::row(&self.pred_emb, p, d);
        let wy = Self::row(&self.role_vec, y.index(), d);
        (0..d).map(|i| w[i * d..(i + 1) * d].iter().zip(vp).map(|(a, b)| a * b).sum::<f64>() + wy[i]).collect()
    }

    /// s(a, y, p) for an arbitrary argument vector.
    pub fn score_with(&self, v_a: &[f64], y: RoleId, p: usize) -> f64 {
        v_a.iter().zip(self.role_context(y, p)).map(|(a, h)| a * h).sum()
    }

    pub fn score(&self, a: usize, y: RoleId, p: usize) -> f64 {
        self.score_with(Self::row(&self.arg_emb, a, self.dim), y, p)
    }

    pub fn predicate_id(&self, lemma: &str) -> usize {
        self.predicates.id_or_unk(lemma)
    }

    pub fn argument_id(&self, lemma: &str) -> usize {
        self.lemmas.id_or_unk(lemma)
    }

    /// argmax_y s(a, y, p); ties go to the earlier role. Unseen lemmas use the UNK rows.
    pub fn predict(&self, predicate: &str, argument: &str) -> RoleId {
        let (p, a) = (self.predicate_id(predicate), self.argument_id(argument));
        let mut best = (f64::NEG_INFINITY, RoleId(0));
        for y in self.roles.ids() {
            let s = self.score(a, y, p);
            if s > best.0 {
                best = (s, y);
            }
        }
        best.1
    }

    /// Σ log p(a | p, y) over `examples` and the gradient of its negation.
    pub fn gradient(&self, examples: &[Example]) -> (f64, FactorizationGrads) {
        let mut g = FactorizationGrads {
            arg_emb: vec![0.0; self.arg_emb.len()],
            pred_emb: vec![0.0; self.pred_emb.len()],
            role_mat: vec![0.0; self.role_mat.len()],
            role_vec: vec![0.0; self.role_vec.len()],
        };
        let mut ll = 0.0;
        for &(p, y, a) in examples {
            let (dh, log_p) = self.accumulate_output(&mut g.arg_emb, p, y, a);
            ll += log_p;
            self.accumulate_context(&mut g, &dh, p, y);
        }
        (ll, g)
    }

    /// Adds dL/dV to `d_arg` and returns (dL/dh, log p(a | p, y)).
    fn accumulate_output(&self, d_arg: &mut [f64], p: usize, y: RoleId, a: usize) -> (Vec<f64>, f64) {
        let d = self.dim;
        let h = self.role_context(y, p);
        let n = self.lemmas.len();
        let z: Vec<f64> =
            (0..n).map(|l| Self::row(&self.arg_emb, l, d).iter().zip(&h).map(|(x, y)| x * y).sum()).collect();
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let mut dh = vec![0.0; d];
        for l in 0..n {
            let gl = (z[l] - lse).exp() - if l == a { 1.0 } else { 0.0 };
            let row = Self::row(&self.arg_emb, l, d);
            for i in 0..d {
                d_arg[l * d + i] += gl * h[i];
                dh[i] += gl * row[i];
            }
        }
        (dh, z[a] - lse)
    }

    fn accumulate_context(&self, g: &mut FactorizationGrads, dh: &[f64], p: usize, y: RoleId) {
        let d = self.dim;
        let base = y.index() * d * d;
        let vp = Self::row(&self.pred_emb, p, d);
        for i in 0..d {
            g.role_vec[y.index() * d + i] += dh[i];
            for j in 0..d {
                g.role_mat[base + i * d + j] += dh[i] * vp[j];
                g.pred_emb[p * d + j] += self.role_mat[base + i * d + j] * dh[i];
            }
        }
    }

    fn sgd(&mut self, example: Example, lr: f64) {
        let (p, y, a) = example;
        let (_, g) = self.gradient(&[(p, y, a)]);
        let step = |w: &mut [f64], g: &[f64]| w.iter_mut().zip(g).for_each(|(w, g)| *w -= lr * g);
        step(&mut self.arg_emb, &g.arg_emb);
        step(&mut self.pred_emb, &g.pred_emb);
        step(&mut self.role_mat, &g.role_mat);
        step(&mut self.role_vec, &g.role_vec);
    }

    /// Records for `corpus` with the argmax role of each argument.
    pub fn records(&self, corpus: &Corpus) -> Result<Vec<PredictionRecord>> {
        records_with(corpus, |_, p| {
            Ok(p.arguments
                .iter()
                .map(|a| (Label::Role(self.roles.label(self.predict(&p.lemma, &a.lemma)).to_string()), false))
                .collect())
        })
    }
}

/// Vocabularies and training triples from the labeled arguments of `verbal`.
pub fn factorization_examples(verbal: &Corpus, min_count: u64) -> (Vocab, Vocab, Vec<Example>) {
    let mut counts = Vocab::new();
    let mut predicates = Vocab::new();
    for (_, p) in verbal.instances() {
        predicates.add(&p.lemma);
        for a in &p.arguments {
            if a.gold_role.is_some() {
                counts.add(&a.lemma);
            }
        }
    }
    let lemmas = counts.pruned(min_count);
    let mut examples = Vec::new();
    for (_, p) in verbal.instances() {
        for a in &p.arguments {
            if let Some(r) = a.gold_role {
                examples.push((predicates.id_or_unk(&p.lemma), r, lemmas.id_or_unk(&a.lemma)));
            }
        }
    }
    (lemmas, predicates, examples)
}

/// Per-example SGD over shuffled labeled triples; single-threaded and seeded.
pub fn factorization_fit(verbal: &Corpus, cfg: &FactorizationConfig) -> Result<FactorizationParams> {
    cfg.validate()?;
    let (lemmas, predicates, mut examples) = factorization_examples(verbal, cfg.min_count);
    if examples.is_empty() {
        return Err(Error::Evaluation("factorization needs labeled arguments".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params =
        FactorizationParams::new(cfg.dim, verbal.roles().clone(), lemmas, predicates, cfg.init_scale, &mut rng)?;
    for epoch in 0..cfg.epochs {
        examples.shuffle(&mut rng);
        for &ex in &examples {
            params.sgd(ex, cfg.learning_rate);
        }
        let finite = [&params.arg_emb, &params.pred_emb, &params.role_mat, &params.role_vec]
            .iter()
            .all(|b| b.iter().all(|w| w.is_finite()));
        if !finite {
            return Err(Error::Diverged(format!("factorization parameters at epoch {epoch}")));
        }
    }
    Ok(params)
}

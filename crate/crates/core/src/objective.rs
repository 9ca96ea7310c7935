//! Loss terms, stochastic estimators and the joint training objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::one_hot;
use crate::error::{Error, Result};
use crate::model::{Model, PreparedInstance};
use crate::nn::{softmax, Grads, Tape, Var};

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

/// `½ Σ (μ² + σ² − log σ² − 1)`: KL from `N(μ, σ²)` to `N(0, I)`.
pub fn gaussian_kl(mean: &[f64], log_variance: &[f64]) -> f64 {
    0.5 * mean.iter().zip(log_variance).map(|(&m, &lv)| m * m + lv.exp() - lv - 1.0).sum::<f64>()
}

/// `log K − H(π)`: KL from `π` to the uniform distribution over its support.
pub fn categorical_kl_uniform(pi: &[f64]) -> f64 {
    (pi.len() as f64).ln() + pi.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// `z = μ + σ ⊙ ε`.
pub fn reparam_z(mean: &[f64], log_variance: &[f64], eps: &[f64]) -> Vec<f64> {
    mean.iter().zip(log_variance).zip(eps).map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e).collect()
}

/// `−log(−log u)` for `u` in (0, 1).
pub fn gumbel_noise(u: f64) -> f64 {
    -(-u.ln()).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GumbelConfig {
    pub temperature: f64,
    /// Forward pass uses the one-hot argmax; gradients flow through the relaxed sample.
    pub straight_through: bool,
    pub seed: u64,
}

impl Default for GumbelConfig {
    fn default() -> Self {
        GumbelConfig { temperature: 1.0, straight_through: false, seed: 0 }
    }
}

impl GumbelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config(format!("Gumbel temperature must be positive, got {}", self.temperature)));
        }
        Ok(())
    }
}

/// `softmax((log max(π, floor) + g) / τ)` for fixed Gumbel noise `g`.
pub fn gumbel_softmax_with_noise(pi: &[f64], g: &[f64], temperature: f64) -> Vec<f64> {
    let x: Vec<f64> = pi.iter().zip(g).map(|(&p, &gi)| (p.max(PROB_FLOOR).ln() + gi) / temperature).collect();
    softmax(&x)
}

/// One relaxed one-hot draw (or its hard argmax under straight-through).
pub fn gumbel_softmax(pi: &[f64], cfg: &GumbelConfig, rng: &mut impl Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..pi.len()).map(|_| gumbel_noise(rng.sample(Open01))).collect();
    let y = gumbel_softmax_with_noise(pi, &g, cfg.temperature);
    if cfg.straight_through {
        one_hot(y.len(), argmax(&y))
    } else {
        y
    }
}

fn argmax(x: &[f64]) -> usize {
    x.iter().enumerate().fold(0, |best, (i, &v)| if v > x[best] { i } else { best })
}

/// KL of `N(μ, σ²)` to the standard normal, on the tape.
pub fn kl_gaussian_node(t: &mut Tape, mean: Var, log_variance: Var) -> Var {
    let m2 = t.mul(mean, mean);
    let var = t.exp(log_variance);
    let a = t.add(m2, var);
    let b = t.sub(a, log_variance);
    let s = t.sum_elems(b);
    let n = t.dim(mean) as f64;
    let c = t.add_scalar(s, -n);
    t.scale(c, 0.5)
}

/// KL of the categorical with log-probabilities `log_probs` to the uniform, on the tape.
pub fn kl_uniform_node(t: &mut Tape, log_probs: Var) -> Var {
    let k = t.dim(log_probs) as f64;
    let p = t.exp(log_probs);
    let neg_h = t.dot(p, log_probs);
    t.add_scalar(neg_h, k.ln())
}

/// Reparameterized latent sample on the tape.
pub fn reparam_node(t: &mut Tape, mean: Var, log_variance: Var, eps: &[f64]) -> Var {
    let half = t.scale(log_variance, 0.5);
    let sd = t.exp(half);
    let e = t.constant(eps.to_vec());
    let noise = t.mul(sd, e);
    t.add(mean, noise)
}

/// Relaxed role sample `softmax((log π + g) / τ)` on the tape.
pub fn gumbel_node(t: &mut Tape, log_probs: Var, g: &[f64], temperature: f64, straight_through: bool) -> Var {
    let noise = t.constant(g.to_vec());
    let s = t.add(log_probs, noise);
    let x = t.scale(s, 1.0 / temperature);
    let y = t.softmax(x);
    if !straight_through {
        return y;
    }
    let soft = t.value(y).to_vec();
    let hard = one_hot(soft.len(), argmax(&soft));
    let delta: Vec<f64> = hard.iter().zip(&soft).map(|(h, s)| h - s).collect();
    t.shift(y, &delta)
}

/// Frozen stochastic draws for one instance and one Monte Carlo sample.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceNoise {
    pub eps: Vec<f64>,
    /// Gumbel noise per argument.
    pub gumbel: Vec<Vec<f64>>,
}

impl InstanceNoise {
    pub fn draw(z_dim: usize, n_args: usize, n_roles: usize, rng: &mut impl Rng) -> Self {
        let eps = (0..z_dim).map(|_| rng.sample(StandardNormal)).collect();
        let gumbel = (0..n_args).map(|_| (0..n_roles).map(|_| gumbel_noise(rng.sample(Open01))).collect()).collect();
        InstanceNoise { eps, gumbel }
    }

    pub fn zeros(z_dim: usize, n_args: usize, n_roles: usize) -> Self {
        InstanceNoise { eps: vec![0.0; z_dim], gumbel: vec![vec![0.0; n_roles]; n_args] }
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the noise stream of one instance at one step; independent of batch
/// composition and evaluation order.
pub fn instance_seed(seed: u64, step: u64, id: &str) -> u64 {
    splitmix(splitmix(seed) ^ splitmix(step.wrapping_add(0x5EED)) ^ fnv1a(id))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    pub alpha: f64,
    pub temperature: f64,
    /// Exponential temperature decay per step; 0 keeps it constant.
    pub anneal_rate: f64,
    pub min_temperature: f64,
    pub straight_through: bool,
    /// Averages the discriminative term over arguments instead of summing.
    pub discriminative_mean: bool,
    /// When false only `α·D` on labeled instances is optimized.
    pub generative: bool,
    /// Monte Carlo samples per instance per step.
    pub samples: usize,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            alpha: 1.0,
            temperature: 1.0,
            anneal_rate: 0.0,
            min_temperature: 0.1,
            straight_through: false,
            discriminative_mean: false,
            generative: true,
            samples: 1,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        GumbelConfig { temperature: self.temperature, ..Default::default() }.validate()?;
        if self.samples == 0 {
            return Err(Error::config("at least one Monte Carlo sample is required"));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 || self.anneal_rate < 0.0 || !(self.min_temperature > 0.0) {
            return Err(Error::config("alpha and anneal rate must be nonnegative, minimum temperature positive"));
        }
        if !self.generative && self.alpha == 0.0 {
            return Err(Error::config("the discriminative-only objective needs alpha > 0"));
        }
        Ok(())
    }

    pub fn temperature_at(&self, step: u64) -> f64 {
        if self.anneal_rate == 0.0 {
            self.temperature
        } else {
            (self.temperature * (-self.anneal_rate * step as f64).exp()).max(self.min_temperature)
        }
    }
}

/// Summed loss terms; `total = −(reconstruction − kl_z − kl_y + α·discriminative)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub reconstruction: f64,
    pub kl_z: f64,
    pub kl_y: f64,
    pub discriminative: f64,
    pub total: f64,
}

impl LossBreakdown {
    /// `reconstruction − kl_z − kl_y`.
    pub fn bound(&self) -> f64 {
        self.reconstruction - self.kl_z - self.kl_y
    }

    pub fn combine(&self, alpha: f64) -> f64 {
        -(self.bound() + alpha * self.discriminative)
    }

    pub fn add(&mut self, o: &LossBreakdown) {
        self.reconstruction += o.reconstruction;
        self.kl_z += o.kl_z;
        self.kl_y += o.kl_y;
        self.discriminative += o.discriminative;
        self.total += o.total;
    }

    pub fn is_finite(&self) -> bool {
        [self.reconstruction, self.kl_z, self.kl_y, self.discriminative, self.total].iter().all(|x| x.is_finite())
    }
}

/// Builds the loss of one instance on `t`. Labeled instances use their gold
/// roles in the decoder and contribute `ℒ + α·𝒟`; unlabeled ones contribute `𝒰`.
pub fn build_instance_loss(
    t: &mut Tape,
    model: &Model,
    inst: &PreparedInstance,
    labeled: bool,
    cfg: &ObjectiveConfig,
    temperature: f64,
    noise: &[InstanceNoise],
) -> Result<(Var, LossBreakdown)> {
    let m = inst.num_args();
    if m == 0 {
        return Err(Error::Incompatible(format!("instance {} has no arguments", inst.id)));
    }
    let gold = match (labeled, &inst.gold) {
        (true, Some(g)) => Some(g.as_slice()),
        (true, None) => return Err(Error::Incompatible(format!("instance {} has no gold roles", inst.id))),
        (false, _) => None,
    };
    if !cfg.generative && gold.is_none() {
        return Err(Error::Incompatible("unlabeled instances need the generative objective".into()));
    }
    if cfg.generative && noise.len() != cfg.samples {
        return Err(Error::Incompatible(format!("{} noise draws for {} samples", noise.len(), cfg.samples)));
    }
    let k = model.n_roles();
    let need_labeler = gold.is_none() || cfg.alpha != 0.0;
    let log_probs: Vec<Var> = if need_labeler {
        let logits = model.labeler.logits(t, &inst.sentence_input(), &inst.arg_indices)?;
        logits.into_iter().map(|l| t.log_softmax(l)).collect()
    } else {
        Vec::new()
    };

    let mut parts = LossBreakdown::default();
    let mut terms: Vec<Var> = Vec::new();

    if cfg.generative {
        let latent = if model.config.use_z {
            let masked = model.masked(inst)?;
            let (mean, lv) = model.latent.infer(t, &masked, inst.predicate_index)?;
            let kl = kl_gaussian_node(t, mean, lv);
            parts.kl_z = t.scalar(kl);
            terms.push(t.neg(kl));
            Some((mean, lv))
        } else {
            None
        };
        let gold_roles: Option<Vec<Var>> = gold.map(|g| g.iter().map(|&r| t.constant(one_hot(k, r))).collect());
        let mut recs = Vec::with_capacity(cfg.samples);
        for n in noise {
            if n.gumbel.len() < m || n.eps.len() != model.config.z_dim {
                return Err(Error::Incompatible("noise shape does not match the instance".into()));
            }
            let z = match latent {
                Some((mean, lv)) => reparam_node(t, mean, lv, &n.eps),
                None => t.zeros(model.config.z_dim),
            };
            let roles = match &gold_roles {
                Some(r) => r.clone(),
                None => log_probs
                    .iter()
                    .zip(&n.gumbel)
                    .map(|(&lp, g)| gumbel_node(t, lp, g, temperature, cfg.straight_through))
                    .collect(),
            };
            recs.push(model.decoder.pseudolikelihood(t, inst.predicate, &inst.lemmas, &roles, z)?);
        }
        let rec_sum = t.sum_scalars(&recs);
        let rec = t.scale(rec_sum, 1.0 / cfg.samples as f64);
        parts.reconstruction = t.scalar(rec);
        terms.push(rec);
        if gold.is_none() {
            let kls: Vec<Var> = log_probs.iter().map(|&lp| kl_uniform_node(t, lp)).collect();
            let kl = t.sum_scalars(&kls);
            parts.kl_y = t.scalar(kl);
            terms.push(t.neg(kl));
        }
    }

    if let Some(g) = gold {
        if cfg.alpha != 0.0 {
            let picks: Vec<Var> = log_probs.iter().zip(g).map(|(&lp, &r)| t.pick(lp, r)).collect();
            let s = t.sum_scalars(&picks);
            let d = if cfg.discriminative_mean { t.scale(s, 1.0 / m as f64) } else { s };
            parts.discriminative = t.scalar(d);
            terms.push(t.scale(d, cfg.alpha));
        }
    }

    let objective = t.sum_scalars(&terms);
    let loss = t.neg(objective);
    parts.total = t.scalar(loss);
    Ok((loss, parts))
}

/// Loss value, gradients and graph size of one instance.
#[derive(Clone, Debug)]
pub struct InstanceLoss {
    pub breakdown: LossBreakdown,
    pub grads: Grads,
    pub nodes: usize,
}

pub fn instance_loss(
    model: &Model,
    inst: &PreparedInstance,
    labeled: bool,
    cfg: &ObjectiveConfig,
    temperature: f64,
    noise: &[InstanceNoise],
) -> Result<InstanceLoss> {
    let mut t = Tape::new(&model.store);
    let (loss, breakdown) = build_instance_loss(&mut t, model, inst, labeled, cfg, temperature, noise)?;
    Ok(InstanceLoss { breakdown, grads: t.backward(loss), nodes: t.len() })
}

/// Monte Carlo noise for one instance at one step.
pub fn draw_noise(model: &Model, inst: &PreparedInstance, samples: usize, seed: u64, step: u64) -> Vec<InstanceNoise> {
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, step, &inst.id));
    (0..samples).map(|_| InstanceNoise::draw(model.config.z_dim, inst.num_args(), model.n_roles(), &mut rng)).collect()
}

fn value_only(
    model: &Model,
    inst: &PreparedInstance,
    labeled: bool,
    cfg: &ObjectiveConfig,
    noise: &[InstanceNoise],
) -> Result<LossBreakdown> {
    let mut t = Tape::new(&model.store);
    Ok(build_instance_loss(&mut t, model, inst, labeled, cfg, cfg.temperature, noise)?.1)
}

/// Single-sample estimate of `𝒰` for an unlabeled instance under frozen noise.
pub fn unlabeled_bound(
    model: &Model,
    inst: &PreparedInstance,
    cfg: &ObjectiveConfig,
    noise: &InstanceNoise,
) -> Result<LossBreakdown> {
    let cfg = ObjectiveConfig { samples: 1, generative: true, ..cfg.clone() };
    value_only(model, inst, false, &cfg, std::slice::from_ref(noise))
}

/// Estimate of `ℒ` for a labeled instance under frozen noise.
pub fn labeled_bound(
    model: &Model,
    inst: &PreparedInstance,
    cfg: &ObjectiveConfig,
    noise: &InstanceNoise,
) -> Result<LossBreakdown> {
    let cfg = ObjectiveConfig { samples: 1, generative: true, alpha: 0.0, ..cfg.clone() };
    value_only(model, inst, true, &cfg, std::slice::from_ref(noise))
}

/// `𝒟 = Σ_i log π_i[gold_i]` (or its mean over arguments).
pub fn discriminative(model: &Model, inst: &PreparedInstance, mean: bool) -> Result<f64> {
    let cfg = ObjectiveConfig { generative: false, alpha: 1.0, discriminative_mean: mean, ..Default::default() };
    Ok(value_only(model, inst, true, &cfg, &[])?.discriminative)
}

/// Summed loss and gradients of a batch.
#[derive(Clone, Debug, Default)]
pub struct BatchLoss {
    pub breakdown: LossBreakdown,
    pub grads: Grads,
    pub instances: usize,
    pub skipped: usize,
    pub nodes: usize,
}

/// `𝒥 = −Σ_n 𝒰 − Σ_v (ℒ + α·𝒟)` over one nominal and one verbal batch.
/// Instances are evaluated in parallel and their gradients summed in batch
/// order, so the result does not depend on the thread count.
pub fn joint_loss(
    model: &Model,
    nominal: &[&PreparedInstance],
    verbal: &[&PreparedInstance],
    cfg: &ObjectiveConfig,
    seed: u64,
    step: u64,
) -> Result<BatchLoss> {
    let nominal: &[&PreparedInstance] = if cfg.generative { nominal } else { &[] };
    if nominal.is_empty() && verbal.is_empty() {
        return Err(Error::Incompatible("joint loss needs a non-empty batch".into()));
    }
    let temperature = cfg.temperature_at(step);
    let jobs: Vec<(&PreparedInstance, bool)> =
        nominal.iter().map(|&i| (i, false)).chain(verbal.iter().map(|&i| (i, true))).collect();
    let results: Vec<Option<Result<InstanceLoss>>> = jobs
        .par_iter()
        .map(|&(inst, labeled)| {
            if inst.num_args() == 0 {
                return None;
            }
            let noise = if cfg.generative { draw_noise(model, inst, cfg.samples, seed, step) } else { Vec::new() };
            Some(instance_loss(model, inst, labeled, cfg, temperature, &noise))
        })
        .collect();
    let mut out = BatchLoss::default();
    for (r, (inst, _)) in results.into_iter().zip(&jobs) {
        match r {
            None => {
                log::debug!("skipping {} (no arguments)", inst.id);
                out.skipped += 1;
            }
            Some(r) => {
                let l = r?;
                out.breakdown.add(&l.breakdown);
                out.grads.add_scaled(&l.grads, 1.0, &model.store);
                out.nodes += l.nodes;
                out.instances += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::tiny_model;
    use crate::nn::{grad_check, GradCheckConfig, ParamStore};

    #[test]
    fn gaussian_kl_closed_form() {
        assert_eq!(gaussian_kl(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((gaussian_kl(&[1.0], &[0.0]) - 0.5).abs() < 1e-12);
        assert!(gaussian_kl(&[0.3, -2.0], &[1.5, -0.7]) > 0.0);
    }

    #[test]
    fn gaussian_kl_matches_monte_carlo() {
        let (mu, lv) = ([0.7, -1.2, 0.1], [0.4f64, -0.9, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let eps: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let z = reparam_z(&mu, &lv, &eps);
            // log q(z) − log p(z); the 2π constants cancel
            let v: f64 = (0..3).map(|d| -0.5 * (lv[d] + eps[d] * eps[d]) + 0.5 * z[d] * z[d]).sum();
            xs.push(v);
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((mean - gaussian_kl(&mu, &lv)).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn categorical_kl_anchors() {
        assert!(categorical_kl_uniform(&[1.0 / 15.0; 15]).abs() < 1e-12);
        assert!((categorical_kl_uniform(&one_hot(15, 3)) - 15f64.ln()).abs() < 1e-12);
        assert!((categorical_kl_uniform(&[0.75, 0.25]) - 0.13081).abs() < 1e-5);
    }

    #[test]
    fn reparam_limits_and_moments() {
        assert_eq!(reparam_z(&[1.0, 2.0], &[0.3, -0.3], &[0.0, 0.0]), vec![1.0, 2.0]);
        assert!((reparam_z(&[1.0], &[-80.0], &[3.0])[0] - 1.0).abs() < 1e-15);
        let (mu, lv) = (0.4, 0.8f64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let zs: Vec<f64> = (0..n).map(|_| reparam_z(&[mu], &[lv], &[rng.sample(StandardNormal)])[0]).collect();
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let s2 = lv.exp();
        assert!((mean - mu).abs() < 3.0 * (s2 / n as f64).sqrt());
        // Var of the sample variance of a normal is 2σ⁴/(n−1).
        assert!((var - s2).abs() < 3.0 * (2.0 * s2 * s2 / (n - 1) as f64).sqrt());
    }

    #[test]
    fn gumbel_argmax_follows_the_categorical() {
        let pi = [0.7, 0.2, 0.1];
        let n = 100_000;
        for tau in [0.1, 1.0] {
            let cfg = GumbelConfig { temperature: tau, ..Default::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let mut counts = [0usize; 3];
            for _ in 0..n {
                let y = gumbel_softmax(&pi, &cfg, &mut rng);
                assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                counts[argmax(&y)] += 1;
            }
            for (c, p) in counts.iter().zip(pi) {
                let se = (p * (1.0 - p) / n as f64).sqrt();
                assert!((*c as f64 / n as f64 - p).abs() < 3.0 * se, "tau {tau}: {counts:?}");
            }
        }
    }

    /// Share of draws with a component above 0.99, from the exponential
    /// representation `exp(g_i / τ) = E_i^(-1/τ)` with `E_i ~ Exp(1)`.
    fn sharp_share_oracle(k: usize, tau: f64, n: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let hits = (0..n)
            .filter(|_| {
                let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(rand_distr::Exp1)).collect();
                let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
                let denom: f64 = e.iter().map(|&x| (lo / x).powf(1.0 / tau)).sum();
                1.0 / denom > 0.99
            })
            .count();
        hits as f64 / n as f64
    }

    #[test]
    fn low_temperature_is_nearly_one_hot() {
        let share = |tau: f64| {
            let cfg = GumbelConfig { temperature: tau, ..Default::default() };
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            (0..10_000).filter(|_| gumbel_softmax(&[1.0 / 3.0; 3], &cfg, &mut rng).iter().any(|&x| x > 0.99)).count()
                as f64
                / 10_000.0
        };
        // At τ = 0.05 the gap between the two largest Gumbel draws is below
        // τ·ln 99 in about 15% of draws, so only ~85% are that sharp.
        let oracle = sharp_share_oracle(3, 0.05, 200_000);
        assert!((share(0.05) - oracle).abs() < 0.015, "{} vs {oracle}", share(0.05));
        assert!(share(0.001) >= 0.99);
        assert!(GumbelConfig { temperature: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn tape_terms_match_numeric_oracles() {
        let s = ParamStore::new();
        let mut t = Tape::new(&s);
        let (mu, lv) = (vec![0.3, -1.0], vec![0.5, -0.25]);
        let (m, l) = (t.input(mu.clone()), t.input(lv.clone()));
        let kl = kl_gaussian_node(&mut t, m, l);
        assert!((t.scalar(kl) - gaussian_kl(&mu, &lv)).abs() < 1e-12);
        let z = reparam_node(&mut t, m, l, &[0.4, 1.1]);
        assert_eq!(t.value(z), reparam_z(&mu, &lv, &[0.4, 1.1]).as_slice());
        let pi = [0.5, 0.3, 0.2];
        let lp = t.input(pi.iter().map(|p: &f64| p.ln()).collect());
        let klu = kl_uniform_node(&mut t, lp);
        assert!((t.scalar(klu) - categorical_kl_uniform(&pi)).abs() < 1e-12);
        let g = [0.2, -0.4, 1.0];
        let y = gumbel_node(&mut t, lp, &g, 0.7, false);
        for (a, b) in t.value(y).iter().zip(gumbel_softmax_with_noise(&pi, &g, 0.7)) {
            assert!((a - b).abs() < 1e-12);
        }
        let hard = gumbel_node(&mut t, lp, &g, 0.7, true);
        let v = t.value(hard);
        assert!(v.iter().all(|&x| x.abs() < 1e-12 || (x - 1.0).abs() < 1e-12));
    }

    fn frozen(model: &Model, inst: &PreparedInstance, seed: u64) -> InstanceNoise {
        draw_noise(model, inst, 1, seed, 0).remove(0)
    }

    #[test]
    fn bounds_are_deterministic_under_frozen_noise() {
        let (m, v, n) = tiny_model(3);
        let cfg = ObjectiveConfig::default();
        let u = &m.prepare(&n.without_labels())[0];
        let l = &m.prepare(&v)[0];
        let nu = frozen(&m, u, 1);
        let a = unlabeled_bound(&m, u, &cfg, &nu).unwrap();
        assert_eq!(a, unlabeled_bound(&m, u, &cfg, &nu).unwrap());
        assert!(a.kl_z >= 0.0 && a.kl_y >= 0.0);
        assert!((a.total + a.bound()).abs() < 1e-9);
        let nl = frozen(&m, l, 1);
        let b = labeled_bound(&m, l, &cfg, &nl).unwrap();
        assert_eq!(b.kl_y, 0.0);
        assert!(b.kl_z > 0.0 && b.bound() < b.reconstruction);
    }

    #[test]
    fn labeled_bound_uses_gold_one_hot_roles() {
        let (m, v, _) = tiny_model(3);
        let inst = &m.prepare(&v)[1];
        let noise = frozen(&m, inst, 4);
        let b = labeled_bound(&m, inst, &ObjectiveConfig::default(), &noise).unwrap();
        let mut t = Tape::new(&m.store);
        let masked = m.masked(inst).unwrap();
        let (mean, lv) = m.latent.infer(&mut t, &masked, inst.predicate_index).unwrap();
        let z = reparam_node(&mut t, mean, lv, &noise.eps);
        let k = m.n_roles();
        let roles: Vec<Var> = inst.gold.as_ref().unwrap().iter().map(|&r| t.constant(one_hot(k, r))).collect();
        let rec = m.decoder.pseudolikelihood(&mut t, inst.predicate, &inst.lemmas, &roles, z).unwrap();
        assert_eq!(t.scalar(rec), b.reconstruction);
    }

    #[test]
    fn discriminative_matches_cross_entropy_loop() {
        let (m, v, _) = tiny_model(5);
        for inst in m.prepare(&v).iter().take(5) {
            let post = m.role_posterior(inst).unwrap();
            let gold = inst.gold.as_ref().unwrap();
            let mut naive = 0.0;
            for (row, &g) in post.probs.iter().zip(gold) {
                naive += row[g].ln();
            }
            let d = discriminative(&m, inst, false).unwrap();
            assert!(d <= 0.0);
            assert!((d - naive).abs() < 1e-9, "{d} vs {naive}");
            let dm = discriminative(&m, inst, true).unwrap();
            assert!((dm - naive / gold.len() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn uniform_posterior_discriminative_anchor() {
        // log(1/15) per argument
        assert!((2.0 * (1.0f64 / 15.0).ln() - (-5.416)).abs() < 1e-3);
        let (mut m, v, _) = tiny_model(5);
        let out = m.labeler.output;
        m.store.get_mut(out.w).value.iter_mut().for_each(|x| *x = 0.0);
        let inst = &m.prepare(&v)[0];
        let d = discriminative(&m, inst, false).unwrap();
        let k = m.n_roles() as f64;
        assert!((d - inst.num_args() as f64 * (1.0 / k).ln()).abs() < 1e-12);
    }

    #[test]
    fn alpha_zero_and_empty_nominal_batch() {
        let (m, v, n) = tiny_model(6);
        let vs = m.prepare(&v);
        let ns = m.prepare(&n.without_labels());
        let vb: Vec<&PreparedInstance> = vs.iter().take(3).collect();
        let nb: Vec<&PreparedInstance> = ns.iter().take(3).collect();
        let a0 = ObjectiveConfig { alpha: 0.0, ..Default::default() };
        let j = joint_loss(&m, &nb, &vb, &a0, 1, 0).unwrap();
        assert_eq!(j.breakdown.discriminative, 0.0);
        assert!((j.breakdown.total + j.breakdown.bound()).abs() < 1e-9);
        let sup = joint_loss(&m, &[], &vb, &ObjectiveConfig::default(), 1, 0).unwrap();
        assert_eq!(sup.breakdown.kl_y, 0.0);
        assert!((sup.breakdown.total - sup.breakdown.combine(1.0)).abs() < 1e-9);
        assert!(joint_loss(&m, &[], &[], &a0, 1, 0).is_err());
    }

    #[test]
    fn joint_loss_is_independent_of_batch_order_per_instance() {
        let (m, v, n) = tiny_model(6);
        let vs = m.prepare(&v);
        let ns = m.prepare(&n.without_labels());
        let cfg = ObjectiveConfig::default();
        let a = joint_loss(&m, &[&ns[0]], &[&vs[0]], &cfg, 3, 7).unwrap();
        let b = joint_loss(&m, &[&ns[0], &ns[1]], &[&vs[0]], &cfg, 3, 7).unwrap();
        let c = joint_loss(&m, &[&ns[1]], &[], &cfg, 3, 7).unwrap();
        assert!((b.breakdown.total - a.breakdown.total - c.breakdown.total).abs() < 1e-9);
    }

    #[test]
    fn joint_loss_gradients_match_finite_differences() {
        let (m, v, n) = tiny_model(7);
        let vs = m.prepare(&v);
        let ns = m.prepare(&n.without_labels());
        let cfg = ObjectiveConfig::default();
        let loss = |s: &ParamStore| {
            let mut mm = m.clone();
            mm.store = s.clone();
            let b = joint_loss(&mm, &[&ns[0], &ns[1]], &[&vs[0], &vs[1]], &cfg, 2, 0)?;
            Ok((b.breakdown.total, b.grads))
        };
        let r = grad_check(&m.store, loss, &GradCheckConfig { coords_per_tensor: 4, ..Default::default() }).unwrap();
        assert!(r.max_rel_error < 1e-4, "{} at {}[{}]", r.max_rel_error, r.worst_param, r.worst_index);
    }

    #[test]
    fn estimator_standard_error_shrinks_with_sample_count() {
        let (m, _, n) = tiny_model(8);
        let inst = &m.prepare(&n.without_labels())[0];
        let cfg = ObjectiveConfig::default();
        let draws: Vec<f64> =
            (0..10_000u64).map(|s| unlabeled_bound(&m, inst, &cfg, &frozen(&m, inst, s)).unwrap().bound()).collect();
        let se = |xs: &[f64]| {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
        };
        let ratio = se(&draws[..100]) / se(&draws);
        assert!((5.0..20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn instance_seeds_differ_by_step_and_id() {
        assert_ne!(instance_seed(1, 0, "a"), instance_seed(1, 1, "a"));
        assert_ne!(instance_seed(1, 0, "a"), instance_seed(1, 0, "b"));
        assert_ne!(instance_seed(1, 0, "a"), instance_seed(2, 0, "a"));
        assert_eq!(instance_seed(1, 0, "a"), instance_seed(1, 0, "a"));
    }
}

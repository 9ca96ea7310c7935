//! Synthetic verbal/nominal corpora with known role→lemma preferences.
//!
//! Both domains draw argument lemmas from one emission table indexed by
//! (role, topic); verbal sentences may be restricted to part of each cell's
//! vocabulary. Each instance has a single topic, so the other arguments
//! of an instance carry information about which lemmas a role emits there.
//! Verbal sentences mark each argument with a role-specific marker word and
//! list arguments in role order. Nominal sentences use their own predicate
//! surfaces and filler words, shuffle the arguments and put an uninformative
//! connector before each one, so nothing but the argument lemmas (and the
//! predicate lemma) identifies the roles there.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnnotatedSentence, ArgumentSlot, Corpus, Domain, PredicateInstance, RoleId, RoleInventory, Token};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    /// Number of roles K; the inventory is the first K standard labels.
    pub n_roles: usize,
    pub n_predicates: usize,
    /// Roles each predicate can take.
    pub frame_size: usize,
    pub min_args: usize,
    pub max_args: usize,
    pub n_topics: usize,
    /// Lemmas private to each (role, topic) cell.
    pub lemmas_per_cell: usize,
    /// Mass of the lemma each cell shares with the next role in the next topic.
    pub ambiguity: f64,
    /// One lemma per role, no topics, no ambiguity.
    pub peaked: bool,
    pub fillers_per_domain: usize,
    pub min_fillers: usize,
    pub max_fillers: usize,
    pub connectors: usize,
    /// Probability that a verbal marker names the true role.
    pub marker_reliability: f64,
    /// Fraction of each cell's private lemmas that verbal sentences use;
    /// the Zipf tail beyond it occurs only in nominal sentences.
    pub verbal_coverage: f64,
    /// Nominal sentences reuse the verbal layout and context words.
    pub shared_context: bool,
    pub n_verbal: usize,
    pub n_nominal: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_roles: 6,
            n_predicates: 6,
            frame_size: 4,
            min_args: 2,
            max_args: 3,
            n_topics: 3,
            lemmas_per_cell: 3,
            ambiguity: 0.35,
            peaked: false,
            fillers_per_domain: 12,
            min_fillers: 1,
            max_fillers: 3,
            connectors: 3,
            marker_reliability: 1.0,
            verbal_coverage: 1.0,
            shared_context: false,
            n_verbal: 2000,
            n_nominal: 2000,
        }
    }
}

impl SyntheticConfig {
    /// A few dozen instances over three roles; for fast tests.
    pub fn small() -> Self {
        SyntheticConfig {
            n_roles: 3,
            n_predicates: 3,
            frame_size: 3,
            min_args: 1,
            max_args: 2,
            n_topics: 2,
            lemmas_per_cell: 2,
            fillers_per_domain: 4,
            n_verbal: 40,
            n_nominal: 40,
            ..SyntheticConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_roles == 0 || self.n_predicates == 0 || self.n_topics == 0 || self.lemmas_per_cell == 0 {
            return bad("synthetic sizes must be positive".into());
        }
        if self.frame_size > self.n_roles {
            return bad(format!("frame size {} exceeds role count {}", self.frame_size, self.n_roles));
        }
        if self.min_args == 0 || self.min_args > self.max_args {
            return bad(format!("invalid argument range {}..={}", self.min_args, self.max_args));
        }
        if self.max_args > self.frame_size {
            return bad(format!("{} roles per instance requested but frames have {}", self.max_args, self.frame_size));
        }
        if !(0.0..1.0).contains(&self.ambiguity) || !(0.0..=1.0).contains(&self.marker_reliability) {
            return bad("ambiguity must be in [0,1) and marker reliability in [0,1]".into());
        }
        if !(self.verbal_coverage > 0.0 && self.verbal_coverage <= 1.0) {
            return bad(format!("verbal coverage {} outside (0,1]", self.verbal_coverage));
        }
        if self.min_fillers > self.max_fillers || (self.max_fillers > 0 && self.fillers_per_domain == 0) {
            return bad("invalid filler configuration".into());
        }
        if self.connectors == 0 {
            return bad("need at least one connector word".into());
        }
        RoleInventory::first(self.n_roles)?;
        Ok(())
    }
}

/// Ground truth of a synthetic run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracle {
    pub config: SyntheticConfig,
    pub seed: u64,
    pub roles: RoleInventory,
    pub lemmas: Vec<String>,
    /// `emission[role][topic][lemma]`, each row a distribution over `lemmas`.
    pub emission: Vec<Vec<Vec<f64>>>,
    /// The emission table restricted to verbally covered lemmas and renormalized.
    pub verbal_emission: Vec<Vec<Vec<f64>>>,
    pub frames: Vec<Vec<RoleId>>,
    pub predicate_lemmas: Vec<String>,
    pub verbal_predicates: Vec<String>,
    pub nominal_predicates: Vec<String>,
    pub verbal_context: Vec<String>,
    pub nominal_context: Vec<String>,
    /// Gold roles of the unlabeled nominal instances, keyed by instance id.
    pub hidden: BTreeMap<String, Vec<RoleId>>,
}

struct Draw {
    predicate: usize,
    roles: Vec<RoleId>,
    lemmas: Vec<usize>,
}

impl SyntheticOracle {
    fn build(config: &SyntheticConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let k = config.n_roles;
        let t_count = if config.peaked { 1 } else { config.n_topics };
        let mut lemmas = Vec::new();
        let mut new_lemma = || {
            lemmas.push(format!("lem{:03}", lemmas.len()));
            lemmas.len() - 1
        };
        // cells[r][t] = (private lemma ids, shared lemma id)
        let mut private = vec![vec![Vec::new(); t_count]; k];
        let mut shared = vec![vec![None; t_count]; k];
        for r in 0..k {
            for t in 0..t_count {
                let n = if config.peaked { 1 } else { config.lemmas_per_cell };
                private[r][t] = (0..n).map(|_| new_lemma()).collect();
                if !config.peaked && config.ambiguity > 0.0 {
                    shared[r][t] = Some(new_lemma());
                }
            }
        }
        let v = lemmas.len();
        let mut emission = vec![vec![vec![0.0; v]; t_count]; k];
        for r in 0..k {
            for t in 0..t_count {
                let own = &private[r][t];
                let has_amb = shared[r][t].is_some();
                let own_mass = if has_amb { 1.0 - config.ambiguity } else { 1.0 };
                let zipf: f64 = (0..own.len()).map(|i| 1.0 / (i + 1) as f64).sum();
                for (i, &l) in own.iter().enumerate() {
                    emission[r][t][l] += own_mass / ((i + 1) as f64 * zipf);
                }
                if has_amb {
                    // the cell's shared lemma, plus the one borrowed from the previous role's previous topic
                    let half = config.ambiguity / 2.0;
                    emission[r][t][shared[r][t].unwrap()] += half;
                    let (pr, pt) = ((r + k - 1) % k, (t + t_count - 1) % t_count);
                    emission[r][t][shared[pr][pt].unwrap()] += half;
                }
            }
        }
        let mut verbal_emission = emission.clone();
        for r in 0..k {
            for t in 0..t_count {
                let own = &private[r][t];
                let keep = ((config.verbal_coverage * own.len() as f64).ceil() as usize).max(1);
                let row = &mut verbal_emission[r][t];
                own[keep..].iter().for_each(|&l| row[l] = 0.0);
                let z: f64 = row.iter().sum();
                row.iter_mut().for_each(|x| *x /= z);
            }
        }
        let frames = (0..config.n_predicates)
            .map(|p| {
                let mut f: Vec<RoleId> = (0..config.frame_size).map(|i| RoleId(((p + i) % k) as u16)).collect();
                f.sort();
                f
            })
            .collect();
        let predicate_lemmas: Vec<String> = (0..config.n_predicates).map(|p| format!("pred{p}")).collect();
        let fillers = |prefix: &str| (0..config.fillers_per_domain).map(|i| format!("{prefix}{i}")).collect();
        Ok(SyntheticOracle {
            config: config.clone(),
            seed,
            roles: RoleInventory::first(k)?,
            lemmas,
            emission,
            verbal_emission,
            frames,
            verbal_predicates: predicate_lemmas.iter().map(|p| format!("{p}ed")).collect(),
            nominal_predicates: predicate_lemmas.iter().map(|p| format!("{p}ion")).collect(),
            predicate_lemmas,
            verbal_context: fillers("vf"),
            nominal_context: fillers("nf"),
            hidden: BTreeMap::new(),
        })
    }

    pub fn n_topics(&self) -> usize {
        self.emission[0].len()
    }

    /// p(lemma | role), marginalizing the uniform topic.
    pub fn role_lemma_distribution(&self, role: RoleId) -> Vec<f64> {
        let rows = &self.emission[role.index()];
        let t = rows.len() as f64;
        (0..self.lemmas.len()).map(|l| rows.iter().map(|row| row[l]).sum::<f64>() / t).collect()
    }

    fn draw(&self, domain: Domain, rng: &mut ChaCha8Rng) -> Draw {
        let cfg = &self.config;
        let predicate = rng.random_range(0..cfg.n_predicates);
        let m = rng.random_range(cfg.min_args..=cfg.max_args);
        let frame = &self.frames[predicate];
        let mut roles: Vec<RoleId> = index::sample(rng, frame.len(), m).into_iter().map(|i| frame[i]).collect();
        roles.sort();
        let topic = rng.random_range(0..self.n_topics());
        let lemmas = roles
            .iter()
            .map(|r| {
                let table = if domain == Domain::Verbal { &self.verbal_emission } else { &self.emission };
                let dist = WeightedIndex::new(&table[r.index()][topic]).expect("emission rows are valid");
                dist.sample(rng)
            })
            .collect();
        Draw { predicate, roles, lemmas }
    }

    fn render(
        &self,
        draw: &Draw,
        domain: Domain,
        id: String,
        labeled: bool,
        rng: &mut ChaCha8Rng,
    ) -> AnnotatedSentence {
        let cfg = &self.config;
        let verbal_layout = domain == Domain::Verbal || cfg.shared_context;
        enum Unit {
            Pred,
            Arg(usize),
            Filler(String),
        }
        let mut units: Vec<Unit> = Vec::new();
        let mut order: Vec<usize> = (0..draw.roles.len()).collect();
        if !verbal_layout {
            order.shuffle(rng);
        }
        units.extend(order.iter().map(|&i| Unit::Arg(i)));
        let pred_pos = if verbal_layout { 1.min(units.len()) } else { rng.random_range(0..=units.len()) };
        units.insert(pred_pos, Unit::Pred);
        let context = if verbal_layout { &self.verbal_context } else { &self.nominal_context };
        let n_fill = rng.random_range(cfg.min_fillers..=cfg.max_fillers);
        for _ in 0..n_fill {
            let word = context[rng.random_range(0..context.len())].clone();
            let at = rng.random_range(0..=units.len());
            units.insert(at, Unit::Filler(word));
        }

        let mut tokens = Vec::new();
        let mut pred_index = 0;
        let mut arg_index = vec![0; draw.roles.len()];
        // heads are fixed after the predicate index is known
        let mut pending: Vec<(usize, Option<usize>)> = Vec::new();
        let tok = |surface: &str, lemma: &str, pos: &str, deprel: &str| Token {
            surface: surface.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            head: None,
            deprel: deprel.to_string(),
        };
        for u in &units {
            match u {
                Unit::Pred => {
                    pred_index = tokens.len();
                    let (surface, pos) = if domain == Domain::Verbal {
                        (&self.verbal_predicates[draw.predicate], "VBD")
                    } else {
                        (&self.nominal_predicates[draw.predicate], "NN")
                    };
                    tokens.push(tok(surface, surface, pos, "ROOT"));
                    pending.push((tokens.len() - 1, None));
                }
                Unit::Arg(i) => {
                    let marker = if verbal_layout {
                        let r = if rng.random_bool(cfg.marker_reliability) {
                            draw.roles[*i].index()
                        } else {
                            rng.random_range(0..cfg.n_roles)
                        };
                        format!("vm{r}")
                    } else {
                        format!("nc{}", rng.random_range(0..cfg.connectors))
                    };
                    tokens.push(tok(&marker, &marker, "IN", "MARK"));
                    let lemma = &self.lemmas[draw.lemmas[*i]];
                    tokens.push(tok(lemma, lemma, "NN", "ARG"));
                    arg_index[*i] = tokens.len() - 1;
                    pending.push((tokens.len() - 2, Some(tokens.len() - 1)));
                    pending.push((tokens.len() - 1, Some(usize::MAX)));
                }
                Unit::Filler(w) => {
                    tokens.push(tok(w, w, "JJ", "MOD"));
                    pending.push((tokens.len() - 1, Some(usize::MAX)));
                }
            }
        }
        for (i, h) in pending {
            tokens[i].head = h.map(|h| if h == usize::MAX { pred_index } else { h });
        }
        let arguments = (0..draw.roles.len())
            .map(|i| ArgumentSlot {
                token_index: arg_index[i],
                lemma: self.lemmas[draw.lemmas[i]].clone(),
                gold_role: labeled.then_some(draw.roles[i]),
            })
            .collect();
        let predicate = PredicateInstance {
            token_index: pred_index,
            lemma: self.predicate_lemmas[draw.predicate].clone(),
            domain,
            arguments,
        };
        AnnotatedSentence { id, tokens, predicates: vec![predicate] }
    }

    fn generate(
        &self,
        n: usize,
        domain: Domain,
        prefix: &str,
        labeled: bool,
        rng: &mut ChaCha8Rng,
    ) -> Vec<AnnotatedSentence> {
        (0..n)
            .map(|i| {
                let draw = self.draw(domain, rng);
                self.render(&draw, domain, format!("{prefix}{i}"), labeled, rng)
            })
            .collect()
    }

    /// Fresh gold-labeled instances from the same generator, e.g. for dev or test sets.
    pub fn held_out(&self, n: usize, domain: Domain, seed: u64) -> Result<Corpus> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prefix = format!("h{seed}_");
        let sentences = self.generate(n, domain, &prefix, true, &mut rng);
        Corpus::new(domain, self.roles.clone(), sentences)
    }

    /// Copy of `corpus` with the hidden gold roles attached.
    pub fn reveal(&self, corpus: &Corpus) -> Result<Corpus> {
        let mut sentences = corpus.sentences().to_vec();
        for s in &mut sentences {
            let id = s.id.clone();
            for p in &mut s.predicates {
                let roles = self
                    .hidden
                    .get(&format!("{id}:{}", p.token_index))
                    .ok_or_else(|| Error::Incompatible(format!("no hidden labels for sentence {id}")))?;
                if roles.len() != p.arguments.len() {
                    return Err(Error::Incompatible(format!("hidden label count mismatch in {id}")));
                }
                for (a, r) in p.arguments.iter_mut().zip(roles) {
                    a.gold_role = Some(*r);
                }
            }
        }
        Corpus::new(corpus.domain(), self.roles.clone(), sentences)
    }

    /// Per-slot role posteriors p(y_i | predicate, lemmas) by enumerating
    /// topics and injective role assignments from the predicate's frame,
    /// under the unrestricted (nominal) emission table.
    pub fn posterior(&self, predicate: &str, lemmas: &[&str]) -> Result<Vec<Vec<f64>>> {
        let p = self
            .predicate_lemmas
            .iter()
            .position(|x| x == predicate)
            .ok_or_else(|| Error::Vocabulary { kind: "predicate", value: predicate.to_string() })?;
        let ids: Vec<Option<usize>> = lemmas.iter().map(|l| self.lemmas.iter().position(|x| x == l)).collect();
        let m = lemmas.len();
        let k = self.config.n_roles;
        let mut post = vec![vec![0.0; k]; m];
        if m == 0 {
            return Ok(post);
        }
        if m < self.config.min_args || m > self.config.max_args {
            return Err(Error::Incompatible(format!("{m} arguments outside the generator's range")));
        }
        let frame = &self.frames[p];
        let mut assignment = Vec::with_capacity(m);
        let mut used = vec![false; frame.len()];
        let mut total = 0.0;
        enumerate(frame, m, &mut assignment, &mut used, &mut |roles: &[RoleId]| {
            let mut w = 0.0;
            for t in 0..self.n_topics() {
                let mut prod = 1.0;
                for (r, l) in roles.iter().zip(&ids) {
                    prod *= l.map_or(0.0, |l| self.emission[r.index()][t][l]);
                }
                w += prod;
            }
            if w > 0.0 {
                total += w;
                for (i, r) in roles.iter().enumerate() {
                    post[i][r.index()] += w;
                }
            }
        });
        if total > 0.0 {
            for row in &mut post {
                row.iter_mut().for_each(|x| *x /= total);
            }
        }
        Ok(post)
    }

    /// Argmax of [`posterior`](Self::posterior) per slot; ties go to the lower role id.
    pub fn bayes_predict(&self, predicate: &str, lemmas: &[&str]) -> Result<Vec<RoleId>> {
        Ok(self.posterior(predicate, lemmas)?.iter().map(|row| RoleId(argmax(row) as u16)).collect())
    }

    /// Accuracy of the Bayes predictor on a gold-labeled corpus.
    pub fn bayes_accuracy(&self, corpus: &Corpus) -> Result<f64> {
        let (mut correct, mut total) = (0usize, 0usize);
        for (_, p) in corpus.instances() {
            let lemmas: Vec<&str> = p.arguments.iter().map(|a| a.lemma.as_str()).collect();
            let pred = self.bayes_predict(&p.lemma, &lemmas)?;
            for (a, r) in p.arguments.iter().zip(pred) {
                let gold = a.gold_role.ok_or_else(|| Error::Evaluation("unlabeled argument".into()))?;
                correct += (gold == r) as usize;
                total += 1;
            }
        }
        if total == 0 {
            return Err(Error::Evaluation("no arguments".into()));
        }
        Ok(correct as f64 / total as f64)
    }

    /// Expected per-argument accuracy of the Bayes predictor under the
    /// generator, by exhaustive enumeration of (predicate, m, roles, topic, lemmas).
    pub fn exact_bayes_accuracy(&self) -> f64 {
        let cfg = &self.config;
        let n_m = (cfg.max_args - cfg.min_args + 1) as f64;
        let t_count = self.n_topics();
        let mut expected_correct = 0.0;
        let mut expected_args = 0.0;
        for (p, frame) in self.frames.iter().enumerate() {
            for m in cfg.min_args..=cfg.max_args {
                let subsets = choose(frame.len(), m) as f64;
                let base = 1.0 / (cfg.n_predicates as f64 * n_m * subsets * t_count as f64);
                let mut combo = Vec::new();
                for_each_subset(frame, m, 0, &mut combo, &mut |roles: &[RoleId]| {
                    for t in 0..t_count {
                        let supports: Vec<Vec<(usize, f64)>> = roles
                            .iter()
                            .map(|r| {
                                self.emission[r.index()][t]
                                    .iter()
                                    .copied()
                                    .enumerate()
                                    .filter(|(_, w)| *w > 0.0)
                                    .collect()
                            })
                            .collect();
                        let mut choice = vec![0usize; m];
                        loop {
                            let mut prob = base;
                            let mut names = Vec::with_capacity(m);
                            for (i, &c) in choice.iter().enumerate() {
                                prob *= supports[i][c].1;
                                names.push(self.lemmas[supports[i][c].0].as_str());
                            }
                            let pred =
                                self.bayes_predict(&self.predicate_lemmas[p], &names).expect("in-range instance");
                            let hits = pred.iter().zip(roles).filter(|(a, b)| a == b).count();
                            expected_correct += prob * hits as f64;
                            expected_args += prob * m as f64;
                            // odometer increment
                            let mut i = 0;
                            while i < m {
                                choice[i] += 1;
                                if choice[i] < supports[i].len() {
                                    break;
                                }
                                choice[i] = 0;
                                i += 1;
                            }
                            if i == m {
                                break;
                            }
                        }
                    }
                });
            }
        }
        expected_correct / expected_args
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[best] {
            best = i;
        }
    }
    best
}

fn choose(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn for_each_subset(items: &[RoleId], k: usize, start: usize, acc: &mut Vec<RoleId>, f: &mut dyn FnMut(&[RoleId])) {
    if acc.len() == k {
        f(acc);
        return;
    }
    for i in start..items.len() {
        acc.push(items[i]);
        for_each_subset(items, k, i + 1, acc, f);
        acc.pop();
    }
}

fn enumerate(frame: &[RoleId], m: usize, acc: &mut Vec<RoleId>, used: &mut [bool], f: &mut dyn FnMut(&[RoleId])) {
    if acc.len() == m {
        f(acc);
        return;
    }
    for i in 0..frame.len() {
        if !used[i] {
            used[i] = true;
            acc.push(frame[i]);
            enumerate(frame, m, acc, used, f);
            acc.pop();
            used[i] = false;
        }
    }
}

/// Labeled verbal corpus, unlabeled nominal corpus (gold roles kept in the
/// oracle) and the oracle itself.
pub fn generate_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<(Corpus, Corpus, SyntheticOracle)> {
    let mut oracle = SyntheticOracle::build(cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let verbal = oracle.generate(cfg.n_verbal, Domain::Verbal, "v", true, &mut rng);
    let mut nominal = Vec::with_capacity(cfg.n_nominal);
    for s in oracle.generate(cfg.n_nominal, Domain::Nominal, "n", true, &mut rng) {
        let p = &s.predicates[0];
        let gold: Vec<RoleId> = p.arguments.iter().map(|a| a.gold_role.expect("generated labeled")).collect();
        oracle.hidden.insert(s.instance_id(p), gold);
        nominal.push(s);
    }
    let roles = oracle.roles.clone();
    let verbal = Corpus::new(Domain::Verbal, roles.clone(), verbal)?;
    let nominal = Corpus::new(Domain::Nominal, roles, nominal)?.without_labels();
    Ok((verbal, nominal, oracle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_corpus;

    #[test]
    fn verbal_coverage_hides_the_zipf_tail_from_verbal_text() {
        let cfg = SyntheticConfig {
            lemmas_per_cell: 4,
            verbal_coverage: 0.5,
            n_verbal: 400,
            n_nominal: 400,
            ..Default::default()
        };
        let (v, _, o) = generate_synthetic(&cfg, 3).unwrap();
        for role in &o.verbal_emission {
            for row in role {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert_eq!(row.iter().filter(|&&w| w > 0.0).count(), 2 + 2);
            }
        }
        let hidden: Vec<&str> = o
            .lemmas
            .iter()
            .enumerate()
            .filter(|&(l, _)| o.verbal_emission.iter().all(|role| role.iter().all(|row| row[l] == 0.0)))
            .map(|(_, s)| s.as_str())
            .collect();
        assert_eq!(hidden.len(), 6 * 3 * 2);
        for (_, p) in v.instances() {
            assert!(p.arguments.iter().all(|a| !hidden.contains(&a.lemma.as_str())));
        }
        let test = o.held_out(2000, Domain::Nominal, 5).unwrap();
        assert!(test.instances().any(|(_, p)| p.arguments.iter().any(|a| hidden.contains(&a.lemma.as_str()))));
    }

    #[test]
    fn emission_rows_are_distributions() {
        let (_, _, o) =
            generate_synthetic(&SyntheticConfig { n_verbal: 1, n_nominal: 1, ..Default::default() }, 0).unwrap();
        for role in &o.emission {
            for row in role {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        for r in o.roles.ids() {
            assert!((o.role_lemma_distribution(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_many_roles_per_instance_is_config_error() {
        let cfg = SyntheticConfig { n_roles: 3, frame_size: 3, max_args: 4, ..SyntheticConfig::small() };
        assert!(matches!(generate_synthetic(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn two_role_instance_draws_from_both_role_distributions() {
        // K=3, exactly two arguments per instance
        let cfg = SyntheticConfig { min_args: 2, max_args: 2, n_verbal: 1, n_nominal: 1, ..SyntheticConfig::small() };
        let (v, _, o) = generate_synthetic(&cfg, 11).unwrap();
        let (_, p) = v.instances().next().unwrap();
        assert_eq!(p.arguments.len(), 2);

        // replay the same draws with an independent copy of the stream
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draw = o.draw(Domain::Nominal, &mut rng);
        let gold: Vec<RoleId> = p.arguments.iter().map(|a| a.gold_role.unwrap()).collect();
        assert_eq!(gold, draw.roles);
        for (a, (r, l)) in p.arguments.iter().zip(draw.roles.iter().zip(&draw.lemmas)) {
            assert_eq!(a.lemma, o.lemmas[*l]);
            assert!(o.role_lemma_distribution(*r)[*l] > 0.0);
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = SyntheticConfig::small();
        let bytes = |seed| {
            let (v, n, o) = generate_synthetic(&cfg, seed).unwrap();
            let mut buf = Vec::new();
            write_corpus(&v, &mut buf).unwrap();
            write_corpus(&n, &mut buf).unwrap();
            buf.extend(serde_json::to_vec(&o).unwrap());
            buf
        };
        assert_eq!(bytes(5), bytes(5));
        assert_ne!(bytes(5), bytes(6));
    }

    #[test]
    fn peaked_preferences_are_fully_recoverable() {
        let cfg = SyntheticConfig { peaked: true, ..SyntheticConfig::small() };
        let (_, n, o) = generate_synthetic(&cfg, 2).unwrap();
        assert_eq!(o.bayes_accuracy(&o.reveal(&n).unwrap()).unwrap(), 1.0);
        assert_eq!(o.exact_bayes_accuracy(), 1.0);
    }

    #[test]
    fn nominal_labels_are_hidden_and_revealable() {
        let (_, n, o) = generate_synthetic(&SyntheticConfig::small(), 4).unwrap();
        assert!(n.instances().all(|(_, p)| p.arguments.iter().all(|a| a.gold_role.is_none())));
        let revealed = o.reveal(&n).unwrap();
        assert!(revealed.instances().all(|(_, p)| p.is_labeled()));
    }

    #[test]
    fn trees_are_valid_and_arguments_are_nouns() {
        let cfg = SyntheticConfig { n_verbal: 200, n_nominal: 200, ..Default::default() };
        let (v, n, _) = generate_synthetic(&cfg, 8).unwrap();
        for c in [&v, &n] {
            for (s, p) in c.instances() {
                s.validate_tree().unwrap();
                assert_eq!(s.tokens[p.token_index].head, None);
                for a in &p.arguments {
                    assert_eq!(s.tokens[a.token_index].pos, "NN");
                    assert_eq!(s.tokens[a.token_index].head, Some(p.token_index));
                }
            }
        }
    }

    #[test]
    fn domains_use_disjoint_context_words() {
        let (v, n, _) = generate_synthetic(&SyntheticConfig::default(), 1).unwrap();
        let words = |c: &Corpus| -> std::collections::BTreeSet<String> {
            c.instances()
                .flat_map(|(s, p)| {
                    let args = p.argument_indices();
                    s.tokens.iter().enumerate().filter(move |(i, _)| !args.contains(i)).map(|(_, t)| t.surface.clone())
                })
                .collect()
        };
        assert!(words(&v).is_disjoint(&words(&n)));
    }

    #[test]
    fn exact_bayes_matches_empirical() {
        let cfg = SyntheticConfig { n_verbal: 1, n_nominal: 1, ..Default::default() };
        let (_, _, o) = generate_synthetic(&cfg, 0).unwrap();
        let exact = o.exact_bayes_accuracy();
        let test = o.held_out(20_000, Domain::Nominal, 99).unwrap();
        let empirical = o.bayes_accuracy(&test).unwrap();
        // ~50k arguments: standard error below 0.002
        assert!((exact - empirical).abs() < 0.01, "exact {exact} empirical {empirical}");
        assert!(exact < 1.0 && exact > 0.5);
    }
}

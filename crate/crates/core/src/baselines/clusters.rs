//! Unsupervised role-induction baselines that emit cluster ids.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use kodama::{linkage, Method};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::evaluation::{records_with, Label, PredictionRecord};

/// Every argument in one cluster.
pub fn all_a0(corpus: &Corpus) -> Result<Vec<PredictionRecord>> {
    records_with(corpus, |_, p| Ok(p.arguments.iter().map(|_| (Label::Cluster(0), false)).collect()))
}

/// One cluster per dependency relation of the argument to its head,
/// numbered in sorted relation order.
pub fn syntfun(corpus: &Corpus) -> Result<Vec<PredictionRecord>> {
    let rels: BTreeSet<&str> = corpus
        .instances()
        .flat_map(|(s, p)| p.arguments.iter().map(move |a| s.tokens[a.token_index].deprel.as_str()))
        .collect();
    let ids: BTreeMap<&str, usize> = rels.into_iter().enumerate().map(|(i, r)| (r, i)).collect();
    records_with(corpus, |s, p| {
        Ok(p.arguments.iter().map(|a| (Label::Cluster(ids[s.tokens[a.token_index].deprel.as_str()]), false)).collect())
    })
}

/// Lemma vectors, e.g. from a word2vec text file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Embeddings {
    pub dim: usize,
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl Embeddings {
    pub fn new(dim: usize) -> Self {
        Embeddings { dim, vectors: BTreeMap::new() }
    }

    pub fn insert(&mut self, word: &str, v: Vec<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Incompatible(format!(
                "vector for `{word}` has {} components, expected {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("embedding of `{word}`")));
        }
        self.vectors.insert(word.to_string(), v);
        Ok(())
    }

    /// Reads `word x1 x2 …` lines; a leading `count dim` header line is skipped.
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let mut emb: Option<Embeddings> = None;
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() || (i == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok())) {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let v = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("{f}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            let e = emb.get_or_insert_with(|| Embeddings::new(v.len()));
            e.insert(fields[0], v).map_err(|err| parse_err(err.to_string()))?;
        }
        emb.ok_or_else(|| Error::Parse { line: 0, message: "no embedding vectors".into() })
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(|v| v.as_slice())
    }
}

/// 1 − cosine similarity; a zero vector is at distance 1 from everything.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    (1.0 - dot / (nu * nv)).clamp(0.0, 2.0)
}

/// Average-linkage agglomerative clustering of `words` cut at `k` clusters.
/// Cluster ids follow the first member in `words` order.
pub fn agglomerate(words: &[&str], emb: &Embeddings, k: usize) -> Result<BTreeMap<String, usize>> {
    if k == 0 {
        return Err(Error::config("cluster count must be positive"));
    }
    let vecs: Vec<&[f64]> = words
        .iter()
        .map(|w| emb.get(w).ok_or_else(|| Error::Vocabulary { kind: "embedding", value: w.to_string() }))
        .collect::<Result<_>>()?;
    let n = vecs.len();
    // union-find over dendrogram labels: leaves 0..n, step i creates n + i
    let mut parent: Vec<usize> = (0..2 * n.max(1)).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    if n > 1 {
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                condensed.push(cosine_distance(vecs[i], vecs[j]));
            }
        }
        let dendrogram = linkage(&mut condensed, n, Method::Average);
        for (s, step) in dendrogram.steps().iter().take(n.saturating_sub(k)).enumerate() {
            let (a, b) = (root(&mut parent, step.cluster1), root(&mut parent, step.cluster2));
            parent[a] = n + s;
            parent[b] = n + s;
        }
    }
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        let r = root(&mut parent, i);
        let next = ids.len();
        out.insert(w.to_string(), *ids.entry(r).or_insert(next));
    }
    Ok(out)
}

/// Clusters the corpus's argument lemmas by their embeddings into `k`
/// clusters. Lemmas without a vector go to the reserved cluster `k`, flagged.
pub fn arg2vec(corpus: &Corpus, emb: &Embeddings, k: usize) -> Result<Vec<PredictionRecord>> {
    let lemmas: BTreeSet<&str> = corpus
        .instances()
        .flat_map(|(_, p)| p.arguments.iter().map(|a| a.lemma.as_str()))
        .filter(|l| emb.get(l).is_some())
        .collect();
    let words: Vec<&str> = lemmas.into_iter().collect();
    let clusters = agglomerate(&words, emb, k)?;
    records_with(corpus, |_, p| {
        Ok(p.arguments
            .iter()
            .map(|a| match clusters.get(&a.lemma) {
                Some(&c) => (Label::Cluster(c), false),
                None => (Label::Cluster(k), true),
            })
            .collect())
    })
}

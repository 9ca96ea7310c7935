use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Handle to a tensor in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Init {
    Zeros,
    Uniform(f64),
    /// Uniform in ±sqrt(6 / (rows + cols)).
    Glorot,
}

/// A named row-major matrix (a vector is a single column) with its gradient
/// accumulator and optimizer slots.
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
    pub slots: BTreeMap<String, Vec<f64>>,
}

impl Param {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.value[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
    index: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, rows: usize, cols: usize, init: Init, rng: &mut ChaCha8Rng) -> Result<ParamId> {
        if self.index.contains_key(name) {
            return Err(Error::config(format!("duplicate parameter name `{name}`")));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::config(format!("parameter `{name}` has an empty shape {rows}x{cols}")));
        }
        let n = rows * cols;
        let value = match init {
            Init::Zeros => vec![0.0; n],
            Init::Uniform(a) => (0..n).map(|_| rng.random_range(-a..a)).collect(),
            Init::Glorot => {
                let a = (6.0 / (rows + cols) as f64).sqrt();
                (0..n).map(|_| rng.random_range(-a..a)).collect()
            }
        };
        Ok(self.insert(Param { name: name.to_string(), rows, cols, value, grad: vec![0.0; n], slots: BTreeMap::new() }))
    }

    pub(crate) fn insert(&mut self, p: Param) -> ParamId {
        let id = ParamId(self.params.len());
        self.index.insert(p.name.clone(), id);
        self.params.push(p);
        id
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied()
    }

    pub fn get(&self, id: ParamId) -> &Param {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param {
        &mut self.params[id.0]
    }

    pub fn by_name(&self, name: &str) -> Result<&Param> {
        self.id(name).map(|id| self.get(id)).ok_or_else(|| Error::Vocabulary { kind: "parameter", value: name.into() })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(Param::len).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Adds `scale * grads` into the gradient accumulators.
    pub fn accumulate(&mut self, grads: &Grads, scale: f64) {
        for (id, g) in &grads.map {
            let p = &mut self.params[id.0];
            match g {
                ParamGrad::Dense(d) => p.grad.iter_mut().zip(d).for_each(|(a, b)| *a += scale * b),
                ParamGrad::Rows(rows) => {
                    for (&r, d) in rows {
                        let dst = &mut p.grad[r * p.cols..(r + 1) * p.cols];
                        dst.iter_mut().zip(d).for_each(|(a, b)| *a += scale * b);
                    }
                }
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.value.iter().all(|x| x.is_finite()))
    }

    /// SHA-256 over names, shapes and value bits, in insertion order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.params {
            h.update((p.name.len() as u64).to_le_bytes());
            h.update(p.name.as_bytes());
            h.update((p.rows as u64).to_le_bytes());
            h.update((p.cols as u64).to_le_bytes());
            for x in &p.value {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParamGrad {
    Dense(Vec<f64>),
    /// Row-sparse gradient, from embedding lookups.
    Rows(BTreeMap<usize, Vec<f64>>),
}

/// Gradients w.r.t. parameters produced by one backward pass.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grads {
    pub(crate) map: BTreeMap<ParamId, ParamGrad>,
}

impl Grads {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn params(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.map.keys().copied()
    }

    pub(crate) fn dense_mut(&mut self, id: ParamId, len: usize, cols: usize) -> &mut Vec<f64> {
        let entry = self.map.entry(id).or_insert_with(|| ParamGrad::Dense(vec![0.0; len]));
        if let ParamGrad::Rows(rows) = entry {
            let mut d = vec![0.0; len];
            for (&r, v) in rows.iter() {
                d[r * cols..(r + 1) * cols].iter_mut().zip(v).for_each(|(a, b)| *a += b);
            }
            *entry = ParamGrad::Dense(d);
        }
        match entry {
            ParamGrad::Dense(d) => d,
            ParamGrad::Rows(_) => unreachable!(),
        }
    }

    pub(crate) fn add_row(&mut self, id: ParamId, row: usize, cols: usize, g: &[f64]) {
        match self.map.entry(id).or_insert_with(|| ParamGrad::Rows(BTreeMap::new())) {
            ParamGrad::Dense(d) => d[row * cols..(row + 1) * cols].iter_mut().zip(g).for_each(|(a, b)| *a += b),
            ParamGrad::Rows(rows) => {
                let dst = rows.entry(row).or_insert_with(|| vec![0.0; cols]);
                dst.iter_mut().zip(g).for_each(|(a, b)| *a += b);
            }
        }
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Grads, scale: f64, store: &ParamStore) {
        for (&id, g) in &other.map {
            let p = store.get(id);
            match g {
                ParamGrad::Dense(d) => {
                    let dst = self.dense_mut(id, p.len(), p.cols);
                    dst.iter_mut().zip(d).for_each(|(a, b)| *a += scale * b);
                }
                ParamGrad::Rows(rows) => {
                    for (&r, v) in rows {
                        let scaled: Vec<f64> = v.iter().map(|x| scale * x).collect();
                        self.add_row(id, r, p.cols, &scaled);
                    }
                }
            }
        }
    }

    /// Dense copy of one parameter's gradient (zeros when absent).
    pub fn dense(&self, id: ParamId, store: &ParamStore) -> Vec<f64> {
        let p = store.get(id);
        let mut out = vec![0.0; p.len()];
        match self.map.get(&id) {
            None => {}
            Some(ParamGrad::Dense(d)) => out.copy_from_slice(d),
            Some(ParamGrad::Rows(rows)) => {
                for (&r, v) in rows {
                    out[r * p.cols..(r + 1) * p.cols].iter_mut().zip(v).for_each(|(a, b)| *a += b);
                }
            }
        }
        out
    }

    fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.map.values().flat_map(|g| -> Box<dyn Iterator<Item = f64> + '_> {
            match g {
                ParamGrad::Dense(d) => Box::new(d.iter().copied()),
                ParamGrad::Rows(rows) => Box::new(rows.values().flatten().copied()),
            }
        })
    }

    pub fn l2_norm(&self) -> f64 {
        self.values().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.values().all(f64::is_finite)
    }

    pub fn scale(&mut self, s: f64) {
        for g in self.map.values_mut() {
            match g {
                ParamGrad::Dense(d) => d.iter_mut().for_each(|x| *x *= s),
                ParamGrad::Rows(rows) => rows.values_mut().flatten().for_each(|x| *x *= s),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn names_are_unique() {
        let mut s = ParamStore::new();
        s.add("w", 2, 3, Init::Glorot, &mut rng()).unwrap();
        assert!(s.add("w", 1, 1, Init::Zeros, &mut rng()).is_err());
        assert_eq!(s.get(s.id("w").unwrap()).grad.len(), 6);
    }

    #[test]
    fn init_is_reproducible_and_bounded() {
        let build = || {
            let mut s = ParamStore::new();
            s.add("e", 10, 4, Init::Uniform(0.1), &mut rng()).unwrap();
            s.add("w", 4, 4, Init::Glorot, &mut rng()).unwrap();
            s
        };
        assert_eq!(build().digest(), build().digest());
        let s = build();
        assert!(s.by_name("e").unwrap().value.iter().all(|x| x.abs() < 0.1));
        let a = (6.0f64 / 8.0).sqrt();
        assert!(s.by_name("w").unwrap().value.iter().all(|x| x.abs() < a));
    }

    #[test]
    fn sparse_and_dense_gradients_merge() {
        let mut s = ParamStore::new();
        let id = s.add("e", 3, 2, Init::Zeros, &mut rng()).unwrap();
        let mut g = Grads::new();
        g.add_row(id, 1, 2, &[1.0, 2.0]);
        g.add_row(id, 1, 2, &[1.0, 2.0]);
        assert_eq!(g.dense(id, &s), vec![0.0, 0.0, 2.0, 4.0, 0.0, 0.0]);
        g.dense_mut(id, 6, 2)[0] = 5.0;
        assert_eq!(g.dense(id, &s), vec![5.0, 0.0, 2.0, 4.0, 0.0, 0.0]);
        s.accumulate(&g, 0.5);
        assert_eq!(s.get(id).grad, vec![2.5, 0.0, 1.0, 2.0, 0.0, 0.0]);
        assert!((g.l2_norm() - (25.0f64 + 4.0 + 16.0).sqrt()).abs() < 1e-12);
    }
}

//! Reverse-mode differentiation over vector-valued nodes.
//!
//! A [`Tape`] records every operation of one forward pass. Scalars are
//! length-1 vectors. Parameters are read from a borrowed [`ParamStore`];
//! [`Tape::backward`] returns their gradients as [`Grads`] without touching
//! the store.

use super::params::{Grads, ParamId, ParamStore};
use crate::error::{Error, Result};

/// Node handle on a tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(ParamId),
    Row(ParamId, usize),
    MatVec(ParamId, Var),
    MatTVec(ParamId, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    /// `x + c` for a constant `c` folded into the value; gradient passes through.
    Shift(Var),
    Sigmoid(Var),
    Tanh(Var),
    Exp(Var),
    /// `ln(max(x, floor))`.
    Ln(Var, f64),
    Concat(Vec<Var>),
    Slice(Var, usize),
    SumVecs(Vec<Var>),
    SumElems(Var),
    Dot(Var, Var),
    Softmax(Var),
    LogSoftmax(Var),
    Pick(Var, usize),
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'a> {
    params: &'a ParamStore,
    nodes: Vec<Node>,
}

impl<'a> Tape<'a> {
    pub fn new(params: &'a ParamStore) -> Self {
        Tape { params, nodes: Vec::with_capacity(256) }
    }

    pub fn params(&self) -> &'a ParamStore {
        self.params
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value[0]
    }

    pub fn dim(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    fn map(&mut self, x: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let v = self.value(x).iter().map(|&a| f(a)).collect();
        self.push(v, op)
    }

    pub fn input(&mut self, value: Vec<f64>) -> Var {
        self.push(value, Op::Input)
    }

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.input(value)
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.input(vec![0.0; n])
    }

    /// Whole parameter, flattened.
    pub fn param(&mut self, id: ParamId) -> Var {
        let v = self.params.get(id).value.clone();
        self.push(v, Op::Param(id))
    }

    /// One row of a parameter matrix (embedding lookup).
    pub fn row(&mut self, id: ParamId, r: usize) -> Result<Var> {
        let p = self.params.get(id);
        if r >= p.rows {
            return Err(Error::Index { index: r, len: p.rows });
        }
        let v = p.row(r).to_vec();
        Ok(self.push(v, Op::Row(id, r)))
    }

    /// `W x` for a `rows x cols` parameter `W`.
    pub fn matvec(&mut self, w: ParamId, x: Var) -> Var {
        let p = self.params.get(w);
        let xv = self.value(x);
        assert_eq!(xv.len(), p.cols, "matvec shape mismatch for `{}`", p.name);
        let out = (0..p.rows).map(|r| dot(p.row(r), xv)).collect();
        self.push(out, Op::MatVec(w, x))
    }

    /// `Wᵀ x` for a `rows x cols` parameter `W`.
    pub fn mat_t_vec(&mut self, w: ParamId, x: Var) -> Var {
        let p = self.params.get(w);
        let xv = self.value(x);
        assert_eq!(xv.len(), p.rows, "mat_t_vec shape mismatch for `{}`", p.name);
        let mut out = vec![0.0; p.cols];
        for (r, &xr) in xv.iter().enumerate() {
            if xr != 0.0 {
                out.iter_mut().zip(p.row(r)).for_each(|(o, w)| *o += xr * w);
            }
        }
        self.push(out, Op::MatTVec(w, x))
    }

    fn zip(&mut self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Var {
        let (va, vb) = (self.value(a), self.value(b));
        assert_eq!(va.len(), vb.len(), "elementwise shape mismatch");
        let v = va.iter().zip(vb).map(|(&x, &y)| f(x, y)).collect();
        self.push(v, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.map(a, |x| s * x, Op::Scale(a, s))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -1.0)
    }

    /// `a + c` with `c` held constant.
    pub fn shift(&mut self, a: Var, c: &[f64]) -> Var {
        let va = self.value(a);
        assert_eq!(va.len(), c.len(), "shift shape mismatch");
        let v = va.iter().zip(c).map(|(x, y)| x + y).collect();
        self.push(v, Op::Shift(a))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).iter().map(|x| x + c).collect();
        self.push(v, Op::Shift(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, f64::tanh, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, f64::exp, Op::Exp(a))
    }

    /// Natural log of `max(a, floor)`; zero gradient below the floor.
    pub fn ln(&mut self, a: Var, floor: f64) -> Var {
        self.map(a, |x| x.max(floor).ln(), Op::Ln(a, floor))
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut v = Vec::with_capacity(parts.iter().map(|&p| self.dim(p)).sum());
        for &p in parts {
            v.extend_from_slice(self.value(p));
        }
        self.push(v, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a)[start..start + len].to_vec();
        self.push(v, Op::Slice(a, start))
    }

    /// Elementwise sum of equal-length vectors, accumulated left to right.
    pub fn sum_vecs(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "sum of no vectors");
        let mut v = self.value(parts[0]).to_vec();
        for &p in &parts[1..] {
            v.iter_mut().zip(self.value(p)).for_each(|(a, b)| *a += b);
        }
        self.push(v, Op::SumVecs(parts.to_vec()))
    }

    /// Elementwise mean; the zero vector of length `dim` when `parts` is empty.
    pub fn mean_vecs(&mut self, parts: &[Var], dim: usize) -> Var {
        if parts.is_empty() {
            return self.zeros(dim);
        }
        let s = self.sum_vecs(parts);
        self.scale(s, 1.0 / parts.len() as f64)
    }

    pub fn sum_elems(&mut self, a: Var) -> Var {
        let s = self.value(a).iter().sum();
        self.push(vec![s], Op::SumElems(a))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let s = dot(self.value(a), self.value(b));
        self.push(vec![s], Op::Dot(a, b))
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let v = softmax(self.value(a));
        self.push(v, Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: Var) -> Var {
        let v = log_softmax(self.value(a));
        self.push(v, Op::LogSoftmax(a))
    }

    /// Element `i` as a scalar.
    pub fn pick(&mut self, a: Var, i: usize) -> Var {
        let v = vec![self.value(a)[i]];
        self.push(v, Op::Pick(a, i))
    }

    /// Sum of scalars in the given order.
    pub fn sum_scalars(&mut self, parts: &[Var]) -> Var {
        if parts.is_empty() {
            return self.zeros(1);
        }
        self.sum_vecs(parts)
    }

    /// Gradients of the scalar `out` with respect to every parameter it reads.
    pub fn backward(&self, out: Var) -> Grads {
        self.backward_with_inputs(out).0
    }

    /// Also returns the gradient of `out` at every input node (`None` elsewhere
    /// or when unreached), for checking gradients with respect to inputs.
    pub fn backward_with_inputs(&self, out: Var) -> (Grads, Vec<Option<Vec<f64>>>) {
        assert_eq!(self.dim(out), 1, "backward from a non-scalar");
        let mut g: Vec<Option<Vec<f64>>> = vec![None; out.0 + 1];
        g[out.0] = Some(vec![1.0]);
        let mut grads = Grads::new();

        // accumulate `d` into node v, allocating on first use
        fn add_into(g: &mut [Option<Vec<f64>>], v: Var, d: &[f64]) {
            match &mut g[v.0] {
                Some(x) if !x.is_empty() => x.iter_mut().zip(d).for_each(|(a, b)| *a += b),
                slot => *slot = Some(d.to_vec()),
            }
        }

        for i in (0..=out.0).rev() {
            let Some(gi) = g[i].take() else { continue };
            let node = &self.nodes[i];
            let y = &node.value;
            match &node.op {
                Op::Input => {
                    g[i] = Some(gi);
                    continue;
                }
                Op::Param(id) => {
                    let p = self.params.get(*id);
                    grads.dense_mut(*id, p.len(), p.cols).iter_mut().zip(&gi).for_each(|(a, b)| *a += b);
                }
                Op::Row(id, r) => {
                    let p = self.params.get(*id);
                    grads.add_row(*id, *r, p.cols, &gi);
                }
                Op::MatVec(w, x) => {
                    let p = self.params.get(*w);
                    let xv = self.value(*x);
                    let dw = grads.dense_mut(*w, p.len(), p.cols);
                    let mut dx = vec![0.0; p.cols];
                    for (r, &gr) in gi.iter().enumerate() {
                        if gr == 0.0 {
                            continue;
                        }
                        let row = &mut dw[r * p.cols..(r + 1) * p.cols];
                        row.iter_mut().zip(xv).for_each(|(a, b)| *a += gr * b);
                        dx.iter_mut().zip(p.row(r)).for_each(|(a, b)| *a += gr * b);
                    }
                    add_into(&mut g, *x, &dx);
                }
                Op::MatTVec(w, x) => {
                    let p = self.params.get(*w);
                    let xv = self.value(*x);
                    let dw = grads.dense_mut(*w, p.len(), p.cols);
                    let mut dx = vec![0.0; p.rows];
                    for (r, &xr) in xv.iter().enumerate() {
                        let row = &mut dw[r * p.cols..(r + 1) * p.cols];
                        row.iter_mut().zip(&gi).for_each(|(a, b)| *a += xr * b);
                        dx[r] = dot(p.row(r), &gi);
                    }
                    add_into(&mut g, *x, &dx);
                }
                Op::Add(a, b) => {
                    add_into(&mut g, *a, &gi);
                    add_into(&mut g, *b, &gi);
                }
                Op::Sub(a, b) => {
                    add_into(&mut g, *a, &gi);
                    let neg: Vec<f64> = gi.iter().map(|x| -x).collect();
                    add_into(&mut g, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let da: Vec<f64> = gi.iter().zip(self.value(*b)).map(|(g, y)| g * y).collect();
                    let db: Vec<f64> = gi.iter().zip(self.value(*a)).map(|(g, x)| g * x).collect();
                    add_into(&mut g, *a, &da);
                    add_into(&mut g, *b, &db);
                }
                Op::Scale(a, s) => {
                    let d: Vec<f64> = gi.iter().map(|x| s * x).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::Shift(a) => add_into(&mut g, *a, &gi),
                Op::Sigmoid(a) => {
                    let d: Vec<f64> = gi.iter().zip(y).map(|(g, s)| g * s * (1.0 - s)).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::Tanh(a) => {
                    let d: Vec<f64> = gi.iter().zip(y).map(|(g, t)| g * (1.0 - t * t)).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::Exp(a) => {
                    let d: Vec<f64> = gi.iter().zip(y).map(|(g, e)| g * e).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::Ln(a, floor) => {
                    let d: Vec<f64> =
                        gi.iter().zip(self.value(*a)).map(|(g, &x)| if x > *floor { g / x } else { 0.0 }).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.dim(*p);
                        add_into(&mut g, *p, &gi[off..off + n]);
                        off += n;
                    }
                }
                Op::Slice(a, start) => {
                    let mut d = vec![0.0; self.dim(*a)];
                    d[*start..*start + gi.len()].copy_from_slice(&gi);
                    add_into(&mut g, *a, &d);
                }
                Op::SumVecs(parts) => {
                    for p in parts {
                        add_into(&mut g, *p, &gi);
                    }
                }
                Op::SumElems(a) => {
                    let d = vec![gi[0]; self.dim(*a)];
                    add_into(&mut g, *a, &d);
                }
                Op::Dot(a, b) => {
                    let da: Vec<f64> = self.value(*b).iter().map(|y| gi[0] * y).collect();
                    let db: Vec<f64> = self.value(*a).iter().map(|x| gi[0] * x).collect();
                    add_into(&mut g, *a, &da);
                    add_into(&mut g, *b, &db);
                }
                Op::Softmax(a) => {
                    let s = dot(&gi, y);
                    let d: Vec<f64> = gi.iter().zip(y).map(|(g, p)| p * (g - s)).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::LogSoftmax(a) => {
                    let total: f64 = gi.iter().sum();
                    let d: Vec<f64> = gi.iter().zip(y).map(|(g, l)| g - l.exp() * total).collect();
                    add_into(&mut g, *a, &d);
                }
                Op::Pick(a, idx) => {
                    let mut d = vec![0.0; self.dim(*a)];
                    d[*idx] = gi[0];
                    add_into(&mut g, *a, &d);
                }
            }
        }
        (grads, g)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn log_softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    x.iter().map(|v| v - lse).collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

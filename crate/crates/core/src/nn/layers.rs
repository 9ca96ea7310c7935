use rand_chacha::ChaCha8Rng;

use super::params::{Init, ParamId, ParamStore};
use super::tape::{Tape, Var};
use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct Embedding {
    pub table: ParamId,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Embedding { table: store.add(name, rows, dim, Init::Uniform(0.1), rng)?, dim })
    }

    /// Row gather; out-of-range ids are an error.
    pub fn lookup(&self, t: &mut Tape, id: usize) -> Result<Var> {
        t.row(self.table, id)
    }

    pub fn embed(&self, t: &mut Tape, ids: &[usize]) -> Result<Vec<Var>> {
        ids.iter().map(|&i| self.lookup(t, i)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: Option<ParamId>,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        bias: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let w = store.add(&format!("{name}.w"), outputs, inputs, Init::Glorot, rng)?;
        let b = if bias { Some(store.add(&format!("{name}.b"), outputs, 1, Init::Zeros, rng)?) } else { None };
        Ok(Linear { w, b, inputs, outputs })
    }

    pub fn forward(&self, t: &mut Tape, x: Var) -> Var {
        let y = t.matvec(self.w, x);
        match self.b {
            Some(b) => {
                let bv = t.param(b);
                t.add(y, bv)
            }
            None => y,
        }
    }
}

/// affine → tanh → affine. The caller applies any output softmax.
#[derive(Clone, Copy, Debug)]
pub struct FeedForward {
    pub first: Linear,
    pub second: Linear,
}

impl FeedForward {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        hidden: usize,
        outputs: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        Ok(FeedForward {
            first: Linear::new(store, &format!("{name}.l1"), inputs, hidden, true, rng)?,
            second: Linear::new(store, &format!("{name}.l2"), hidden, outputs, true, rng)?,
        })
    }

    pub fn hidden(&self, t: &mut Tape, x: Var) -> Var {
        let h = self.first.forward(t, x);
        t.tanh(h)
    }

    pub fn forward(&self, t: &mut Tape, x: Var) -> Var {
        let h = self.hidden(t, x);
        self.second.forward(t, h)
    }
}

/// Unidirectional LSTM; gates packed as [input, forget, output, candidate].
#[derive(Clone, Copy, Debug)]
pub struct Lstm {
    pub w: ParamId,
    pub b: ParamId,
    pub inputs: usize,
    pub hidden: usize,
}

impl Lstm {
    pub fn new(store: &mut ParamStore, name: &str, inputs: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        let w = store.add(&format!("{name}.w"), 4 * hidden, inputs + hidden, Init::Glorot, rng)?;
        let b = store.add(&format!("{name}.b"), 4 * hidden, 1, Init::Zeros, rng)?;
        Ok(Lstm { w, b, inputs, hidden })
    }

    /// Hidden states in input order (`reverse` runs right to left but still
    /// returns the state for position i at index i).
    pub fn run(&self, t: &mut Tape, xs: &[Var], reverse: bool) -> Vec<Var> {
        let h_dim = self.hidden;
        let mut h = t.zeros(h_dim);
        let mut c = t.zeros(h_dim);
        let mut out = vec![h; xs.len()];
        let b = t.param(self.b);
        let order: Vec<usize> = if reverse { (0..xs.len()).rev().collect() } else { (0..xs.len()).collect() };
        for i in order {
            let xh = t.concat(&[xs[i], h]);
            let z0 = t.matvec(self.w, xh);
            let z = t.add(z0, b);
            let gi = t.slice(z, 0, h_dim);
            let gf = t.slice(z, h_dim, h_dim);
            let go = t.slice(z, 2 * h_dim, h_dim);
            let gc = t.slice(z, 3 * h_dim, h_dim);
            let (i_g, f_g, o_g) = (t.sigmoid(gi), t.sigmoid(gf), t.sigmoid(go));
            let cand = t.tanh(gc);
            let keep = t.mul(f_g, c);
            let write = t.mul(i_g, cand);
            c = t.add(keep, write);
            let tc = t.tanh(c);
            h = t.mul(o_g, tc);
            out[i] = h;
        }
        out
    }
}

/// One bidirectional layer with an optional highway connection:
/// `out = g ⊙ [h_fwd; h_bwd] + (1 - g) ⊙ carry(x)`, `g = σ(W [x; h] + b)`,
/// where `carry` is the identity when dimensions agree and a linear map otherwise.
#[derive(Clone, Copy, Debug)]
pub struct BiLayer {
    pub fwd: Lstm,
    pub bwd: Lstm,
    pub gate: Option<Linear>,
    pub carry: Option<Linear>,
}

#[derive(Clone, Debug)]
pub struct HighwayBiLstm {
    pub layers: Vec<BiLayer>,
    pub hidden: usize,
    pub highway: bool,
}

impl HighwayBiLstm {
    /// `hidden` is the per-direction width; outputs have `2 * hidden` entries.
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        hidden: usize,
        layers: usize,
        highway: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if layers == 0 {
            return Err(crate::Error::config("a BiLSTM needs at least one layer"));
        }
        let mut out = Vec::with_capacity(layers);
        let mut d_in = inputs;
        for l in 0..layers {
            let p = format!("{name}.l{l}");
            let fwd = Lstm::new(store, &format!("{p}.fwd"), d_in, hidden, rng)?;
            let bwd = Lstm::new(store, &format!("{p}.bwd"), d_in, hidden, rng)?;
            let (gate, carry) = if highway {
                let gate = Linear::new(store, &format!("{p}.gate"), d_in + 2 * hidden, 2 * hidden, true, rng)?;
                let carry = if d_in != 2 * hidden {
                    Some(Linear::new(store, &format!("{p}.carry"), d_in, 2 * hidden, false, rng)?)
                } else {
                    None
                };
                (Some(gate), carry)
            } else {
                (None, None)
            };
            out.push(BiLayer { fwd, bwd, gate, carry });
            d_in = 2 * hidden;
        }
        Ok(HighwayBiLstm { layers: out, hidden, highway })
    }

    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    /// Per-token encodings; an empty input gives an empty encoding.
    pub fn encode(&self, t: &mut Tape, inputs: &[Var]) -> Vec<Var> {
        let mut xs = inputs.to_vec();
        for layer in &self.layers {
            let f = layer.fwd.run(t, &xs, false);
            let b = layer.bwd.run(t, &xs, true);
            let mut next = Vec::with_capacity(xs.len());
            for i in 0..xs.len() {
                let h = t.concat(&[f[i], b[i]]);
                let y = match layer.gate {
                    None => h,
                    Some(gate) => {
                        let gx = t.concat(&[xs[i], h]);
                        let g0 = gate.forward(t, gx);
                        let g = t.sigmoid(g0);
                        let carry = match layer.carry {
                            Some(c) => c.forward(t, xs[i]),
                            None => xs[i],
                        };
                        // g*h + (1-g)*carry = carry + g*(h - carry)
                        let diff = t.sub(h, carry);
                        let gated = t.mul(g, diff);
                        t.add(carry, gated)
                    }
                };
                next.push(y);
            }
            xs = next;
        }
        xs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn zero_feedforward_gives_zero() {
        let mut s = ParamStore::new();
        let ff = FeedForward::new(&mut s, "ff", 3, 4, 2, &mut rng()).unwrap();
        s.iter_mut().for_each(|p| p.value.iter_mut().for_each(|x| *x = 0.0));
        let mut t = Tape::new(&s);
        let x = t.input(vec![0.3, -1.0, 2.0]);
        let y = ff.forward(&mut t, x);
        assert_eq!(t.value(y), &[0.0, 0.0]);
    }

    #[test]
    fn scalar_feedforward_first_layer_is_tanh() {
        let mut s = ParamStore::new();
        let ff = FeedForward::new(&mut s, "ff", 1, 1, 1, &mut rng()).unwrap();
        s.get_mut(ff.first.w).value[0] = 1.0;
        let mut t = Tape::new(&s);
        let x = t.input(vec![0.5]);
        let h = ff.hidden(&mut t, x);
        assert!((t.scalar(h) - 0.5f64.tanh()).abs() < 1e-15);
        assert!((t.scalar(h) - 0.4621).abs() < 1e-4);
    }

    fn tie_directions(s: &mut ParamStore, enc: &HighwayBiLstm) {
        for l in &enc.layers {
            let (w, b) = (s.get(l.fwd.w).value.clone(), s.get(l.fwd.b).value.clone());
            s.get_mut(l.bwd.w).value = w;
            s.get_mut(l.bwd.b).value = b;
        }
    }

    #[test]
    fn single_step_directions_agree_with_tied_weights() {
        let mut s = ParamStore::new();
        let enc = HighwayBiLstm::new(&mut s, "enc", 3, 4, 1, false, &mut rng()).unwrap();
        tie_directions(&mut s, &enc);
        let mut t = Tape::new(&s);
        let x = t.input(vec![0.1, 0.2, -0.3]);
        let out = enc.encode(&mut t, &[x]);
        let v = t.value(out[0]);
        assert_eq!(&v[..4], &v[4..]);
    }

    #[test]
    fn reversal_swaps_directions_with_tied_weights() {
        let mut s = ParamStore::new();
        let enc = HighwayBiLstm::new(&mut s, "enc", 3, 4, 1, false, &mut rng()).unwrap();
        tie_directions(&mut s, &enc);
        let data = [vec![0.1, 0.2, -0.3], vec![1.0, -0.5, 0.0], vec![0.0, 0.7, 0.7], vec![-0.2, 0.1, 0.4]];
        let mut t = Tape::new(&s);
        let xs: Vec<Var> = data.iter().map(|d| t.input(d.clone())).collect();
        let rev: Vec<Var> = xs.iter().rev().copied().collect();
        let a = enc.encode(&mut t, &xs);
        let b = enc.encode(&mut t, &rev);
        let n = xs.len();
        for i in 0..n {
            let (va, vb) = (t.value(a[i]), t.value(b[n - 1 - i]));
            assert_eq!(&va[..4], &vb[4..]);
            assert_eq!(&va[4..], &vb[..4]);
        }
    }

    #[test]
    fn empty_sequence_encodes_to_nothing() {
        let mut s = ParamStore::new();
        let enc = HighwayBiLstm::new(&mut s, "enc", 3, 4, 2, true, &mut rng()).unwrap();
        let mut t = Tape::new(&s);
        assert!(enc.encode(&mut t, &[]).is_empty());
    }

    #[test]
    fn highway_layers_have_gates_and_projection_only_when_needed() {
        let mut s = ParamStore::new();
        let enc = HighwayBiLstm::new(&mut s, "enc", 3, 4, 2, true, &mut rng()).unwrap();
        assert!(enc.layers[0].carry.is_some());
        assert!(enc.layers[1].carry.is_none());
        assert!(s.id("enc.l1.gate.w").is_some());
        assert!(HighwayBiLstm::new(&mut ParamStore::new(), "e", 3, 4, 0, true, &mut rng()).is_err());
    }
}

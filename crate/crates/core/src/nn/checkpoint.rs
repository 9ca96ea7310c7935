//! Binary dump of a [`ParamStore`]: values and optimizer slots, bit-exact.
//!
//! Layout (little endian): magic `SRLTPARM`, u32 version, u64 tensor count,
//! then per tensor: name, rows, cols, values, slot count, and per slot its
//! name and values. Strings are u64 length + UTF-8 bytes; values are f64 bits.

use std::collections::BTreeMap;
use std::path::Path;

use super::params::{Param, ParamStore};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SRLTPARM";
pub const PARAMS_VERSION: u32 = 1;

pub fn params_to_bytes(store: &ParamStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + store.num_scalars() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&PARAMS_VERSION.to_le_bytes());
    put_u64(&mut out, store.len() as u64);
    for (_, p) in store.iter() {
        put_str(&mut out, &p.name);
        put_u64(&mut out, p.rows as u64);
        put_u64(&mut out, p.cols as u64);
        put_f64s(&mut out, &p.value);
        put_u64(&mut out, p.slots.len() as u64);
        for (name, v) in &p.slots {
            put_str(&mut out, name);
            put_f64s(&mut out, v);
        }
    }
    out
}

pub fn params_from_bytes(bytes: &[u8]) -> Result<ParamStore> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != PARAMS_VERSION {
        return Err(Error::Checkpoint(format!("unsupported parameter file version {version}")));
    }
    let count = r.u64()? as usize;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name = r.string()?;
        let (rows, cols) = (r.u64()? as usize, r.u64()? as usize);
        let n = rows.checked_mul(cols).ok_or_else(|| Error::Checkpoint("shape overflow".into()))?;
        let value = r.f64s(n)?;
        let mut slots = BTreeMap::new();
        for _ in 0..r.u64()? {
            let slot = r.string()?;
            slots.insert(slot, r.f64s(n)?);
        }
        if store.id(&name).is_some() {
            return Err(Error::Checkpoint(format!("duplicate tensor `{name}`")));
        }
        store.insert(Param { name, rows, cols, value, grad: vec![0.0; n], slots });
    }
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(store)
}

pub fn save_params(store: &ParamStore, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, params_to_bytes(store))?;
    Ok(())
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ParamStore> {
    params_from_bytes(&std::fs::read(path)?)
}

/// Copies values and slots from `src` into `dst`, matching by name and shape.
pub fn restore_into(dst: &mut ParamStore, src: &ParamStore) -> Result<()> {
    if dst.len() != src.len() {
        return Err(Error::Checkpoint(format!("expected {} tensors, found {}", dst.len(), src.len())));
    }
    for p in dst.iter_mut() {
        let s = src.by_name(&p.name).map_err(|_| Error::Checkpoint(format!("missing tensor `{}`", p.name)))?;
        if (s.rows, s.cols) != (p.rows, p.cols) {
            return Err(Error::Checkpoint(format!("shape mismatch for `{}`", p.name)));
        }
        p.value.clone_from(&s.value);
        p.slots.clone_from(&s.slots);
    }
    Ok(())
}

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u64(out, s.len() as u64);
    out.extend_from_slice(s.as_bytes());
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_bits().to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated parameter file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u64()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Checkpoint("invalid UTF-8 name".into()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("size overflow".into()))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap()))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::Init;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = ParamStore::new();
        let a = s.add("a.w", 3, 2, Init::Glorot, &mut rng).unwrap();
        s.add("b", 4, 1, Init::Uniform(0.1), &mut rng).unwrap();
        s.get_mut(a).value[0] = -0.0;
        s.get_mut(a).value[1] = f64::MIN_POSITIVE / 3.0;
        s.get_mut(a).slots.insert("adadelta.eg2".into(), vec![1e-300; 6]);
        let back = params_from_bytes(&params_to_bytes(&s)).unwrap();
        assert_eq!(params_to_bytes(&back), params_to_bytes(&s));
        assert_eq!(back.digest(), s.digest());
        assert_eq!(back.by_name("a.w").unwrap().slots, s.get(a).slots);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let mut s = ParamStore::new();
        s.add("a", 2, 2, Init::Zeros, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let bytes = params_to_bytes(&s);
        assert!(params_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(params_from_bytes(&bad).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(params_from_bytes(&extra).is_err());
    }
}

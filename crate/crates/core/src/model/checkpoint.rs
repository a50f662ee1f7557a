//! Binary checkpoint format, all integers and floats little-endian:
//!
//! ```text
//! magic "LACONCKP" | u32 version
//! u32 count, then count × (u16 len, name, f64 value)        hyperparameters
//! u32 count, then count × (u16 len, name, u32 rank,
//!                          rank × u64 dim, f64 payload)     tensors
//! u64 FNV-1a over every preceding byte
//! ```

use std::path::Path;

use super::params::{Hyper, ParameterStore};
use super::tensor::Tensor;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LACONCKP";
pub const CHECKPOINT_VERSION: u32 = 1;

fn hyper_pairs(h: &Hyper) -> Vec<(&'static str, f64)> {
    vec![
        ("d_in", h.d_in as f64),
        ("global_dim", h.global_dim as f64),
        ("embed_hidden", h.embed_hidden as f64),
        ("embed_dim", h.embed_dim as f64),
        ("pred_hidden1", h.pred_hidden1 as f64),
        ("pred_hidden2", h.pred_hidden2 as f64),
        ("grid", h.grid as f64),
        ("c_conc", h.c_conc),
        ("kl_weight", h.kl_weight),
        ("n_avg", h.n_avg as f64),
        ("shape_aug", h.shape_aug as f64),
        ("lambda_int", h.lambda_int),
        ("alpha_floor", h.alpha_floor),
        ("union_fill", h.union_fill),
    ]
}

const SHAPE_FIELDS: [&str; 7] = ["d_in", "global_dim", "embed_hidden", "embed_dim", "pred_hidden1", "pred_hidden2", "grid"];

fn hyper_from_pairs(pairs: &[(String, f64)]) -> Result<Hyper> {
    let get = |name: &str| -> Result<f64> {
        pairs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::CheckpointMismatch { field: name.into(), detail: "missing hyperparameter".into() })
    };
    let count = |name: &str| -> Result<usize> {
        let v = get(name)?;
        if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
            return Err(Error::CheckpointMismatch { field: name.into(), detail: format!("not a count: {v}") });
        }
        Ok(v as usize)
    };
    Ok(Hyper {
        d_in: count("d_in")?,
        global_dim: count("global_dim")?,
        embed_hidden: count("embed_hidden")?,
        embed_dim: count("embed_dim")?,
        pred_hidden1: count("pred_hidden1")?,
        pred_hidden2: count("pred_hidden2")?,
        grid: count("grid")?,
        c_conc: get("c_conc")?,
        kl_weight: get("kl_weight")?,
        n_avg: count("n_avg")?,
        shape_aug: count("shape_aug")? as u32,
        lambda_int: get("lambda_int")?,
        alpha_floor: get("alpha_floor")?,
        union_fill: get("union_fill")?,
    })
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn put_name(buf: &mut Vec<u8>, name: &str) {
    buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
    buf.extend_from_slice(name.as_bytes());
}

/// Serializes a store to bytes.
pub(crate) fn encode_checkpoint(store: &ParameterStore) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let pairs = hyper_pairs(&store.hyper);
    buf.extend_from_slice(&(pairs.len() as u32).to_le_bytes());
    for (name, v) in pairs {
        put_name(&mut buf, name);
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(store.tensors().len() as u32).to_le_bytes());
    for (name, t) in store.named() {
        put_name(&mut buf, name);
        buf.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(e) => {
                let s = &self.bytes[self.pos..e];
                self.pos = e;
                Ok(s)
            }
            None => Err(Error::CorruptCheckpoint(format!("truncated at byte {}", self.pos))),
        }
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn name(&mut self) -> Result<String> {
        let len = self.u16()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::CorruptCheckpoint(format!("non-UTF-8 name at byte {}", self.pos)))
    }
}

/// Parses checkpoint bytes.
pub(crate) fn decode_checkpoint(bytes: &[u8]) -> Result<ParameterStore> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::CorruptCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointMismatch {
            field: "version".into(),
            detail: format!("file has version {version}, expected {CHECKPOINT_VERSION}"),
        });
    }
    if bytes.len() < 8 {
        return Err(Error::CorruptCheckpoint("truncated".into()));
    }
    let body = &bytes[..bytes.len() - 8];
    let stored = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().unwrap());
    let mut r = Reader { bytes: body, pos: r.pos };

    let n_hyper = r.u32()? as usize;
    let mut pairs = Vec::new();
    for _ in 0..n_hyper {
        let name = r.name()?;
        pairs.push((name, r.f64()?));
    }
    let n_tensors = r.u32()? as usize;
    let mut named = Vec::new();
    for _ in 0..n_tensors {
        let name = r.name()?;
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(r.u64()? as usize);
        }
        let len = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&l| l.checked_mul(8).is_some_and(|b| b <= body.len()))
            .ok_or_else(|| Error::CorruptCheckpoint(format!("implausible shape {shape:?} for {name}")))?;
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(r.f64()?);
        }
        named.push((name, Tensor::from_vec(&shape, data)));
    }
    if r.pos != body.len() {
        return Err(Error::CorruptCheckpoint(format!("{} trailing bytes", body.len() - r.pos)));
    }
    if fnv1a(body) != stored {
        return Err(Error::CorruptCheckpoint("checksum mismatch".into()));
    }
    let hyper = hyper_from_pairs(&pairs)?;
    ParameterStore::from_tensors(hyper, named)
}

pub fn checkpoint_save(store: &ParameterStore, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(store))?;
    Ok(())
}

pub fn checkpoint_load(path: &Path) -> Result<ParameterStore> {
    decode_checkpoint(&std::fs::read(path)?)
}

/// Loads a checkpoint and requires its shape-defining hyperparameters to
/// equal `expected`'s. Nothing is returned on mismatch.
pub fn checkpoint_load_matching(path: &Path, expected: &Hyper) -> Result<ParameterStore> {
    let store = checkpoint_load(path)?;
    let got = hyper_pairs(&store.hyper);
    let want = hyper_pairs(expected);
    for ((name, g), (_, w)) in got.iter().zip(&want) {
        if SHAPE_FIELDS.contains(name) && g != w {
            return Err(Error::CheckpointMismatch {
                field: (*name).into(),
                detail: format!("checkpoint has {g}, model expects {w}"),
            });
        }
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn store() -> ParameterStore {
        let h = Hyper { embed_hidden: 5, embed_dim: 4, pred_hidden1: 6, pred_hidden2: 5, grid: 3, ..Hyper::default() };
        ParameterStore::init(h, &mut RngStream::new(3, 0)).unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = store();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        checkpoint_save(&s, &p).unwrap();
        let back = checkpoint_load(&p).unwrap();
        assert_eq!(back, s);
        for (a, b) in back.tensors().iter().zip(s.tensors()) {
            let ab: Vec<u64> = a.data().iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
        assert_eq!(encode_checkpoint(&back), std::fs::read(&p).unwrap());
    }

    #[test]
    fn every_truncation_is_corrupt() {
        let bytes = encode_checkpoint(&store());
        for cut in [0, 4, 8, 11, 12, 40, bytes.len() / 2, bytes.len() - 1] {
            let err = decode_checkpoint(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, Error::CorruptCheckpoint(_)), "cut {cut}: {err:?}");
        }
    }

    #[test]
    fn flipped_payload_bit_fails_checksum() {
        let mut bytes = encode_checkpoint(&store());
        let k = bytes.len() - 20;
        bytes[k] ^= 1;
        assert!(matches!(decode_checkpoint(&bytes), Err(Error::CorruptCheckpoint(_))));
    }

    #[test]
    fn version_mismatch_names_field() {
        let mut bytes = encode_checkpoint(&store());
        bytes[8] = 9;
        match decode_checkpoint(&bytes) {
            Err(Error::CheckpointMismatch { field, .. }) => assert_eq!(field, "version"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_width_rejected() {
        let s = store();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        checkpoint_save(&s, &p).unwrap();
        let mut other = s.hyper.clone();
        other.embed_dim = 7;
        match checkpoint_load_matching(&p, &other) {
            Err(Error::CheckpointMismatch { field, .. }) => assert_eq!(field, "embed_dim"),
            other => panic!("{other:?}"),
        }
        assert!(checkpoint_load_matching(&p, &s.hyper).is_ok());
    }
}

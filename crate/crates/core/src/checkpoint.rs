//! Named-tensor archive ("PRGC" container).
//!
//! Layout, all integers little-endian:
//! magic `PRGC`, u32 version, u32 tensor count, then per tensor
//! u32 name length + UTF-8 name, u32 rank, rank × u64 extents, u8 dtype tag,
//! payload, u32 CRC-32 of the payload; finally u32 length + UTF-8 metadata
//! (`key=value` lines, sorted by key).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fsio;
use crate::numerics::{DType, Tensor};

pub const MAGIC: &[u8; 4] = b"PRGC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    tensors: Vec<(String, Tensor<f32>)>,
    metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<f32>) -> Result<()> {
        let name = name.into();
        if self.get(&name).is_some() {
            return Err(Error::Checkpoint(format!("duplicate tensor name `{name}`")));
        }
        self.tensors.push((name, tensor));
        Ok(())
    }

    pub fn extend(&mut self, named: impl IntoIterator<Item = (String, Tensor<f32>)>) -> Result<()> {
        named.into_iter().try_for_each(|(n, t)| self.insert(n, t))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor<f32>> {
        self.get(name).ok_or_else(|| Error::Checkpoint(format!("missing tensor `{name}`")))
    }

    pub fn tensors(&self) -> &[(String, Tensor<f32>)] {
        &self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    /// Metadata value parsed as `T`; missing or malformed entries are errors.
    pub fn meta_parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self
            .meta(key)
            .ok_or_else(|| Error::Checkpoint(format!("missing metadata `{key}`")))?;
        raw.parse()
            .map_err(|_| Error::Checkpoint(format!("metadata `{key}` has bad value `{raw}`")))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&u32_len(self.tensors.len())?.to_le_bytes());
        for (name, t) in &self.tensors {
            out.extend_from_slice(&u32_len(name.len())?.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&u32_len(t.rank())?.to_le_bytes());
            for &e in t.shape() {
                out.extend_from_slice(&(e as u64).to_le_bytes());
            }
            out.push(DType::F32.tag());
            let start = out.len();
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
            let crc = crc32fast::hash(&out[start..]);
            out.extend_from_slice(&crc.to_le_bytes());
        }
        let mut meta = String::new();
        for (k, v) in &self.metadata {
            if k.is_empty() || k.contains(['=', '\n']) || v.contains('\n') {
                return Err(Error::Checkpoint(format!("metadata entry `{k}` cannot be encoded")));
            }
            meta.push_str(&format!("{k}={v}\n"));
        }
        out.extend_from_slice(&u32_len(meta.len())?.to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a PRGC container".into()));
        }
        let version = r.u32()?;
        if version > FORMAT_VERSION {
            return Err(Error::VersionAhead { found: version, supported: FORMAT_VERSION });
        }
        let count = r.u32()? as usize;
        let mut ck = Checkpoint::new();
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank.min(16));
            for _ in 0..rank {
                let e = r.u64()?;
                shape.push(usize::try_from(e).map_err(|_| Error::Checkpoint(format!("extent {e} too large")))?);
            }
            let tag = r.take(1)?[0];
            match DType::from_tag(tag) {
                Some(DType::F32) => {}
                _ => return Err(Error::Checkpoint(format!("tensor `{name}` has unsupported dtype tag {tag}"))),
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, &e| a.checked_mul(e))
                .and_then(|n| n.checked_mul(4))
                .ok_or_else(|| Error::Checkpoint(format!("tensor `{name}` is too large")))?;
            let payload = r.take(numel)?;
            let crc = r.u32()?;
            if crc32fast::hash(payload) != crc {
                return Err(Error::Checksum(name));
            }
            let data: Vec<f32> = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let t = Tensor::new(shape, data).map_err(|e| Error::Checkpoint(format!("tensor `{name}`: {e}")))?;
            ck.insert(name, t)?;
        }
        let meta_len = r.u32()? as usize;
        let meta = std::str::from_utf8(r.take(meta_len)?)
            .map_err(|_| Error::Checkpoint("metadata is not UTF-8".into()))?;
        for line in meta.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Checkpoint(format!("malformed metadata line `{line}`")))?;
            ck.metadata.insert(k.to_string(), v.to_string());
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fsio::read_bytes(path)?)
    }

    /// Tensors under `prefix/`, with the prefix stripped.
    pub fn group(&self, prefix: &str) -> Vec<(&str, &Tensor<f32>)> {
        let p = format!("{prefix}/");
        self.tensors
            .iter()
            .filter_map(|(n, t)| n.strip_prefix(&p).map(|s| (s, t)))
            .collect()
    }
}

fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Checkpoint(format!("length {n} exceeds u32")))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_gaussian, Tensor};

    fn sample() -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.insert("a/w", sample_gaussian(&[3, 4], 1)).unwrap();
        ck.insert("b", sample_gaussian(&[7], 2)).unwrap();
        ck.insert("s", Tensor::scalar(2.5)).unwrap();
        ck.set_meta("kind", "test");
        ck.set_meta("m", 32);
        ck
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.meta_parse::<usize>("m").unwrap(), 32);
    }

    #[test]
    fn empty_container_is_valid() {
        let bytes = Checkpoint::new().to_bytes().unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 0);
        assert!(Checkpoint::from_bytes(&bytes).unwrap().is_empty());
    }

    #[test]
    fn flipped_payload_byte_fails_checksum() {
        let mut bytes = sample().to_bytes().unwrap();
        // first tensor: header 12 bytes, name len 4 + "a/w", rank 4, 2 extents, dtype 1
        let payload = 12 + 4 + 3 + 4 + 16 + 1;
        bytes[payload + 5] ^= 0x10;
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::Checksum(n)) if n == "a/w"));
    }

    #[test]
    fn rejects_newer_version_and_bad_magic() {
        let mut bytes = sample().to_bytes().unwrap();
        bytes[4] = 2;
        assert!(matches!(Checkpoint::from_bytes(&bytes), Err(Error::VersionAhead { found: 2, supported: 1 })));
        bytes[0] = b'X';
        assert!(Checkpoint::from_bytes(&bytes).is_err());
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut ck = Checkpoint::new();
        ck.insert("x", Tensor::scalar(1.0)).unwrap();
        assert!(ck.insert("x", Tensor::scalar(2.0)).is_err());
    }

    #[test]
    fn truncated_file_is_an_error() {
        let bytes = sample().to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}

//! Binary checkpoint container shared by the network and the baselines.
//!
//! Layout:
//!
//! ```text
//! "HSANCKPT"           8 bytes magic
//! version              u32 LE
//! header length        u64 LE
//! header               UTF-8 JSON: kind, config, manifest [{name, shape}], meta
//! arrays               f32 or f64 LE (header `dtype`), manifest order
//! SHA-256              32 bytes over everything above
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::autodiff::{ParamStore, Precision, Real, Tensor};

const MAGIC: &[u8; 8] = b"HSANCKPT";
const VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checksum mismatch: file is corrupt")]
    Checksum,
    #[error("bad header: {0}")]
    Header(String),
    #[error("expected a {expected:?} checkpoint, found {found:?}")]
    Kind {
        expected: CheckpointKind,
        found: CheckpointKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckpointKind {
    Hsan,
    Mnb,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: CheckpointKind,
    dtype: Precision,
    config: serde_json::Value,
    manifest: Vec<ManifestEntry>,
    meta: serde_json::Value,
}

/// Decoded checkpoint contents. Arrays are held in 64-bit form, which
/// represents 32-bit values exactly; `dtype` decides the on-disk width.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointFile {
    pub kind: CheckpointKind,
    pub dtype: Precision,
    pub config: serde_json::Value,
    pub meta: serde_json::Value,
    pub arrays: Vec<(String, Tensor<f64>)>,
}

impl CheckpointFile {
    pub fn new(
        kind: CheckpointKind,
        dtype: Precision,
        config: serde_json::Value,
        meta: serde_json::Value,
    ) -> Self {
        Self {
            kind,
            dtype,
            config,
            meta,
            arrays: Vec::new(),
        }
    }

    pub fn from_params<F: Real>(
        kind: CheckpointKind,
        config: serde_json::Value,
        meta: serde_json::Value,
        params: &ParamStore<F>,
    ) -> Self {
        let mut c = Self::new(kind, F::PRECISION, config, meta);
        for (_, name, t) in params.iter() {
            c.push(name, t.cast());
        }
        c
    }

    pub fn push(&mut self, name: impl Into<String>, t: Tensor<f64>) {
        self.arrays.push((name.into(), t));
    }

    pub fn array(&self, name: &str) -> Result<&Tensor<f64>, CheckpointError> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| CheckpointError::Header(format!("missing array `{name}`")))
    }

    pub fn to_params<F: Real>(&self) -> ParamStore<F> {
        let mut store = ParamStore::new();
        for (name, t) in &self.arrays {
            store
                .add(name.clone(), t.cast())
                .expect("checkpoint names are unique");
        }
        store
    }

    pub fn expect_kind(&self, kind: CheckpointKind) -> Result<(), CheckpointError> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(CheckpointError::Kind {
                expected: kind,
                found: self.kind,
            })
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            kind: self.kind,
            dtype: self.dtype,
            config: self.config.clone(),
            manifest: self
                .arrays
                .iter()
                .map(|(n, t)| ManifestEntry {
                    name: n.clone(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
            meta: self.meta.clone(),
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, t) in &self.arrays {
            for &x in t.data() {
                match self.dtype {
                    Precision::F32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
                    Precision::F64 => out.extend_from_slice(&x.to_le_bytes()),
                }
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        if bytes.len() < 20 + DIGEST_LEN {
            return Err(CheckpointError::Truncated);
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(CheckpointError::Checksum);
        }
        let version = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(CheckpointError::Version(version));
        }
        let hlen = u64::from_le_bytes(body[12..20].try_into().expect("8 bytes")) as usize;
        let hend = 20usize.checked_add(hlen).ok_or(CheckpointError::Truncated)?;
        if body.len() < hend {
            return Err(CheckpointError::Truncated);
        }
        let header: Header = serde_json::from_slice(&body[20..hend])
            .map_err(|e| CheckpointError::Header(e.to_string()))?;
        let width = match header.dtype {
            Precision::F32 => 4,
            Precision::F64 => 8,
        };
        let mut pos = hend;
        let mut arrays = Vec::with_capacity(header.manifest.len());
        for entry in header.manifest {
            let n: usize = entry.shape.iter().product();
            let end = n
                .checked_mul(width)
                .and_then(|b| b.checked_add(pos))
                .ok_or(CheckpointError::Truncated)?;
            if body.len() < end {
                return Err(CheckpointError::Truncated);
            }
            let bytes = body[pos..end].chunks_exact(width);
            let data: Vec<f64> = match header.dtype {
                Precision::F32 => bytes
                    .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                    .collect(),
                Precision::F64 => bytes
                    .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                    .collect(),
            };
            let t = Tensor::new(entry.shape, data)
                .map_err(|e| CheckpointError::Header(format!("{}: {e}", entry.name)))?;
            arrays.push((entry.name, t));
            pos = end;
        }
        if pos != body.len() {
            return Err(CheckpointError::Header("trailing bytes after arrays".into()));
        }
        Ok(Self {
            kind: header.kind,
            dtype: header.dtype,
            config: header.config,
            meta: header.meta,
            arrays,
        })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &CheckpointFile) -> Result<(), CheckpointError> {
    fs::write(path, ckpt.to_bytes()).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_checkpoint(path: &Path) -> Result<CheckpointFile, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })?;
    CheckpointFile::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> CheckpointFile {
        let mut p = ParamStore::<f32>::new();
        p.add("a", Tensor::from_rows(2, 2, vec![1.0, -2.5, 3.25, 0.0]))
            .unwrap();
        p.add("b", Tensor::vector(vec![f32::MIN_POSITIVE, 7.0])).unwrap();
        CheckpointFile::from_params(
            CheckpointKind::Hsan,
            serde_json::json!({"dim": 4}),
            serde_json::json!({"best": 0.5}),
            &p,
        )
    }

    #[test]
    fn roundtrip_bytes() {
        let c = sample();
        assert_eq!(CheckpointFile::from_bytes(&c.to_bytes()).unwrap(), c);
    }

    #[test]
    fn detects_corruption() {
        let mut bytes = sample().to_bytes();
        let n = bytes.len();
        bytes[n - 40] ^= 0x01;
        assert!(matches!(
            CheckpointFile::from_bytes(&bytes),
            Err(CheckpointError::Checksum)
        ));
        assert!(matches!(
            CheckpointFile::from_bytes(b"NOTACKPT0000"),
            Err(CheckpointError::BadMagic)
        ));
    }

    #[test]
    fn kind_guard() {
        assert!(sample().expect_kind(CheckpointKind::Mnb).is_err());
    }

    proptest! {
        #[test]
        fn arrays_roundtrip_bitwise(values in proptest::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), 1..64)) {
            let mut p = ParamStore::<f32>::new();
            p.add("x", Tensor::vector(values.clone())).unwrap();
            let c = CheckpointFile::from_params(CheckpointKind::Linear, serde_json::Value::Null, serde_json::Value::Null, &p);
            let back = CheckpointFile::from_bytes(&c.to_bytes()).unwrap();
            let restored: ParamStore<f32> = back.to_params();
            let bits: Vec<u32> = restored.get(crate::autodiff::ParamId(0)).data().iter().map(|x| x.to_bits()).collect();
            let orig: Vec<u32> = values.iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(bits, orig);
        }

        #[test]
        fn f64_arrays_roundtrip_bitwise(values in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..64)) {
            let mut p = ParamStore::<f64>::new();
            p.add("x", Tensor::vector(values.clone())).unwrap();
            let c = CheckpointFile::from_params(CheckpointKind::Hsan, serde_json::Value::Null, serde_json::Value::Null, &p);
            prop_assert_eq!(c.dtype, Precision::F64);
            let back = CheckpointFile::from_bytes(&c.to_bytes()).unwrap();
            let bits: Vec<u64> = back.arrays[0].1.data().iter().map(|x| x.to_bits()).collect();
            let orig: Vec<u64> = values.iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(bits, orig);
        }
    }
}

//! Versioned binary container for trained parameters.
//!
//! Layout (little-endian): magic `SIEVEMDL`, format version `u32`, model
//! kind (`u32` length + UTF-8), tensor count `u32`, then per tensor the
//! name (`u32` length + UTF-8), `rows: u64`, `cols: u64` and `rows * cols`
//! `f64` values in row-major order. Equal parameters give equal bytes.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::nn::Tensor;

pub const MAGIC: &[u8; 8] = b"SIEVEMDL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a sieve model file")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("expected a `{expected}` model, found `{found}`")]
    Kind { expected: String, found: String },
    #[error("tensor `{name}`: {message}")]
    Shape { name: String, message: String },
    #[error("malformed model file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub kind: String,
    pub tensors: Vec<(String, Tensor)>,
}

impl ModelFile {
    pub fn new(kind: &str) -> Self {
        ModelFile {
            kind: kind.to_string(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, tensor: &Tensor) {
        self.tensors.push((name.to_string(), tensor.clone()));
    }

    /// Removes the named tensor, checking its shape.
    pub fn take(&mut self, name: &str, rows: usize, cols: usize) -> Result<Tensor, ModelIoError> {
        let pos = self
            .tensors
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| ModelIoError::Shape {
                name: name.to_string(),
                message: "missing".into(),
            })?;
        let (_, t) = self.tensors.remove(pos);
        if t.rows != rows || t.cols != cols {
            return Err(ModelIoError::Shape {
                name: name.to_string(),
                message: format!("expected {rows}x{cols}, found {}x{}", t.rows, t.cols),
            });
        }
        Ok(t)
    }

    pub fn shape_of(&self, name: &str) -> Option<(usize, usize)> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| (t.rows, t.cols))
    }

    pub fn expect_kind(&self, kind: &str) -> Result<(), ModelIoError> {
        if self.kind != kind {
            return Err(ModelIoError::Kind {
                expected: kind.to_string(),
                found: self.kind.clone(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        put_str(&mut out, &self.kind);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            put_str(&mut out, name);
            out.extend_from_slice(&(t.rows as u64).to_le_bytes());
            out.extend_from_slice(&(t.cols as u64).to_le_bytes());
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelIoError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(ModelIoError::BadMagic);
        }
        let version = cur.u32()?;
        if version != FORMAT_VERSION {
            return Err(ModelIoError::Version(version));
        }
        let kind = cur.string()?;
        let count = cur.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name = cur.string()?;
            let rows = cur.u64()? as usize;
            let cols = cur.u64()? as usize;
            let n = rows
                .checked_mul(cols)
                .filter(|n| n.saturating_mul(8) <= bytes.len())
                .ok_or_else(|| ModelIoError::Malformed(format!("tensor `{name}` too large")))?;
            let mut data = Vec::with_capacity(n);
            for _ in 0..n {
                data.push(f64::from_le_bytes(cur.take(8)?.try_into().unwrap()));
            }
            tensors.push((name, Tensor { rows, cols, data }));
        }
        if cur.pos != bytes.len() {
            return Err(ModelIoError::Malformed("trailing bytes".into()));
        }
        Ok(ModelFile { kind, tensors })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), ModelIoError> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ModelIoError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelIoError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelIoError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| ModelIoError::Malformed("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelIoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelIoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, ModelIoError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| ModelIoError::Malformed("invalid utf-8 name".into()))
    }
}

//! Unit-normalized embedding sets and their binary file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "PRSM" | version: u16 | role: u8 | dim: u64 | count: u64
//!        | count * dim f32 (row-major) | count u64 item ids
//! ```
//!
//! Vectors are held as `f32` in memory so that a save/load round trip is
//! bit-exact; all arithmetic on them is done in `f64`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PRSM";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8 + 8;

/// Rows whose norm is further than this from 1 are renormalized.
pub const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Base,
    Teacher,
    Student,
}

impl Role {
    fn to_byte(self) -> u8 {
        match self {
            Role::Base => 0,
            Role::Teacher => 1,
            Role::Student => 2,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Role::Base),
            1 => Ok(Role::Teacher),
            2 => Ok(Role::Student),
            other => Err(Error::invalid(format!("unknown embedding role byte {other}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    role: Role,
    dim: usize,
    data: Vec<f32>,
    item_ids: Vec<usize>,
    index: HashMap<usize, usize>,
}

impl PartialEq for EmbeddingSet {
    fn eq(&self, other: &Self) -> bool {
        self.role == other.role
            && self.dim == other.dim
            && self.item_ids == other.item_ids
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Scales every row of a row-major matrix to unit Euclidean norm.
pub fn normalize_rows(data: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if data.len() % dim != 0 {
        return Err(Error::invalid(format!(
            "matrix length {} is not a multiple of dim {dim}",
            data.len()
        )));
    }
    let mut out = data.to_vec();
    for (row, chunk) in out.chunks_mut(dim).enumerate() {
        if chunk.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row });
        }
        let norm = chunk.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroRow { row });
        }
        chunk.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

impl EmbeddingSet {
    /// Builds a set from `f64` rows, normalizing each row.
    pub fn from_rows(role: Role, dim: usize, data: &[f64], item_ids: Vec<usize>) -> Result<Self> {
        let normalized = normalize_rows(data, dim)?;
        let data = normalized.iter().map(|&v| v as f32).collect();
        Self::from_f32(role, dim, data, item_ids)
    }

    /// Builds a set from `f32` rows. Rows already within [`NORM_TOLERANCE`]
    /// of unit norm are kept bit-for-bit; others are renormalized.
    pub fn from_f32(role: Role, dim: usize, mut data: Vec<f32>, item_ids: Vec<usize>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if data.len() != dim * item_ids.len() {
            return Err(Error::invalid(format!(
                "{} values do not form {} rows of dim {dim}",
                data.len(),
                item_ids.len()
            )));
        }
        for (row, chunk) in data.chunks_mut(dim).enumerate() {
            if chunk.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { row });
            }
            let norm = chunk.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroRow { row });
            }
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                chunk.iter_mut().for_each(|v| *v = (*v as f64 / norm) as f32);
            }
        }
        let mut index = HashMap::with_capacity(item_ids.len());
        for (row, &id) in item_ids.iter().enumerate() {
            if index.insert(id, row).is_some() {
                return Err(Error::invalid(format!("duplicated item id {id}")));
            }
        }
        Ok(EmbeddingSet {
            role,
            dim,
            data,
            item_ids,
            index,
        })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn item_ids(&self) -> &[usize] {
        &self.item_ids
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks(self.dim)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.index.contains_key(&id)
    }

    /// Row position of an item id.
    pub fn row_index(&self, id: usize) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownItem(id))
    }

    pub fn row_of(&self, id: usize) -> Result<&[f32]> {
        self.index
            .get(&id)
            .map(|&r| self.row(r))
            .ok_or(Error::UnknownItem(id))
    }

    /// Cosine similarity of two items (a dot product, rows being unit norm).
    pub fn cosine(&self, a: usize, b: usize) -> Result<f64> {
        Ok(dot(self.row_of(a)?, self.row_of(b)?))
    }

    /// Restricts the set to the given item ids, in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            data.extend_from_slice(self.row_of(id)?);
        }
        Self::from_f32(self.role, self.dim, data, ids.to_vec())
    }

    pub fn max_norm_deviation(&self) -> f64 {
        self.rows()
            .map(|r| (dot(r, r).sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.data.len() * 4 + self.len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.role.to_byte());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for &id in &self.item_ids {
            out.extend_from_slice(&(id as u64).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic { expected: "PRSM" });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::BadVersion {
                found: version,
                expected: VERSION,
            });
        }
        let role = Role::from_byte(bytes[6])?;
        let dim = u64::from_le_bytes(bytes[7..15].try_into().unwrap()) as usize;
        let count = u64::from_le_bytes(bytes[15..23].try_into().unwrap()) as usize;
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        let values = count.checked_mul(dim).ok_or(Error::Truncated)?;
        let expected = values
            .checked_mul(4)
            .and_then(|v| v.checked_add(count.checked_mul(8)?))
            .and_then(|v| v.checked_add(HEADER_LEN))
            .ok_or(Error::Truncated)?;
        if bytes.len() < expected {
            return Err(Error::Truncated);
        }
        if bytes.len() > expected {
            return Err(Error::invalid("trailing bytes after embedding payload"));
        }
        let body = &bytes[HEADER_LEN..];
        let data: Vec<f32> = body[..values * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let item_ids = body[values * 4..]
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        Self::from_f32(role, dim, data, item_ids)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn digest(&self) -> String {
        sha256_hex(&self.to_bytes())
    }
}

pub fn save_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    set.save(path)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet> {
    EmbeddingSet::load(path)
}

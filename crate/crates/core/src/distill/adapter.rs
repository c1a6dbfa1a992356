use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSet, Role};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"PRSA";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingProvenance {
    pub dataset_digests: Vec<String>,
    pub config_digest: String,
}

/// Square residual projection `W`; the student maps `u` to
/// `normalize(u + W u)`. Zero `W` is the identity student.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterParams {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub w: Vec<f64>,
    pub provenance: TrainingProvenance,
}

impl AdapterParams {
    pub fn identity(dim: usize) -> Self {
        AdapterParams {
            dim,
            w: vec![0.0; dim * dim],
            provenance: TrainingProvenance::default(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.w.iter().all(|&v| v == 0.0)
    }

    /// `W u` written into `out`.
    pub(crate) fn apply_residual(&self, u: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.w[r * self.dim..(r + 1) * self.dim];
            *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
    }

    /// File layout: `"PRSA" | version u16 | dim u64 | dim*dim f64 | 32-byte
    /// config digest`, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(14 + self.w.len() * 8 + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        for v in &self.w {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let mut digest = [0u8; 32];
        if let Ok(bytes) = hex::decode(&self.provenance.config_digest) {
            if bytes.len() == 32 {
                digest.copy_from_slice(&bytes);
            }
        }
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic { expected: "PRSA" });
        }
        if bytes.len() < 14 {
            return Err(Error::Truncated);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(Error::BadVersion {
                found: version,
                expected: VERSION,
            });
        }
        let dim = u64::from_le_bytes(bytes[6..14].try_into().unwrap()) as usize;
        let n = dim.checked_mul(dim).ok_or(Error::Truncated)?;
        let expected = n.checked_mul(8).and_then(|v| v.checked_add(14 + 32)).ok_or(Error::Truncated)?;
        if bytes.len() != expected {
            return Err(if bytes.len() < expected {
                Error::Truncated
            } else {
                Error::invalid("trailing bytes after adapter payload")
            });
        }
        let w: Vec<f64> = bytes[14..14 + n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(k) = w.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: k / dim.max(1) });
        }
        let digest = &bytes[14 + n * 8..];
        let config_digest = if digest.iter().all(|&b| b == 0) {
            String::new()
        } else {
            hex::encode(digest)
        };
        Ok(AdapterParams {
            dim,
            w,
            provenance: TrainingProvenance {
                dataset_digests: Vec::new(),
                config_digest,
            },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Maps every base row `u` to `normalize(u + W u)`. Rows where `W u` is
/// exactly zero are copied unchanged, so the identity adapter reproduces the
/// base set bit-for-bit.
pub fn encode_student(params: &AdapterParams, base: &EmbeddingSet) -> Result<EmbeddingSet> {
    if base.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: base.dim(),
        });
    }
    let dim = params.dim;
    let mut data = Vec::with_capacity(base.as_slice().len());
    let mut u = vec![0.0; dim];
    let mut wu = vec![0.0; dim];
    for (row, src) in base.rows().enumerate() {
        for (d, s) in u.iter_mut().zip(src) {
            *d = *s as f64;
        }
        params.apply_residual(&u, &mut wu);
        if wu.iter().all(|&v| v == 0.0) {
            data.extend_from_slice(src);
            continue;
        }
        let v: Vec<f64> = u.iter().zip(&wu).map(|(a, b)| a + b).collect();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row });
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroRow { row });
        }
        data.extend(v.iter().map(|x| (x / norm) as f32));
    }
    EmbeddingSet::from_f32(Role::Student, dim, data, base.item_ids().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::dot;
    use rand::Rng;

    fn random_base(rows: usize, dim: usize, seed: u64) -> EmbeddingSet {
        let mut rng = crate::rng::stream(seed, "adapter-test", &[]);
        let data: Vec<f64> = (0..rows * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        EmbeddingSet::from_rows(Role::Base, dim, &data, (0..rows).collect()).unwrap()
    }

    #[test]
    fn identity_adapter_is_exact() {
        let base = random_base(6, 5, 1);
        let student = encode_student(&AdapterParams::identity(5), &base).unwrap();
        assert_eq!(student.as_slice(), base.as_slice());
        assert_eq!(student.role(), Role::Student);
    }

    #[test]
    fn w_identity_matrix_preserves_direction() {
        let base = random_base(4, 3, 2);
        let mut p = AdapterParams::identity(3);
        for d in 0..3 {
            p.w[d * 3 + d] = 1.0;
        }
        let student = encode_student(&p, &base).unwrap();
        for (a, b) in student.rows().zip(base.rows()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn random_w_gives_unit_rows() {
        let base = random_base(10, 6, 3);
        let mut rng = crate::rng::stream(4, "w", &[]);
        let mut p = AdapterParams::identity(6);
        p.w.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        let student = encode_student(&p, &base).unwrap();
        for r in student.rows() {
            assert!((dot(r, r).sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn minus_identity_collapses() {
        let base = random_base(2, 2, 5);
        let mut p = AdapterParams::identity(2);
        p.w[0] = -1.0;
        p.w[3] = -1.0;
        assert!(matches!(encode_student(&p, &base), Err(Error::ZeroRow { row: 0 })));
    }

    #[test]
    fn dimension_mismatch() {
        let base = random_base(2, 3, 6);
        assert!(matches!(
            encode_student(&AdapterParams::identity(4), &base),
            Err(Error::DimensionMismatch { expected: 4, found: 3 })
        ));
    }

    #[test]
    fn file_round_trip() {
        let mut p = AdapterParams::identity(3);
        p.w[4] = 0.25;
        p.provenance.config_digest = crate::digest::sha256_hex(b"cfg");
        let back = AdapterParams::from_bytes(&p.to_bytes()).unwrap();
        assert_eq!(back.w, p.w);
        assert_eq!(back.provenance.config_digest, p.provenance.config_digest);
        let bytes = p.to_bytes();
        assert!(matches!(AdapterParams::from_bytes(&bytes[..20]), Err(Error::Truncated)));
    }
}

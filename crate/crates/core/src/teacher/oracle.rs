//! Synthetic teacher with known ground truth.
//!
//! Comparisons answer "same hidden topic?" with optional label noise; each
//! unordered pair has its own random stream, so answers never depend on query
//! order. Embeddings are the topic centroid plus isotropic per-item jitter.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{CompareAnswer, ItemRef, TeacherBackend, TeacherError};
use crate::digest::json_digest;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTeacherConfig {
    pub hidden_labels: Vec<usize>,
    pub flip_rate: f64,
    pub centroids: Vec<Vec<f64>>,
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl OracleTeacherConfig {
    pub fn validate(&self) -> Result<(), TeacherError> {
        let bad = |m: String| TeacherError::Unsupported(format!("invalid oracle config: {m}"));
        if !(0.0..0.5).contains(&self.flip_rate) {
            return Err(bad(format!("flip_rate {} outside [0, 0.5)", self.flip_rate)));
        }
        if !(self.jitter_sigma >= 0.0) {
            return Err(bad("jitter_sigma must be non-negative".into()));
        }
        let k = self.centroids.len();
        if k == 0 {
            return Err(bad("no centroids".into()));
        }
        let dim = self.centroids[0].len();
        for (t, c) in self.centroids.iter().enumerate() {
            if c.len() != dim || dim == 0 {
                return Err(bad(format!("centroid {t} has inconsistent dimension")));
            }
            let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(bad(format!("centroid {t} is not unit norm")));
            }
        }
        if let Some((i, &l)) = self.hidden_labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(bad(format!("item {i} has hidden label {l} >= {k}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    fn label(&self, id: usize) -> Result<usize, TeacherError> {
        self.hidden_labels.get(id).copied().ok_or(TeacherError::UnknownItem(id))
    }

    /// Teacher-space vector of an item: `normalize(centroid + sigma * jitter)`.
    pub fn item_vector(&self, id: usize) -> Result<Vec<f64>, TeacherError> {
        let c = &self.centroids[self.label(id)?];
        if self.jitter_sigma == 0.0 {
            return Ok(c.clone());
        }
        let xi = item_jitter(self.seed, id, c.len());
        let v: Vec<f64> = c.iter().zip(&xi).map(|(c, x)| c + self.jitter_sigma * x).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(v.into_iter().map(|x| x / n).collect())
    }
}

/// Per-item latent jitter: `dim` standard normals scaled by `1/sqrt(dim)`, so
/// its expected squared norm is 1.
pub fn item_jitter(seed: u64, id: usize, dim: usize) -> Vec<f64> {
    let mut rng = stream(seed, "oracle-jitter", &[id as u64]);
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect()
}

/// Same-topic judgment for items `i` and `j`, flipped with probability
/// `flip_rate` by a stream keyed on the unordered pair.
pub fn oracle_compare(cfg: &OracleTeacherConfig, i: usize, j: usize) -> Result<u8, TeacherError> {
    let same = cfg.label(i)? == cfg.label(j)?;
    let (lo, hi) = (i.min(j) as u64, i.max(j) as u64);
    let flip = cfg.flip_rate > 0.0 && {
        let mut rng = stream(cfg.seed, "oracle-flip", &[lo, hi]);
        rng.random::<f64>() < cfg.flip_rate
    };
    Ok(u8::from(same != flip))
}

pub struct OracleTeacher {
    cfg: OracleTeacherConfig,
    identity: String,
}

impl OracleTeacher {
    pub fn new(cfg: OracleTeacherConfig) -> Result<Self, TeacherError> {
        cfg.validate()?;
        let digest = json_digest(&cfg).map_err(|e| TeacherError::Unsupported(e.to_string()))?;
        Ok(OracleTeacher {
            identity: format!("oracle:{}", &digest[..16]),
            cfg,
        })
    }

    pub fn config(&self) -> &OracleTeacherConfig {
        &self.cfg
    }
}

impl TeacherBackend for OracleTeacher {
    fn identity(&self) -> String {
        self.identity.clone()
    }

    fn compare_key(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> String {
        format!("{}:{}", a.id.min(b.id), a.id.max(b.id))
    }

    fn embed_key(&self, item: ItemRef<'_>) -> String {
        item.id.to_string()
    }

    fn compare(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> Result<CompareAnswer, TeacherError> {
        let label = oracle_compare(&self.cfg, a.id, b.id)?;
        Ok(CompareAnswer {
            raw: serde_json::json!(if label == 1 { "Yes" } else { "No" }),
            label,
        })
    }

    fn embed(&self, items: &[ItemRef<'_>]) -> Result<Vec<Vec<f64>>, TeacherError> {
        items.iter().map(|it| self.cfg.item_vector(it.id)).collect()
    }
}

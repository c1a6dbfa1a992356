//! Synthetic corpora with known topics and a deliberately coarse base model.
//!
//! Topics are orthonormal centroids `C_k`. Item `i` of topic `k` has the
//! latent vector `t_i = C_k + sigma * xi_i`, where `xi_i` is the oracle's
//! per-item jitter. The teacher sees `normalize(t_i)`. Topics are paired
//! `(0, 1), (2, 3), ...`; with `E_p = (C_2p - C_2p+1) / sqrt(2)` the base
//! embedding is
//!
//! ```text
//! normalize(t_i - (1 - eps) * sum_p (t_i . E_p) E_p),   eps = clamp(rho * sigma, 0, 1)
//! ```
//!
//! so the base model can barely tell paired topics apart, but the missing
//! direction is a linear function of what it still sees. With zero jitter,
//! items of paired topics have base cosine exactly 1.

use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::{EmbeddingSet, Role};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::teacher::{item_jitter, OracleTeacherConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub topics: usize,
    pub per_topic: usize,
    pub dim: usize,
    pub jitter_sigma: f64,
    /// How much of the within-pair direction the base keeps, per unit of jitter.
    pub base_resolution: f64,
    /// Oracle comparison noise.
    pub flip_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            topics: 8,
            per_topic: 50,
            dim: 32,
            jitter_sigma: 0.5,
            base_resolution: 0.5,
            flip_rate: 0.0,
            seed: 0,
        }
    }
}

pub struct SyntheticInstance {
    pub corpus: Corpus,
    pub base: EmbeddingSet,
    pub oracle: OracleTeacherConfig,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.topics < 2 {
            return Err(Error::invalid("need at least 2 topics"));
        }
        if self.dim < self.topics {
            return Err(Error::invalid(format!(
                "dim {} cannot hold {} orthonormal centroids",
                self.dim, self.topics
            )));
        }
        if self.per_topic == 0 {
            return Err(Error::invalid("per_topic must be positive"));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::invalid("jitter_sigma must be finite and non-negative"));
        }
        if !(self.base_resolution >= 0.0 && self.base_resolution.is_finite()) {
            return Err(Error::invalid("base_resolution must be finite and non-negative"));
        }
        if !(0.0..0.5).contains(&self.flip_rate) {
            return Err(Error::invalid("flip_rate must lie in [0, 0.5)"));
        }
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.topics * self.per_topic
    }

    /// Topic of item `id`; topics are interleaved across ids.
    pub fn topic_of(&self, id: usize) -> usize {
        id % self.topics
    }
}

fn centroids(spec: &SyntheticSpec) -> Vec<Vec<f64>> {
    let mut rng = stream(spec.seed, "synthetic-centroids", &[]);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(spec.topics);
    while out.len() < spec.topics {
        let mut v: Vec<f64> = (0..spec.dim).map(|_| rng.sample(StandardNormal)).collect();
        // two passes of Gram-Schmidt for numerical orthogonality
        for _ in 0..2 {
            for c in &out {
                let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticInstance> {
    spec.validate()?;
    let cs = centroids(spec);
    let pair_dirs: Vec<Vec<f64>> = (0..spec.topics / 2)
        .map(|p| {
            cs[2 * p]
                .iter()
                .zip(&cs[2 * p + 1])
                .map(|(a, b)| (a - b) / 2f64.sqrt())
                .collect()
        })
        .collect();
    let keep = (spec.base_resolution * spec.jitter_sigma).clamp(0.0, 1.0);

    let n = spec.n_items();
    let mut base = Vec::with_capacity(n * spec.dim);
    let mut records = Vec::with_capacity(n);
    for id in 0..n {
        let k = spec.topic_of(id);
        let mut t = cs[k].clone();
        if spec.jitter_sigma > 0.0 {
            let xi = item_jitter(spec.seed, id, spec.dim);
            t.iter_mut().zip(&xi).for_each(|(a, x)| *a += spec.jitter_sigma * x);
        }
        for e in &pair_dirs {
            let p: f64 = t.iter().zip(e).map(|(a, b)| a * b).sum();
            t.iter_mut().zip(e).for_each(|(a, b)| *a -= (1.0 - keep) * p * b);
        }
        base.extend(t);
        records.push((
            id.to_string(),
            format!("synthetic item {id}"),
            Some(format!("t{k}")),
        ));
    }
    let corpus = Corpus::from_records(records)?;
    let base = EmbeddingSet::from_rows(Role::Base, spec.dim, &base, (0..n).collect())?;
    let oracle = OracleTeacherConfig {
        hidden_labels: (0..n).map(|id| spec.topic_of(id)).collect(),
        flip_rate: spec.flip_rate,
        centroids: cs,
        jitter_sigma: spec.jitter_sigma,
        seed: spec.seed,
    };
    Ok(SyntheticInstance { corpus, base, oracle })
}

/// Writes `corpus.jsonl`, `base.prsm`, `oracle.json`, and a starter
/// `pipeline.toml` into `out_dir`.
pub fn cmd_gen_synthetic(spec: &SyntheticSpec, out_dir: &Path) -> Result<SyntheticInstance> {
    let inst = generate(spec)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    inst.corpus.save(&out_dir.join("corpus.jsonl"))?;
    inst.base.save(&out_dir.join("base.prsm"))?;
    let oracle_path = out_dir.join("oracle.json");
    let json = serde_json::to_string_pretty(&inst.oracle)?;
    std::fs::write(&oracle_path, json).map_err(|e| Error::io(&oracle_path, e))?;
    let cfg_path = out_dir.join("pipeline.toml");
    let cfg = super::PipelineConfig::synthetic_default(spec.seed);
    let text = toml::to_string_pretty(&cfg).map_err(|e| Error::invalid(format!("toml: {e}")))?;
    std::fs::write(&cfg_path, text).map_err(|e| Error::io(&cfg_path, e))?;
    Ok(inst)
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::teacher::{HttpTeacher, HttpTeacherConfig, OracleTeacher, OracleTeacherConfig, Teacher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TeacherKind {
    #[default]
    Oracle,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherSpec {
    pub kind: TeacherKind,
    /// Oracle configuration file (for `kind = "oracle"`).
    pub oracle: Option<PathBuf>,
    pub http: Option<HttpTeacherConfig>,
    /// Response cache directory; caching is off when absent.
    pub cache_dir: Option<PathBuf>,
}

/// Which items are clustered and scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClusterScope {
    #[default]
    All,
    HeldOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingPlan {
    /// Fraction of corpus items used for training pairs. The remaining items
    /// supply the validation and test comparison sets.
    pub train_fraction: f64,
    pub rb_train: usize,
    pub fr_train: usize,
    /// Items sampled for the teacher-embedding dataset; 0 disables it.
    pub emb_items: usize,
    pub rb_val: usize,
    pub rb_test: usize,
    /// Random draws before the range-bound sampler falls back to enumeration.
    pub max_attempts: usize,
    pub cluster_scope: ClusterScope,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            train_fraction: 0.5,
            rb_train: 1000,
            fr_train: 0,
            emb_items: 0,
            rb_val: 1000,
            rb_test: 1000,
            max_attempts: 1_000_000,
            cluster_scope: ClusterScope::All,
        }
    }
}

/// Declarative run description. Relative paths resolve against the directory
/// holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub base_embeddings: PathBuf,
    #[serde(default)]
    pub teacher: TeacherSpec,
    #[serde(default)]
    pub sampling: SamplingPlan,
    #[serde(default)]
    pub params: RunConfig,
}

impl PipelineConfig {
    /// Config matching the files written by the synthetic generator.
    pub fn synthetic_default(seed: u64) -> Self {
        PipelineConfig {
            corpus: "corpus.jsonl".into(),
            base_embeddings: "base.prsm".into(),
            teacher: TeacherSpec {
                kind: TeacherKind::Oracle,
                oracle: Some("oracle.json".into()),
                http: None,
                cache_dir: Some("cache".into()),
            },
            sampling: SamplingPlan {
                emb_items: 80,
                ..SamplingPlan::default()
            },
            params: RunConfig {
                seed,
                learning_rate: 3e-3,
                epochs: 10,
                ..RunConfig::default()
            },
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
        let root = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(root);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, root: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = root.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.base_embeddings);
        if let Some(p) = self.teacher.oracle.as_mut() {
            fix(p);
        }
        if let Some(p) = self.teacher.cache_dir.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate_for_run()?;
        let s = &self.sampling;
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            return Err(Error::invalid("train_fraction must lie in (0, 1)"));
        }
        if s.rb_train + s.fr_train + s.emb_items == 0 {
            return Err(Error::invalid("no training data requested"));
        }
        if s.emb_items == 1 {
            return Err(Error::invalid("emb_items must be 0 or at least 2"));
        }
        if self.params.tau.is_none() && s.rb_val == 0 {
            return Err(Error::invalid("automatic tau needs validation pairs (rb_val > 0)"));
        }
        match self.teacher.kind {
            TeacherKind::Oracle if self.teacher.oracle.is_none() => {
                Err(Error::invalid("oracle teacher needs `teacher.oracle`"))
            }
            _ => Ok(()),
        }
    }

    pub fn build_teacher(&self) -> Result<Teacher> {
        let cache = self.teacher.cache_dir.clone();
        let teacher = match self.teacher.kind {
            TeacherKind::Oracle => {
                let path = self.teacher.oracle.as_ref().expect("validated");
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                let cfg: OracleTeacherConfig = serde_json::from_str(&text)?;
                Teacher::new(Box::new(OracleTeacher::new(cfg)?), cache)?
            }
            TeacherKind::Http => {
                let cfg = self.teacher.http.clone().unwrap_or_default();
                Teacher::new(Box::new(HttpTeacher::new(cfg)?), cache)?
            }
        };
        Ok(teacher)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_resolution() {
        let cfg = PipelineConfig::synthetic_default(3);
        let text = toml::to_string_pretty(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pipeline.toml");
        std::fs::write(&p, text).unwrap();
        let back = PipelineConfig::load(&p).unwrap();
        assert_eq!(back.params, cfg.params);
        assert_eq!(back.corpus, dir.path().join("corpus.jsonl"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "corpus = \"c\"\nbase_embeddings = \"b\"\nbogus = 1\n";
        assert!(toml::from_str::<PipelineConfig>(text).is_err());
    }

    #[test]
    fn minimal_config() {
        let text = "corpus = \"c.jsonl\"\nbase_embeddings = \"b.prsm\"\n[teacher]\noracle = \"o.json\"\n[params]\ntau = 0.8\n";
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.params.tau, Some(0.8));
        assert_eq!(cfg.sampling.rb_train, 1000);
    }
}

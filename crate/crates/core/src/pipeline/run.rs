use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{ClusterScope, PipelineConfig};
use super::manifest::{Manifest, RunLock, StageRecord};
use crate::cluster::{cluster_count_fraction, community_detect, load_clusters, save_clusters};
use crate::corpus::{load_corpus, Corpus};
use crate::digest::{file_digest, json_digest, sha256_hex};
use crate::distill::{encode_student, train_adapter, AdapterParams};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::metrics::{
    aupc, aupc_on_domain, cluster_purity, f1_at, pair_scores, pairwise_auc, pareto_scan, tune_threshold_f1,
    write_curve_csv, write_summary_csv, ParetoCurve,
};
use crate::pairs::{PairDataset, Provenance, Split};
use crate::rng::stream;
use crate::sampling::{
    embedding_dataset_for, label_pairs, sample_full_range, sample_items, sample_range_bound, UnlabeledPair,
};
use crate::teacher::Teacher;

/// Fixed run-directory layout, relative to the run root.
pub mod paths {
    pub const SAMPLE: &str = "datasets/sample.json";
    pub const RB_TRAIN: &str = "datasets/rb_train.jsonl";
    pub const FR_TRAIN: &str = "datasets/fr_train.jsonl";
    pub const EMB_TRAIN: &str = "datasets/emb_train.jsonl";
    pub const EMB_TEACHER: &str = "datasets/emb_teacher.prsm";
    pub const RB_VAL: &str = "datasets/rb_val.jsonl";
    pub const RB_TEST: &str = "datasets/rb_test.jsonl";
    pub const ADAPTER: &str = "models/adapter.prsa";
    pub const TRAIN_REPORT: &str = "models/train_report.json";
    pub const STUDENT: &str = "models/student.prsm";
    pub const TUNE: &str = "metrics/tune.json";
    pub const CLUSTERS: &str = "clusters/clusters.jsonl";
    pub const METRICS: &str = "metrics/metrics.json";
    pub const PARETO_STUDENT: &str = "metrics/pareto_student.csv";
    pub const PARETO_STUDENT_SUMMARY: &str = "metrics/pareto_student_summary.csv";
    pub const PARETO_BASE: &str = "metrics/pareto_base.csv";
    pub const PARETO_BASE_SUMMARY: &str = "metrics/pareto_base_summary.csv";
    pub const SWEEP: &str = "metrics/sweep.csv";
}

/// Item split and unlabeled pairs drawn by the sample stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFile {
    pub train_items: Vec<usize>,
    pub held_out_items: Vec<usize>,
    pub rb_train: Vec<UnlabeledPair>,
    pub fr_train: Vec<UnlabeledPair>,
    pub emb_items: Vec<usize>,
    pub rb_val: Vec<UnlabeledPair>,
    pub rb_test: Vec<UnlabeledPair>,
}

impl SampleFile {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub tau: f64,
    /// F1 on the validation pairs at `tau`, when they exist.
    pub f1: Option<f64>,
    pub manual: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AupcSummary {
    pub normalized: f64,
    pub raw: f64,
    pub x_min: f64,
    pub x_max: f64,
}

impl AupcSummary {
    pub fn of(curve: &ParetoCurve) -> Result<Self> {
        Ok(AupcSummary {
            normalized: aupc(curve)?,
            raw: curve.aupc_raw(),
            x_min: curve.x_min,
            x_max: curve.x_max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub file: String,
    pub provenance: Provenance,
    pub split: Split,
    pub records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub tau: f64,
    pub tau_manual: bool,
    pub f1_val: Option<f64>,
    pub auc_base_test: Option<f64>,
    pub auc_student_test: Option<f64>,
    pub items_clustered: usize,
    pub clusters: usize,
    pub singletons: usize,
    pub cluster_fraction: f64,
    pub purity: Option<f64>,
    pub aupc_student: Option<AupcSummary>,
    pub aupc_base: Option<AupcSummary>,
    /// Intersection of the two curve domains.
    pub shared_domain: Option<(f64, f64)>,
    pub aupc_student_shared: Option<f64>,
    pub aupc_base_shared: Option<f64>,
    pub datasets: Vec<DatasetSummary>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    /// Stages that executed; the rest were already up to date.
    pub executed: Vec<String>,
    pub teacher_requests: usize,
    pub metrics: EvalMetrics,
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Training datasets requested by the plan, in weight order (rb, fr, emb).
pub(crate) fn training_files(cfg: &PipelineConfig) -> Vec<&'static str> {
    let s = &cfg.sampling;
    let mut out = Vec::new();
    if s.rb_train > 0 {
        out.push(paths::RB_TRAIN);
    }
    if s.fr_train > 0 {
        out.push(paths::FR_TRAIN);
    }
    if s.emb_items > 0 {
        out.push(paths::EMB_TRAIN);
    }
    out
}

fn label_outputs(cfg: &PipelineConfig) -> Vec<&'static str> {
    let mut out = training_files(cfg);
    if cfg.sampling.emb_items > 0 {
        out.push(paths::EMB_TEACHER);
    }
    if cfg.sampling.rb_val > 0 {
        out.push(paths::RB_VAL);
    }
    if cfg.sampling.rb_test > 0 {
        out.push(paths::RB_TEST);
    }
    out
}

/// Executes pipeline stages in a run directory, skipping stages whose inputs
/// and outputs match the manifest.
pub struct Runner<'c> {
    dir: PathBuf,
    cfg: &'c PipelineConfig,
    manifest: Manifest,
    teacher: Option<Teacher>,
    completed: Vec<PathBuf>,
    config_digest: String,
    executed: Vec<String>,
    requests: usize,
    _lock: RunLock,
}

impl<'c> Runner<'c> {
    pub fn open(cfg: &'c PipelineConfig, dir: &Path) -> Result<Self> {
        for sub in ["datasets", "models", "clusters", "metrics"] {
            let p = dir.join(sub);
            std::fs::create_dir_all(&p).map_err(|e| Error::io(p, e))?;
        }
        let lock = RunLock::acquire(dir)?;
        // digest of everything but the file locations
        let mut portable = cfg.clone();
        portable.corpus = PathBuf::new();
        portable.base_embeddings = PathBuf::new();
        portable.teacher.oracle = None;
        portable.teacher.cache_dir = None;
        let config_digest = json_digest(&portable)?;
        let mut manifest = Manifest::load(dir)?.unwrap_or_default();
        manifest.config_digest = config_digest.clone();
        manifest.seed = cfg.params.seed;
        Ok(Runner {
            dir: dir.to_path_buf(),
            cfg,
            manifest,
            teacher: None,
            completed: Vec::new(),
            config_digest,
            executed: Vec::new(),
            requests: 0,
            _lock: lock,
        })
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    fn teacher(&mut self) -> Result<&Teacher> {
        if self.teacher.is_none() {
            let t = self.cfg.build_teacher()?;
            self.manifest.teacher = Some(t.identity());
            self.teacher = Some(t);
        }
        Ok(self.teacher.as_ref().expect("just built"))
    }

    fn teacher_requests(&self) -> usize {
        self.teacher.as_ref().map_or(0, Teacher::requests)
    }

    fn external_inputs(&self, which: &[&str]) -> Vec<(String, PathBuf)> {
        let mut out = Vec::new();
        for &w in which {
            match w {
                "corpus" => out.push((w.to_string(), self.cfg.corpus.clone())),
                "base_embeddings" => out.push((w.to_string(), self.cfg.base_embeddings.clone())),
                "oracle" => {
                    if let Some(p) = &self.cfg.teacher.oracle {
                        out.push((w.to_string(), p.clone()));
                    }
                }
                _ => unreachable!("unknown external input {w}"),
            }
        }
        out
    }

    fn stage<F>(&mut self, name: &str, mut inputs: Vec<(String, PathBuf)>, internal: &[&str], outputs: &[&str], body: F) -> Result<()>
    where
        F: FnOnce(&mut Self) -> Result<String>,
    {
        for rel in internal {
            inputs.push((rel.to_string(), self.path(rel)));
        }
        let result = self.stage_inner(name, &inputs, outputs, body);
        result.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: name.to_string(),
                completed: self.completed.clone(),
                source: Box::new(e),
            },
        })
    }

    fn stage_inner<F>(&mut self, name: &str, inputs: &[(String, PathBuf)], outputs: &[&str], body: F) -> Result<()>
    where
        F: FnOnce(&mut Self) -> Result<String>,
    {
        let mut input_digests = BTreeMap::new();
        for (label, path) in inputs {
            input_digests.insert(label.clone(), file_digest(path)?);
        }
        let input_digest = sha256_hex(
            serde_json::to_string(&(name, &self.config_digest, &input_digests))?.as_bytes(),
        );
        if let Some(rec) = self.manifest.stage(name) {
            let fresh = rec.input_digest == input_digest
                && rec.outputs.len() == outputs.len()
                && outputs.iter().all(|rel| {
                    rec.outputs.get(*rel).is_some_and(|d| file_digest(&self.path(rel)).ok().as_ref() == Some(d))
                });
            if fresh {
                log::info!("stage {name}: up to date");
                let done: Vec<PathBuf> = outputs.iter().map(|rel| self.path(rel)).collect();
                self.completed.extend(done);
                return Ok(());
            }
        }
        log::info!("stage {name}: running");
        let before = self.teacher_requests();
        let status = body(self)?;
        let teacher_requests = self.teacher_requests() - before;
        self.requests += teacher_requests;
        let mut output_digests = BTreeMap::new();
        for rel in outputs {
            output_digests.insert(rel.to_string(), file_digest(&self.path(rel))?);
            self.completed.push(self.path(rel));
        }
        self.manifest.record(StageRecord {
            name: name.to_string(),
            status,
            input_digest,
            inputs: input_digests,
            outputs: output_digests,
            teacher_requests,
        });
        self.manifest.save(&self.dir)?;
        self.executed.push(name.to_string());
        Ok(())
    }

    pub fn run_sample(&mut self) -> Result<()> {
        let inputs = self.external_inputs(&["corpus", "base_embeddings"]);
        self.stage("sample", inputs, &[], &[paths::SAMPLE], |r| {
            let sample = draw_samples(r.cfg)?;
            write_json(&r.path(paths::SAMPLE), &sample)?;
            Ok("complete".into())
        })
    }

    pub fn run_label(&mut self) -> Result<()> {
        let inputs = self.external_inputs(&["corpus", "oracle"]);
        let outputs = label_outputs(self.cfg);
        self.stage("label", inputs, &[paths::SAMPLE], &outputs, |r| {
            let sample = SampleFile::load(&r.path(paths::SAMPLE))?;
            r.teacher()?;
            let teacher = r.teacher.as_ref().expect("built above");
            label_samples(r.cfg, &sample, teacher, &r.dir)?;
            Ok("complete".into())
        })
    }

    pub fn run_train(&mut self) -> Result<()> {
        let inputs = self.external_inputs(&["base_embeddings"]);
        let files = training_files(self.cfg);
        self.stage("train", inputs, &files, &[paths::ADAPTER, paths::TRAIN_REPORT], |r| {
            let datasets = files
                .iter()
                .map(|rel| PairDataset::load(&r.path(rel)))
                .collect::<Result<Vec<_>>>()?;
            let base = EmbeddingSet::load(&r.cfg.base_embeddings)?;
            r.cfg.params.validate_for_run()?;
            let (params, report) = train_adapter(&datasets, &base, &r.cfg.params)?;
            params.save(&r.path(paths::ADAPTER))?;
            write_json(&r.path(paths::TRAIN_REPORT), &report)?;
            Ok("complete".into())
        })
    }

    pub fn run_encode(&mut self) -> Result<()> {
        let inputs = self.external_inputs(&["base_embeddings"]);
        self.stage("encode", inputs, &[paths::ADAPTER], &[paths::STUDENT], |r| {
            let params = AdapterParams::load(&r.path(paths::ADAPTER))?;
            let base = EmbeddingSet::load(&r.cfg.base_embeddings)?;
            encode_student(&params, &base)?.save(&r.path(paths::STUDENT))?;
            Ok("complete".into())
        })
    }

    pub fn run_tune(&mut self) -> Result<()> {
        let mut internal = vec![paths::STUDENT];
        if self.cfg.sampling.rb_val > 0 {
            internal.push(paths::RB_VAL);
        }
        self.stage("tune", Vec::new(), &internal, &[paths::TUNE], |r| {
            let student = EmbeddingSet::load(&r.path(paths::STUDENT))?;
            let val = if r.cfg.sampling.rb_val > 0 {
                Some(PairDataset::load(&r.path(paths::RB_VAL))?)
            } else {
                None
            };
            let (result, status) = match (r.cfg.params.tau, &val) {
                (Some(tau), val) => {
                    let f1 = match val {
                        Some(v) => {
                            let labels = crate::metrics::binary_labels(v)?;
                            Some(f1_at(&pair_scores(&student, v)?, &labels, tau))
                        }
                        None => None,
                    };
                    (TuneResult { tau, f1, manual: true }, "skipped: manual τ")
                }
                (None, Some(v)) => {
                    let c = tune_threshold_f1(&student, v)?;
                    (
                        TuneResult {
                            tau: c.tau,
                            f1: Some(c.f1),
                            manual: false,
                        },
                        "complete",
                    )
                }
                (None, None) => return Err(Error::invalid("automatic tau needs validation pairs")),
            };
            write_json(&r.path(paths::TUNE), &result)?;
            Ok(status.into())
        })
    }

    fn scope_items(&self, corpus: &Corpus) -> Result<Vec<usize>> {
        Ok(match self.cfg.sampling.cluster_scope {
            ClusterScope::All => corpus.ids(),
            ClusterScope::HeldOut => read_json::<SampleFile>(&self.path(paths::SAMPLE))?.held_out_items,
        })
    }

    pub fn run_cluster(&mut self) -> Result<()> {
        let inputs = self.external_inputs(&["corpus"]);
        self.stage("cluster", inputs, &[paths::SAMPLE, paths::STUDENT, paths::TUNE], &[paths::CLUSTERS], |r| {
            let tune: TuneResult = read_json(&r.path(paths::TUNE))?;
            let corpus = load_corpus(&r.cfg.corpus)?;
            let student = EmbeddingSet::load(&r.path(paths::STUDENT))?;
            let scoped = student.subset(&r.scope_items(&corpus)?)?;
            let result = community_detect(&scoped, tune.tau, r.cfg.params.min_cluster_size)?;
            save_clusters(&result, &student.digest(), &r.path(paths::CLUSTERS))?;
            Ok("complete".into())
        })
    }

    pub fn run_evaluate(&mut self) -> Result<()> {
        let inputs = self.external_inputs(&["corpus", "base_embeddings"]);
        let mut internal = vec![paths::SAMPLE, paths::STUDENT, paths::TUNE, paths::CLUSTERS];
        internal.extend(training_files(self.cfg));
        if self.cfg.sampling.rb_val > 0 {
            internal.push(paths::RB_VAL);
        }
        if self.cfg.sampling.rb_test > 0 {
            internal.push(paths::RB_TEST);
        }
        let outputs = [
            paths::METRICS,
            paths::PARETO_STUDENT,
            paths::PARETO_STUDENT_SUMMARY,
            paths::PARETO_BASE,
            paths::PARETO_BASE_SUMMARY,
        ];
        let dataset_files: Vec<&str> = internal
            .iter()
            .copied()
            .filter(|p| p.ends_with(".jsonl") && p.starts_with("datasets/"))
            .collect();
        self.stage("evaluate", inputs, &internal, &outputs, |r| {
            let metrics = r.evaluate(&dataset_files)?;
            write_json(&r.path(paths::METRICS), &metrics)?;
            Ok("complete".into())
        })
    }

    fn evaluate(&self, dataset_files: &[&str]) -> Result<EvalMetrics> {
        let corpus = load_corpus(&self.cfg.corpus)?;
        let base = EmbeddingSet::load(&self.cfg.base_embeddings)?;
        let student = EmbeddingSet::load(&self.path(paths::STUDENT))?;
        let tune: TuneResult = read_json(&self.path(paths::TUNE))?;
        let (clusters, digest) = load_clusters(&self.path(paths::CLUSTERS))?;
        if digest != student.digest() {
            return Err(Error::invalid("cluster file does not match the student embeddings"));
        }

        let mut datasets = Vec::new();
        for rel in dataset_files {
            let ds = PairDataset::load(&self.path(rel))?;
            datasets.push(DatasetSummary {
                file: rel.to_string(),
                provenance: ds.provenance,
                split: ds.split,
                records: ds.len(),
            });
        }
        let (auc_base_test, auc_student_test) = if self.cfg.sampling.rb_test > 0 {
            let test = PairDataset::load(&self.path(paths::RB_TEST))?;
            (Some(pairwise_auc(&base, &test)?), Some(pairwise_auc(&student, &test)?))
        } else {
            (None, None)
        };

        let scope = self.scope_items(&corpus)?;
        let labels = corpus.gold_labels();
        let labeled = scope.iter().all(|&id| labels[id].is_some());
        let include = self.cfg.params.include_singletons;
        let purity = if labeled {
            Some(cluster_purity(&clusters, &labels, include)?)
        } else {
            log::warn!("corpus lacks gold labels; purity and Pareto curves skipped");
            None
        };

        let mut m = EvalMetrics {
            tau: tune.tau,
            tau_manual: tune.manual,
            f1_val: tune.f1,
            auc_base_test,
            auc_student_test,
            items_clustered: clusters.n_items,
            clusters: clusters.clusters.len(),
            singletons: clusters.singletons.len(),
            cluster_fraction: cluster_count_fraction(&clusters, clusters.n_items),
            purity,
            aupc_student: None,
            aupc_base: None,
            shared_domain: None,
            aupc_student_shared: None,
            aupc_base_shared: None,
            datasets,
        };
        let csvs = [
            (paths::PARETO_STUDENT, paths::PARETO_STUDENT_SUMMARY),
            (paths::PARETO_BASE, paths::PARETO_BASE_SUMMARY),
        ];
        if labeled {
            let taus = self.cfg.params.tau_grid.values();
            let min = self.cfg.params.min_cluster_size;
            let sc = pareto_scan(&student.subset(&scope)?, &labels, &taus, min, include)?;
            let bc = pareto_scan(&base.subset(&scope)?, &labels, &taus, min, include)?;
            for (curve, (table, summary)) in [&sc, &bc].into_iter().zip(csvs) {
                write_curve_csv(curve, &self.path(table))?;
                write_summary_csv(curve, &self.path(summary))?;
            }
            m.aupc_student = AupcSummary::of(&sc).ok();
            m.aupc_base = AupcSummary::of(&bc).ok();
            let (lo, hi) = (sc.x_min.max(bc.x_min), sc.x_max.min(bc.x_max));
            if lo < hi {
                m.shared_domain = Some((lo, hi));
                m.aupc_student_shared = Some(aupc_on_domain(&sc, lo, hi)?);
                m.aupc_base_shared = Some(aupc_on_domain(&bc, lo, hi)?);
            }
        } else {
            for (table, summary) in csvs {
                std::fs::write(self.path(table), "tau,cluster_fraction,purity,on_envelope\n")
                    .map_err(|e| Error::io(self.path(table), e))?;
                std::fs::write(self.path(summary), "aupc_normalized,aupc_raw,x_min,x_max\n")
                    .map_err(|e| Error::io(self.path(summary), e))?;
            }
        }
        Ok(m)
    }

    pub fn finish(self) -> (Vec<String>, usize) {
        (self.executed, self.requests)
    }
}

/// Labels every pair set in `sample` with the teacher and writes the
/// datasets under `root` using the run-directory layout.
pub fn label_samples(cfg: &PipelineConfig, sample: &SampleFile, teacher: &Teacher, root: &Path) -> Result<()> {
    let corpus = load_corpus(&cfg.corpus)?;
    let band = Some(cfg.params.band);
    let jobs = [
        (&sample.rb_train, paths::RB_TRAIN, Provenance::RangeBound, Split::Train, band),
        (&sample.fr_train, paths::FR_TRAIN, Provenance::FullRange, Split::Train, None),
        (&sample.rb_val, paths::RB_VAL, Provenance::RangeBound, Split::Val, band),
        (&sample.rb_test, paths::RB_TEST, Provenance::RangeBound, Split::Test, band),
    ];
    for (pairs, rel, prov, split, band) in jobs {
        if pairs.is_empty() {
            continue;
        }
        let path = root.join(rel);
        create_parent(&path)?;
        label_pairs(pairs, &corpus, teacher, prov, split, band)?.save(&path)?;
    }
    if !sample.emb_items.is_empty() {
        let (ds, set) = embedding_dataset_for(&sample.emb_items, &corpus, teacher)?;
        let path = root.join(paths::EMB_TRAIN);
        create_parent(&path)?;
        ds.save(&path)?;
        set.save(&root.join(paths::EMB_TEACHER))?;
    }
    Ok(())
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) => std::fs::create_dir_all(p).map_err(|e| Error::io(p, e)),
        None => Ok(()),
    }
}

/// Splits items into train and held-out sets and draws every unlabeled pair
/// set in the plan. Validation and test pairs come from held-out items and
/// never share a pair.
pub fn draw_samples(cfg: &PipelineConfig) -> Result<SampleFile> {
    let corpus = load_corpus(&cfg.corpus)?;
    let base = EmbeddingSet::load(&cfg.base_embeddings)?;
    if let Some(id) = corpus.ids().into_iter().find(|&id| !base.contains(id)) {
        return Err(Error::invalid(format!("base embeddings lack corpus item {id}")));
    }
    let seed = cfg.params.seed;
    let plan = &cfg.sampling;
    let mut items = corpus.ids();
    items.shuffle(&mut stream(seed, "split-items", &[]));
    let n_train = (plan.train_fraction * items.len() as f64).round() as usize;
    let mut held_out_items = items.split_off(n_train.min(items.len()));
    let mut train_items = items;
    train_items.sort_unstable();
    held_out_items.sort_unstable();

    let band = cfg.params.band;
    let rb = |items: &[usize], m: usize, tag: &str| -> Result<Vec<UnlabeledPair>> {
        if m == 0 {
            return Ok(Vec::new());
        }
        sample_range_bound(items, &base, m, band, &mut stream(seed, tag, &[]), plan.max_attempts)
    };
    let rb_train = rb(&train_items, plan.rb_train, "sample-rb-train")?;
    let fr_train = if plan.fr_train > 0 {
        sample_full_range(&train_items, plan.fr_train, &mut stream(seed, "sample-fr-train", &[]))?
    } else {
        Vec::new()
    };
    let emb_items = if plan.emb_items > 0 {
        sample_items(&train_items, plan.emb_items, &mut stream(seed, "sample-emb", &[]))?
    } else {
        Vec::new()
    };
    let mut rb_val = rb(&held_out_items, plan.rb_val + plan.rb_test, "sample-rb-eval")?;
    let rb_test = rb_val.split_off(plan.rb_val);
    Ok(SampleFile {
        train_items,
        held_out_items,
        rb_train,
        fr_train,
        emb_items,
        rb_val,
        rb_test,
    })
}

/// Runs every stage in order and returns the evaluation metrics.
pub fn cmd_run(config_path: &Path, run_dir: &Path) -> Result<RunSummary> {
    let cfg = PipelineConfig::load(config_path)?;
    run_with_config(&cfg, run_dir)
}

pub fn run_with_config(cfg: &PipelineConfig, run_dir: &Path) -> Result<RunSummary> {
    cfg.validate()?;
    let mut r = Runner::open(cfg, run_dir)?;
    r.run_sample()?;
    r.run_label()?;
    r.run_train()?;
    r.run_encode()?;
    r.run_tune()?;
    r.run_cluster()?;
    r.run_evaluate()?;
    let metrics: EvalMetrics = read_json(&run_dir.join(paths::METRICS))?;
    let (executed, teacher_requests) = r.finish();
    Ok(RunSummary {
        run_dir: run_dir.to_path_buf(),
        executed,
        teacher_requests,
        metrics,
    })
}
